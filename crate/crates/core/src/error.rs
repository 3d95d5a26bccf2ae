use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("space invariant violated: {0}")]
    Invariant(String),

    #[error("unsupported model family `{0}`")]
    UnsupportedFamily(String),

    #[error("{family} needs at least {need} points, got {got}")]
    TooFewPoints {
        family: String,
        got: usize,
        need: usize,
    },

    #[error("marginal is not a probability vector (total mass {0})")]
    NotNormalized(f64),

    #[error("spaces do not share an ambient space")]
    NoSharedAmbient,

    #[error("problem size {size} exceeds budget {budget}")]
    OverBudget { size: usize, budget: usize },

    #[error("graph is disconnected at bandwidth {bandwidth}; try a bandwidth of at least {suggested}")]
    Disconnected { bandwidth: f64, suggested: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("kernel row has negative mass {mass:e} at step {dt}; use steps of at least {suggested_t_pos}")]
    NegativeKernel {
        mass: f64,
        dt: f64,
        suggested_t_pos: f64,
    },

    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("cache mismatch: {0}")]
    CacheMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

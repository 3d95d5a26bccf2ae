use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::brownian::{default_path_grid, PathLawMode, DEFAULT_T_MAX};
use crate::error::{invalid, Error, Result};
use crate::heat::{Bandwidth, DEFAULT_EIG_BUDGET};
use crate::space::{build_model_space, cone_space, io::read_space, weighted_space, FiniteMMSpace, ModelFamily};

/// How to obtain one space of the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceRecipe {
    Model {
        family: ModelFamily,
        n: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Cone of curvature parameter `k` and dimension `n_dim` over a model space.
    Cone {
        family: ModelFamily,
        n: usize,
        #[serde(default = "one")]
        scale: f64,
        k: f64,
        n_dim: f64,
        levels: usize,
    },
    /// `base` reweighted by `exp(−amplitude·d(·, x₀)²)`, `x₀` its first point.
    Weighted { base: Box<SpaceRecipe>, amplitude: f64 },
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl SpaceRecipe {
    pub fn build(&self) -> Result<FiniteMMSpace> {
        match self {
            SpaceRecipe::Model { family, n, scale } => build_model_space(*family, *n, *scale),
            SpaceRecipe::Cone { family, n, scale, k, n_dim, levels } => {
                cone_space(&build_model_space(*family, *n, *scale)?, *k, *n_dim, *levels)
            }
            SpaceRecipe::Weighted { base, amplitude } => {
                let b = base.build()?;
                let v: Vec<f64> = b.dist_row(0).iter().map(|d| amplitude * d * d).collect();
                weighted_space(&b, &v)
            }
            SpaceRecipe::File { path } => read_space(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtSolver {
    #[default]
    Exact,
    Sinkhorn,
}

impl std::str::FromStr for OtSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OtSolver::Exact),
            "sinkhorn" => Ok(OtSolver::Sinkhorn),
            _ => invalid(format!("unknown OT solver `{s}` (exact or sinkhorn)")),
        }
    }
}

/// A sequence of spaces converging to its last entry, with every knob of
/// the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Spaces in order; the last one is the limit.
    pub sequence: Vec<SpaceRecipe>,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: Bandwidth,
    #[serde(default = "default_eig_budget")]
    pub eig_budget: usize,
    #[serde(default)]
    pub ot_solver: OtSolver,
    #[serde(default = "default_sinkhorn_eps")]
    pub sinkhorn_eps: f64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Path time grid; defaults to [`default_path_grid`] up to `t_max`.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_fdd_mode")]
    pub fdd_mode: PathLawMode,
    #[serde(default = "default_w2_times")]
    pub w2_times: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_tightness_h")]
    pub tightness_h: Vec<f64>,
    #[serde(default = "default_mixing_times")]
    pub mixing_times: Vec<f64>,
    #[serde(default = "default_mixing_shift")]
    pub mixing_shift: f64,
    /// Whether to build path spaces and compare them.
    #[serde(default = "default_true")]
    pub path_space: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub strict: bool,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_bandwidth() -> Bandwidth {
    Bandwidth::Auto
}
fn default_eig_budget() -> usize {
    DEFAULT_EIG_BUDGET
}
fn default_sinkhorn_eps() -> f64 {
    1e-3
}
fn default_paths() -> usize {
    512
}
fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}
fn default_fdd_mode() -> PathLawMode {
    PathLawMode::FddDictionary
}
fn default_w2_times() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_beta() -> f64 {
    2.0
}
fn default_tightness_h() -> Vec<f64> {
    (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect()
}
fn default_mixing_times() -> Vec<f64> {
    (1..=10).map(|k| 0.5 * k as f64).collect()
}
fn default_mixing_shift() -> f64 {
    0.25
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Defaults around an explicit sequence.
    pub fn new(sequence: Vec<SpaceRecipe>) -> Self {
        Self {
            name: default_name(),
            sequence,
            bandwidth: default_bandwidth(),
            eig_budget: default_eig_budget(),
            ot_solver: OtSolver::default(),
            sinkhorn_eps: default_sinkhorn_eps(),
            paths: default_paths(),
            seed: 0,
            t_max: default_t_max(),
            grid: None,
            fdd_mode: default_fdd_mode(),
            w2_times: default_w2_times(),
            beta: default_beta(),
            tightness_h: default_tightness_h(),
            mixing_times: default_mixing_times(),
            mixing_shift: default_mixing_shift(),
            path_space: true,
            output_dir: None,
            strict: false,
        }
    }

    /// Circle nets of the given sizes; the last one is the limit.
    pub fn circle_nets(sizes: &[usize]) -> Self {
        Self::new(
            sizes
                .iter()
                .map(|&n| SpaceRecipe::Model { family: ModelFamily::Circle, n, scale: 1.0 })
                .collect(),
        )
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            source_name: "config".into(),
            line: 0,
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = toml::from_str(&text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
            Error::Parse { source_name: path.display().to_string(), line, msg: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Time grid of the sampled paths.
    pub fn path_grid(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| default_path_grid(self.t_max))
    }

    /// sha256 of the canonical JSON form, ignoring where output goes.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        crate::numerics::sha256_hex(&serde_json::to_vec(&canonical).expect("config serializes"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sequence.len() < 2 {
            return invalid("a sequence needs at least two spaces (the last is the limit)");
        }
        if self.paths == 0 {
            return invalid("paths must be at least 1");
        }
        if !(self.t_max > 0.0) || !(self.beta > 0.0) || !(self.sinkhorn_eps > 0.0) {
            return invalid("t_max, beta and sinkhorn_eps must be positive");
        }
        if let Bandwidth::Fixed(e) = self.bandwidth {
            if !(e > 0.0) {
                return invalid("bandwidth must be positive");
            }
        }
        let grid = self.path_grid();
        if grid.first() != Some(&0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("time grid must start at 0 and increase strictly");
        }
        if *grid.last().unwrap() + 1e-12 < self.t_max {
            return invalid("time grid must reach t_max");
        }
        if self.w2_times.is_empty() || self.w2_times.len() > 3 {
            return invalid("w2_times takes one to three times");
        }
        if !(self.mixing_shift > 0.0) || self.mixing_times.iter().any(|&t| !(t > self.mixing_shift)) {
            return invalid("mixing times must exceed mixing_shift > 0");
        }
        if self.tightness_h.iter().any(|h| !(*h >= 0.0)) {
            return invalid("tightness increments must be nonnegative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let text = r#"
            name = "nets"
            seed = 3
            bandwidth = { fixed = 0.2 }
            [[sequence]]
            kind = "model"
            family = "circle"
            n = 16
            [[sequence]]
            kind = "weighted"
            amplitude = 0.5
            base = { kind = "model", family = "circle", n = 32 }
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.paths, 512);
        assert_eq!(cfg.bandwidth, Bandwidth::Fixed(0.2));
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(cfg.sequence[1].build().unwrap().len(), 32);
        assert!(ExperimentConfig::from_toml("sequence = []").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1\nsequence = []").is_err());
    }
}

//! The Markov process of the heat semigroup: exact finite-dimensional
//! distributions, seeded path sampling, tightness and ergodicity
//! diagnostics, and distances between path laws.

pub mod diagnostics;
pub mod fdd;
pub mod law;
pub mod sampling;

pub use diagnostics::{
    ergodic_occupation, irreducibility_recurrence_check, tightness_modulus, IrreducibilityReport, OccupationReport,
    OccupationRow, TightnessReport,
};
pub use fdd::{fdd_exact, fdd_monte_carlo, FddSpec, McEstimate};
pub use law::{
    default_path_grid, fdd_dictionary_distance, grid_w2_distance, path_law_distance, path_space_as_mmspace,
    DictionaryEntry, FddDictionary, PathLaw, PathLawDistance, PathLawMethod, PathLawMode, DEFAULT_T_MAX,
};
pub use sampling::{read_ensemble, sample_paths, write_ensemble, PathEnsemble};

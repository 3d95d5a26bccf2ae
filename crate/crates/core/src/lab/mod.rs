//! Experiments comparing convergence of spaces with convergence of their
//! Brownian motions, with CSV/JSON reports and verdicts.

pub mod config;
pub mod experiment;
pub mod report;
pub mod verdict;

pub use config::{ExperimentConfig, OtSolver, SpaceRecipe};
pub use experiment::{corollary_d_check, run_experiment};
pub use report::{Cell, ExperimentReport, ReportMeta, ReportRow, COLUMNS};
pub use verdict::{corollary_verdict, verify_direction_backward, verify_direction_forward, Clause, Verdict};

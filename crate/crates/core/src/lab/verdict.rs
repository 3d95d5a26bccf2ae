//! Finite-sample verdicts on experiment reports.
//!
//! "Decreasing" means a Spearman rank correlation with the index of at most
//! [`DECREASING`] (or [`COROLLARY_DECREASING`] for path spaces); endpoint
//! clauses ask for a drop by [`ENDPOINT_FACTOR`]. These thresholds are
//! policy, not consequences of the theory, which gives no rates.

use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use crate::error::{invalid, Result};
use crate::numerics::spearman;

pub const DECREASING: f64 = -0.9;
pub const COROLLARY_DECREASING: f64 = -0.8;
pub const ENDPOINT_FACTOR: f64 = 4.0;
pub const GAP_FRACTION: f64 = 0.5;
pub const MIN_ROWS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub holds: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// Clauses that decided the verdict, failed ones first.
    pub clauses: Vec<Clause>,
    pub warnings: Vec<String>,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", if self.pass { "PASS" } else { "FAIL" })?;
        for c in &self.clauses {
            write!(f, "\n  [{}] {}", if c.holds { "ok" } else { "violated" }, c.text)?;
        }
        for w in &self.warnings {
            write!(f, "\n  warning: {w}")?;
        }
        Ok(())
    }
}

/// A column on the non-limit rows, with warnings for the rows left out.
fn column(report: &ExperimentReport, name: &str, warnings: &mut Vec<String>) -> Result<Vec<(usize, f64)>> {
    let s = report.series(name);
    let total = report.sequence_rows().count();
    if s.len() < total {
        warnings.push(format!("{name}: {} of {total} rows unavailable and excluded", total - s.len()));
    }
    if s.len() < MIN_ROWS {
        return invalid(format!("{name} has {} usable rows, need at least {MIN_ROWS}", s.len()));
    }
    Ok(s)
}

fn decreasing(name: &str, s: &[(usize, f64)], threshold: f64) -> Clause {
    let (i, v): (Vec<f64>, Vec<f64>) = s.iter().map(|&(i, v)| (i as f64, v)).unzip();
    let rho = spearman(&i, &v);
    Clause { holds: rho <= threshold, text: format!("{name} decreasing: Spearman {rho:.3} vs threshold {threshold}") }
}

fn endpoint_drop(name: &str, s: &[(usize, f64)]) -> Clause {
    let (first, last) = (s[0].1, s[s.len() - 1].1);
    Clause {
        holds: last <= first / ENDPOINT_FACTOR,
        text: format!("{name} endpoint drop: last {last:.3e} vs first/{ENDPOINT_FACTOR} = {:.3e}", first / ENDPOINT_FACTOR),
    }
}

fn vacuous(premise: Clause, warnings: Vec<String>) -> Verdict {
    let note = Clause { holds: true, text: "premise not met, implication holds vacuously".into() };
    Verdict { pass: true, clauses: vec![premise, note], warnings }
}

fn judge(mut clauses: Vec<Clause>, warnings: Vec<String>) -> Verdict {
    clauses.sort_by_key(|c| c.holds);
    Verdict { pass: clauses.iter().all(|c| c.holds), clauses, warnings }
}

/// Space convergence implies convergence of the finite-dimensional
/// distributions.
pub fn verify_direction_forward(report: &ExperimentReport) -> Result<Verdict> {
    let mut warnings = Vec::new();
    let d = column(report, "d_upper", &mut warnings)?;
    let fdd = column(report, "fdd_distance", &mut warnings)?;
    let premise = decreasing("d_upper", &d, DECREASING);
    if !premise.holds {
        return Ok(vacuous(premise, warnings));
    }
    Ok(judge(vec![premise, decreasing("fdd_distance", &fdd, DECREASING), endpoint_drop("fdd_distance", &fdd)], warnings))
}

/// Process convergence with a uniform spectral gap implies space
/// convergence.
pub fn verify_direction_backward(report: &ExperimentReport) -> Result<Verdict> {
    let mut warnings = Vec::new();
    column(report, "mixing_exponent", &mut warnings)?;
    let gaps = column(report, "lambda1", &mut warnings)?;
    let d = column(report, "d_upper", &mut warnings)?;
    let fdd = column(report, "fdd_distance", &mut warnings)?;
    let Some(limit_gap) = report.limit_row().and_then(|r| r.cell("lambda1").value()) else {
        return invalid("limit row has no lambda1");
    };
    let inf = gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let mut clauses = vec![Clause {
        holds: inf >= GAP_FRACTION * limit_gap,
        text: format!("uniform gap: inf lambda1 {inf:.4} vs {GAP_FRACTION} x limit {limit_gap:.4}"),
    }];
    let premise = decreasing("fdd_distance", &fdd, DECREASING);
    if premise.holds {
        clauses.push(premise);
        clauses.push(endpoint_drop("d_upper", &d));
    } else {
        clauses.push(Clause { holds: true, text: format!("{}; endpoint clause vacuous", premise.text) });
    }
    Ok(judge(clauses, warnings))
}

/// Path spaces converge when the base spaces do.
pub fn corollary_verdict(report: &ExperimentReport) -> Result<Verdict> {
    let mut warnings = Vec::new();
    let d = column(report, "d_upper", &mut warnings)?;
    let p = column(report, "path_space_d_upper", &mut warnings)?;
    let premise = decreasing("d_upper", &d, DECREASING);
    if !premise.holds {
        return Ok(vacuous(premise, warnings));
    }
    Ok(judge(vec![premise, decreasing("path_space_d_upper", &p, COROLLARY_DECREASING)], warnings))
}

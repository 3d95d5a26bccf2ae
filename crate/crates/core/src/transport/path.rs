//! Local uniform distance between paths observed on a time grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub value: f64,
    /// Bound on the neglected tail beyond `t_max`, `e^{−t_max}`.
    pub error_bar: f64,
}

/// `∫₀^{t_max} e^{−T} (1 ∧ sup_{t ≤ T} gap(t)) dT` for a path pair whose
/// pointwise distance is `gaps[i]` at `times[i]`.
///
/// Paths are piecewise constant between grid times, so the running
/// supremum is a step function and the integral is evaluated exactly
/// segment by segment. Past the last grid time the paths are held at their
/// final positions.
pub fn delta_from_gaps(times: &[f64], gaps: &[f64], t_max: f64) -> DeltaEstimate {
    let mut value = 0.0;
    let mut sup: f64 = 0.0;
    for (k, (&t, &g)) in times.iter().zip(gaps).enumerate() {
        if t >= t_max {
            break;
        }
        sup = sup.max(g);
        let next = times.get(k + 1).copied().unwrap_or(t_max).min(t_max);
        value += sup.min(1.0) * ((-t).exp() - (-next).exp());
    }
    DeltaEstimate { value, error_bar: (-t_max).exp() }
}

/// Local uniform distance between two index paths on the same grid, with
/// `metric` giving the distance between positions.
pub fn path_delta_distance(
    times: &[f64],
    v: &[usize],
    w: &[usize],
    metric: impl Fn(usize, usize) -> f64,
    t_max: f64,
) -> Result<DeltaEstimate> {
    if v.len() != times.len() || w.len() != times.len() {
        return Err(Error::InvalidInput(format!(
            "paths of length {} and {} on a grid of {} times",
            v.len(),
            w.len(),
            times.len()
        )));
    }
    if times.first() != Some(&0.0) || times.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidInput("time grid must start at 0 and increase".into()));
    }
    if !(t_max > 0.0) || *times.last().unwrap() + 1e-12 < t_max {
        return Err(Error::InvalidInput(format!(
            "grid ends at {} before t_max = {t_max}",
            times.last().unwrap()
        )));
    }
    let gaps: Vec<f64> = v.iter().zip(w).map(|(&a, &b)| metric(a, b)).collect();
    Ok(delta_from_gaps(times, &gaps, t_max))
}

use serde::{Deserialize, Serialize};

use super::sampling::PathEnsemble;
use crate::error::{invalid, Result};
use crate::heat::SpectralHeatModel;

/// Times `0 < t₁ < … < t_k` with one bounded observable per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddSpec {
    times: Vec<f64>,
    observables: Vec<Vec<f64>>,
}

impl FddSpec {
    pub fn new(times: Vec<f64>, observables: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != observables.len() {
            return invalid("need one observable per time and at least one time");
        }
        if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return invalid("times must be positive and strictly increasing");
        }
        let n = observables[0].len();
        if observables.iter().any(|g| g.len() != n || g.iter().any(|v| !v.is_finite())) {
            return invalid("observables must be finite and of equal length");
        }
        Ok(Self { times, observables })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn observables(&self) -> &[Vec<f64>] {
        &self.observables
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `E^start[g₁(B_{t₁}) ⋯ g_k(B_{t_k})]` by the Markov property, applying
/// the semigroup from the last time backwards.
pub fn fdd_exact(model: &SpectralHeatModel, start: usize, spec: &FddSpec) -> Result<f64> {
    if start >= model.len() || spec.observables[0].len() != model.len() {
        return invalid("start point or observables do not match the model");
    }
    let k = spec.len();
    let mut h = spec.observables[k - 1].clone();
    for i in (0..k - 1).rev() {
        let th = model.apply(spec.times[i + 1] - spec.times[i], &h);
        h = th.iter().zip(&spec.observables[i]).map(|(a, g)| a * g).collect();
    }
    let row = model.kernel_row(spec.times[0], start);
    Ok(row.iter().zip(&h).zip(model.weights()).map(|((p, v), m)| p * v * m).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Standard error of the mean; `None` for a single path.
    pub std_error: Option<f64>,
    pub paths: usize,
}

/// Sample mean of `Π gᵢ(B_{tᵢ})` over an ensemble.
pub fn fdd_monte_carlo(ensemble: &PathEnsemble, spec: &FddSpec) -> Result<McEstimate> {
    let cols: Vec<usize> = spec
        .times
        .iter()
        .map(|&t| ensemble.grid_index(t).ok_or(()))
        .collect::<std::result::Result<_, _>>()
        .or_else(|_| invalid("FDD times must lie on the ensemble grid"))?;
    let m = ensemble.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for p in 0..m {
        let path = ensemble.path(p);
        let v: f64 = cols
            .iter()
            .zip(&spec.observables)
            .map(|(&c, g)| g[path[c] as usize])
            .product();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / m as f64;
    let std_error = (m > 1).then(|| {
        let var = ((sum_sq - m as f64 * mean * mean) / (m - 1) as f64).max(0.0);
        (var / m as f64).sqrt()
    });
    Ok(McEstimate { estimate: mean, std_error, paths: m })
}

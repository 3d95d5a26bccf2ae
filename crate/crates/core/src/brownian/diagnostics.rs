use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::heat::SpectralHeatModel;
use crate::numerics::linear_fit;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TightnessReport {
    pub beta: f64,
    /// `(h, E[d̃^β(B_t, B_{t+h})])`.
    pub rows: Vec<(f64, f64)>,
    /// Log-log slope over the rows with `h > 0`.
    pub slope: Option<f64>,
}

/// Exact moment modulus `E^{x₀}[(d ∧ 1)^β(B_t, B_{t+h})]` on a grid of `h`.
pub fn tightness_modulus(model: &SpectralHeatModel, start: usize, t: f64, h_grid: &[f64], beta: f64) -> Result<TightnessReport> {
    if !(beta > 0.0) || !(t >= 0.0) || h_grid.iter().any(|h| !(*h >= 0.0)) {
        return invalid("tightness modulus needs beta > 0, t >= 0 and h >= 0");
    }
    if start >= model.len() {
        return invalid(format!("start point {start} out of range"));
    }
    let n = model.len();
    let space = model.space();
    let m = model.weights();
    // Law of B_t.
    let q: Vec<f64> = model.kernel_row(t, start).iter().zip(m).map(|(p, w)| p * w).collect();
    // a_k(y) = Σ_z φ_k(z) m_z d̃(y,z)^β, then E = Σ_k e^{−λ_k h} Σ_y q_y φ_k(y) a_k(y).
    let dpow = DMatrix::from_fn(n, n, |y, z| space.dist(y, z).min(1.0).powf(beta) * m[z]);
    let a = &dpow * model.eigvecs();
    let phi = model.eigvecs();
    let coeff: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|y| q[y] * phi[(y, k)] * a[(y, k)]).sum())
        .collect();
    let rows: Vec<(f64, f64)> = h_grid
        .iter()
        .map(|&h| {
            if h == 0.0 {
                return (h, 0.0);
            }
            let v: f64 = coeff.iter().zip(model.eigvals()).map(|(c, l)| c * (-l * h).exp()).sum();
            (h, v.max(0.0))
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.0 > 0.0 && r.1 > 0.0).map(|r| (r.0.ln(), r.1.ln())).collect();
    let slope = if pts.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&xs, &ys).map(|(_, s)| s)
    } else {
        None
    };
    Ok(TightnessReport { beta, rows, slope })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupationRow {
    pub t: f64,
    /// `P^start(B_t ∈ G)`.
    pub probability: f64,
    /// `|P^start(B_t ∈ G) − m(G)|`.
    pub gap: f64,
    /// `‖p(t, start, ·) − 1‖_{L²(m)}`.
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupationReport {
    pub mass: f64,
    pub rows: Vec<OccupationRow>,
    /// Whether every gap is within its envelope.
    pub within_envelope: bool,
}

/// Occupation probabilities of `set` against its stationary mass.
pub fn ergodic_occupation(model: &SpectralHeatModel, start: usize, set: &[usize], t_grid: &[f64]) -> Result<OccupationReport> {
    if set.is_empty() || set.iter().any(|&y| y >= model.len()) || start >= model.len() {
        return invalid("occupation set must be nonempty and in range");
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return invalid("times must be nonnegative");
    }
    let m = model.weights();
    let mut members = set.to_vec();
    members.sort_unstable();
    members.dedup();
    let mass: f64 = members.iter().map(|&y| m[y]).sum();
    let rows: Vec<OccupationRow> = t_grid
        .iter()
        .map(|&t| {
            let row = model.kernel_row(t, start);
            let probability: f64 = members.iter().map(|&y| row[y] * m[y]).sum();
            let centred: Vec<f64> = row.iter().map(|p| p - 1.0).collect();
            OccupationRow { t, probability, gap: (probability - mass).abs(), envelope: model.norm(&centred) }
        })
        .collect();
    let within_envelope = rows.iter().all(|r| r.gap <= r.envelope * (1.0 + 1e-9) + 1e-12);
    Ok(OccupationReport { mass, rows, within_envelope })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    /// Time `D²` at which positivity is checked.
    pub t: f64,
    pub min_kernel: f64,
    /// `(T, min_x ∫₀^T T_s f(x) ds)`.
    pub green: Vec<(f64, f64)>,
    /// Growth rate of the Green integral over the last window; tends to `m(f)`.
    pub green_rate: f64,
    pub mean: f64,
}

const GREEN_HORIZONS: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

/// Kernel positivity at `t = D²` and unbounded growth of the Green
/// integral of a nonnegative nonzero `f`.
pub fn irreducibility_recurrence_check(model: &SpectralHeatModel, f: &[f64]) -> Result<IrreducibilityReport> {
    let n = model.len();
    if f.len() != n || f.iter().any(|v| !(*v >= 0.0)) || f.iter().all(|v| *v == 0.0) {
        return invalid("f must be nonnegative and not identically zero");
    }
    let space = model.space();
    let d = space.meta().diameter_bound.max(space.diameter());
    let t = d * d;
    let min_kernel = model.kernel_matrix(t).min();
    if !(min_kernel > 0.0) {
        return Err(Error::Invariant(format!(
            "kernel vanishes somewhere at t = D² = {t} (minimum {min_kernel:e}); the chain is not irreducible"
        )));
    }
    let c = model.coefficients(f);
    let phi = model.eigvecs();
    let lam = model.eigvals();
    let mean = c[0];
    let green: Vec<(f64, f64)> = GREEN_HORIZONS
        .iter()
        .map(|&big_t| {
            let worst = (0..n)
                .map(|x| {
                    mean * big_t
                        + (1..n)
                            .map(|k| c[k] * phi[(x, k)] * (-(-lam[k] * big_t).exp_m1()) / lam[k])
                            .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            (big_t, worst)
        })
        .collect();
    let (a, b) = (green[green.len() - 2], green[green.len() - 1]);
    Ok(IrreducibilityReport { t, min_kernel, green_rate: (b.1 - a.1) / (b.0 - a.0), green, mean })
}

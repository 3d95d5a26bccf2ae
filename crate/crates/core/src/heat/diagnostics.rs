//! Fitted diagnostics on top of a spectral heat model: Gaussian bounds,
//! Poincaré constants, mixing, Hölder regularity and the Feller defect.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::DirichletGraph;
use super::spectral::SpectralHeatModel;
use crate::error::{invalid, Result};
use crate::numerics::{linear_fit, supporting_line, Envelope};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianBoundReport {
    /// Upper bound `p ≤ C₁/m(B_√t) · exp(−C₂ d²/t)`.
    pub c1: f64,
    pub c2: f64,
    /// Lower bound `p ≥ C₁'/m(B_√t) · exp(−C₂' d²/t)`.
    pub c1_lower: f64,
    pub c2_lower: f64,
    pub samples: usize,
    /// Samples with `p ≤ 0`, left out of the fit.
    pub excluded: usize,
    /// Excluded samples at `t ≥ t_pos`, where positivity is expected.
    pub excluded_after_t_pos: usize,
    pub violations: usize,
}

/// Fits two-sided Gaussian bounds over all `(t, x, y)` with `t` in `t_grid`
/// and `(x, y)` in `pairs`. Both exponents are clamped to be nonnegative.
pub fn gaussian_bound_fit(model: &SpectralHeatModel, t_grid: &[f64], pairs: &[(usize, usize)]) -> Result<GaussianBoundReport> {
    let space = model.space();
    let d = space.meta().diameter_bound.max(space.diameter());
    if t_grid.is_empty() || pairs.is_empty() {
        return invalid("need at least one time and one pair");
    }
    if let Some(t) = t_grid.iter().find(|&&t| !(t > 0.0 && t <= d * d)) {
        return invalid(format!("time {t} outside (0, D²] with D = {d}"));
    }
    if pairs.iter().any(|&(x, y)| x >= model.len() || y >= model.len()) {
        return invalid("pair index out of range");
    }
    let mut pts = Vec::new();
    let (mut excluded, mut late) = (0, 0);
    for &t in t_grid {
        for &(x, y) in pairs {
            let p = model.kernel(t, x, y);
            if p <= 0.0 {
                excluded += 1;
                if t >= model.t_pos() {
                    late += 1;
                }
                continue;
            }
            let dxy = space.dist(x, y);
            let vol = space.ball_mass(x, t.sqrt());
            pts.push((dxy * dxy / t, (p * vol).ln()));
        }
    }
    let Some((b_up, s_up)) = supporting_line(&pts, Envelope::Upper, (f64::NEG_INFINITY, 0.0), 0.0) else {
        return invalid("every sampled kernel value is non-positive");
    };
    let (b_lo, s_lo) = supporting_line(&pts, Envelope::Lower, (f64::NEG_INFINITY, 0.0), 0.0).expect("nonempty");
    let tol = |y: f64| 1e-9 * y.abs().max(1.0);
    let violations = pts
        .iter()
        .filter(|&&(s, y)| y > b_up + s_up * s + tol(y) || y < b_lo + s_lo * s - tol(y))
        .count();
    Ok(GaussianBoundReport {
        c1: b_up.exp(),
        c2: -s_up,
        c1_lower: b_lo.exp(),
        c2_lower: -s_lo,
        samples: pts.len() + excluded,
        excluded,
        excluded_after_t_pos: late,
        violations,
    })
}

/// First nonzero eigenvalue of the generator.
pub fn spectral_gap(model: &SpectralHeatModel) -> f64 {
    model.spectral_gap()
}

/// `E(u) / Var_m(u)`; infinite for constant `u`.
pub fn rayleigh_quotient(graph: &DirichletGraph, u: &[f64]) -> f64 {
    let m = graph.space().weights();
    let mean: f64 = u.iter().zip(m).map(|(a, w)| a * w).sum();
    let var: f64 = u.iter().zip(m).map(|(a, w)| (a - mean) * (a - mean) * w).sum();
    if var == 0.0 {
        return f64::INFINITY;
    }
    graph.energy_form(u, u) / var
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalPoincare {
    pub radius: f64,
    /// Largest ball constant over the sampled centres.
    pub constant: f64,
    pub balls: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareReport {
    /// `1/λ₁`, so that `Var_m(u) ≤ C·E(u)`.
    pub global: f64,
    pub local: Vec<LocalPoincare>,
    /// Log-log slope of the local constants against the radius.
    pub exponent: Option<f64>,
    /// Balls left out: a single point, or disconnected inside the ball.
    pub skipped: usize,
}

const POINCARE_CENTRES: usize = 32;

/// Global Poincaré constant and local ball constants on the given radii.
///
/// A ball keeps its own points, their weights and the edges between them,
/// so its constant is `1/λ₁` of the restricted (Neumann-like) problem.
pub fn poincare_constant(graph: &DirichletGraph, model: &SpectralHeatModel, radii: &[f64]) -> Result<PoincareReport> {
    if radii.iter().any(|r| !(*r > 0.0)) {
        return invalid("radii must be positive");
    }
    let space = graph.space();
    let n = space.len();
    let m = space.weights();
    let centres: Vec<usize> = if n <= POINCARE_CENTRES {
        (0..n).collect()
    } else {
        (0..POINCARE_CENTRES).map(|k| k * n / POINCARE_CENTRES).collect()
    };
    let mut skipped = 0;
    let mut local = Vec::new();
    for &r in radii {
        let mut worst: f64 = 0.0;
        let mut balls = 0;
        for &c in &centres {
            let members: Vec<usize> = (0..n).filter(|&y| space.dist(c, y) <= r).collect();
            if members.len() < 2 {
                skipped += 1;
                continue;
            }
            let k = members.len();
            let mut pos = vec![usize::MAX; n];
            for (i, &y) in members.iter().enumerate() {
                pos[y] = i;
            }
            let mut s = DMatrix::zeros(k, k);
            for (i, &x) in members.iter().enumerate() {
                for &(y, w) in graph.neighbours(x) {
                    let j = pos[y];
                    if j != usize::MAX {
                        let scaled = w / (m[x] * m[y]).sqrt();
                        s[(i, j)] -= scaled;
                        s[(i, i)] += w / m[x];
                    }
                }
            }
            let vals: nalgebra::DVector<f64> = SymmetricEigen::new(0.5 * (&s + s.transpose())).eigenvalues;
            let mut vals: Vec<f64> = vals.iter().copied().collect();
            vals.sort_by(f64::total_cmp);
            let scale = vals[k - 1].abs().max(f64::MIN_POSITIVE);
            if vals[1] <= 1e-10 * scale {
                skipped += 1;
                continue;
            }
            balls += 1;
            worst = worst.max(1.0 / vals[1]);
        }
        if balls > 0 {
            local.push(LocalPoincare { radius: r, constant: worst, balls });
        }
    }
    let exponent = if local.len() >= 2 {
        let xs: Vec<f64> = local.iter().map(|l| l.radius.ln()).collect();
        let ys: Vec<f64> = local.iter().map(|l| l.constant.ln()).collect();
        linear_fit(&xs, &ys).map(|(_, s)| s)
    } else {
        None
    };
    Ok(PoincareReport { global: 1.0 / model.spectral_gap(), local, exponent, skipped })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingRow {
    pub t: f64,
    /// `‖T_t f − m(f)‖_{L²(m)}`.
    pub lhs: f64,
    /// `e^{−λ₁ t} ‖f − m(f)‖_{L²(m)}`.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingReport {
    pub rows: Vec<MixingRow>,
    pub worst_slack: f64,
    pub holds: bool,
}

pub const MIXING_TOL: f64 = 1e-12;

/// Checks `‖T_t f − m(f)‖ ≤ e^{−λ₁ t} ‖f − m(f)‖` on every time of `t_grid`.
pub fn mixing_check(model: &SpectralHeatModel, f: &[f64], t_grid: &[f64]) -> Result<MixingReport> {
    if f.len() != model.len() || f.iter().any(|v| !v.is_finite()) {
        return invalid("f must have one finite value per point");
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return invalid("times must be nonnegative");
    }
    let mean = model.mean(f);
    let centred: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let base = model.norm(&centred);
    let gap = model.spectral_gap();
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let tf = model.apply(t, f);
        let lhs = model.norm(&tf.iter().map(|v| v - mean).collect::<Vec<_>>());
        let rhs = (-gap * t).exp() * base;
        rows.push(MixingRow { t, lhs, rhs, slack: rhs - lhs });
    }
    let worst_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Ok(MixingReport { holds: worst_slack >= -MIXING_TOL, rows, worst_slack })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelMixingReport {
    /// `‖p(ε, x, ·) − 1‖_{L²(m)}`.
    pub constant: f64,
    /// `(t, ‖p(t, x, ·) − 1‖, C·e^{−λ₁(t − ε)})`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Least-squares decay rate of the norms.
    pub fitted_exponent: Option<f64>,
    pub lambda1: f64,
    pub holds: bool,
}

/// Exponential convergence of the kernel at `x` to equilibrium.
pub fn kernel_mixing_rate(model: &SpectralHeatModel, x: usize, t_grid: &[f64], eps_shift: f64) -> Result<KernelMixingReport> {
    if x >= model.len() {
        return invalid(format!("point {x} out of range"));
    }
    if !(eps_shift > 0.0) || t_grid.iter().any(|&t| !(t > eps_shift)) {
        return invalid("need t > eps_shift > 0 on the whole grid");
    }
    let dev = |t: f64| model.norm(&model.kernel_row(t, x).iter().map(|p| p - 1.0).collect::<Vec<_>>());
    let constant = dev(eps_shift);
    let lambda1 = model.spectral_gap();
    let rows: Vec<(f64, f64, f64)> = t_grid
        .iter()
        .map(|&t| (t, dev(t), constant * (-lambda1 * (t - eps_shift)).exp()))
        .collect();
    let holds = rows.iter().all(|&(_, v, b)| v <= b * (1.0 + 1e-9) + 1e-12);
    let usable: Vec<&(f64, f64, f64)> = rows.iter().filter(|r| r.1 > 1e-12).collect();
    let fitted_exponent = if usable.len() >= 2 {
        let ts: Vec<f64> = usable.iter().map(|r| r.0).collect();
        let ls: Vec<f64> = usable.iter().map(|r| r.1.ln()).collect();
        linear_fit(&ts, &ls).map(|(_, s)| -s)
    } else {
        None
    };
    Ok(KernelMixingReport { constant, rows, fitted_exponent, lambda1, holds })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub constant: f64,
}

const HOLDER_TIMES: usize = 6;
const HOLDER_POINTS: usize = 64;
const HOLDER_ANCHORS: usize = 8;

/// Fitted space-time Hölder exponent of `u = T_t f`:
/// `|u(s,y) − u(t,z)| ≤ C·sup|u|·ρ^α` with `ρ = (|s − t|^{1/2} + d(y, z))/r`,
/// over sampled pairs with `ρ ≤ 1`.
///
/// `f` is a seeded random sum of tent functions of width `r` centred at
/// anchors picked by index fraction, so refinements of a net see nearly
/// the same datum.
pub fn holder_regularity_estimate(model: &SpectralHeatModel, t_window: (f64, f64), r: f64, seed: u64) -> Result<HolderEstimate> {
    let space = model.space();
    let n = model.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchors: Vec<(usize, f64)> = (0..HOLDER_ANCHORS)
        .map(|_| (((rng.gen::<f64>() * n as f64) as usize).min(n - 1), rng.gen_range(-1.0..=1.0)))
        .collect();
    let f: Vec<f64> = (0..n)
        .map(|y| {
            let v: f64 = anchors.iter().map(|&(p, a)| a * (1.0 - space.dist(y, p) / r).max(0.0)).sum();
            v.clamp(-1.0, 1.0)
        })
        .collect();
    holder_regularity_of(model, &f, t_window, r)
}

/// As [`holder_regularity_estimate`] for a given initial datum.
pub fn holder_regularity_of(model: &SpectralHeatModel, f: &[f64], t_window: (f64, f64), r: f64) -> Result<HolderEstimate> {
    let space = model.space();
    let d = space.meta().diameter_bound.max(space.diameter());
    let (t0, t1) = t_window;
    if !(t0 > 0.0 && t1 > t0 && t1 <= d * d) {
        return invalid(format!("degenerate time window ({t0}, {t1}) for D = {d}"));
    }
    if model.len() > 1 && !(r > space.grid_spacing()) {
        return invalid(format!("radius {r} must exceed the grid spacing {}", space.grid_spacing()));
    }
    if f.len() != model.len() {
        return invalid("f must have one value per point");
    }
    let n = model.len();
    let points: Vec<usize> = if n <= HOLDER_POINTS {
        (0..n).collect()
    } else {
        (0..HOLDER_POINTS).map(|k| k * n / HOLDER_POINTS).collect()
    };
    let times: Vec<f64> = (0..HOLDER_TIMES)
        .map(|k| t0 + (t1 - t0) * k as f64 / (HOLDER_TIMES - 1) as f64)
        .collect();
    let values: Vec<Vec<f64>> = times.iter().map(|&t| model.apply(t, f)).collect();
    let sup = values
        .iter()
        .flat_map(|u| points.iter().map(move |&y| u[y].abs()))
        .fold(0.0, f64::max);
    let mut pairs = Vec::new();
    for (a, &s) in times.iter().enumerate() {
        for (b, &t) in times.iter().enumerate().skip(a) {
            for (i, &y) in points.iter().enumerate() {
                let start = if a == b { i + 1 } else { 0 };
                for &z in &points[start..] {
                    let rho = ((s - t).abs().sqrt() + space.dist(y, z)) / r;
                    if rho > 0.0 && rho <= 1.0 {
                        pairs.push((rho, (values[a][y] - values[b][z]).abs()));
                    }
                }
            }
        }
    }
    if sup == 0.0 || pairs.iter().all(|p| p.1 <= 1e-12 * sup) {
        return Ok(HolderEstimate { alpha: 1.0, constant: 0.0 });
    }
    let logs: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|p| p.1 > 1e-12 * sup)
        .map(|&(rho, diff)| (rho.ln(), (diff / sup).ln()))
        .collect();
    let (_, slope) = supporting_line(&logs, Envelope::Upper, (1e-6, 1.0), 1.0).expect("nonempty");
    let constant = pairs
        .iter()
        .map(|&(rho, diff)| diff / sup / rho.powf(slope))
        .fold(0.0, f64::max);
    Ok(HolderEstimate { alpha: slope, constant })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FellerReport {
    /// `(t, max_x |T_t f − f|)` in grid order.
    pub defects: Vec<(f64, f64)>,
    /// Defect at the smallest time.
    pub defect: f64,
    /// Whether the defect is nonincreasing as `t` decreases.
    pub monotone: bool,
}

/// Sup-norm distance of `T_t f` from `f` along a decreasing time grid.
pub fn feller_defect(model: &SpectralHeatModel, f: &[f64], t_grid: &[f64]) -> Result<FellerReport> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("time grid must be nonnegative and strictly decreasing");
    }
    if f.len() != model.len() {
        return invalid("f must have one value per point");
    }
    let defects: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| {
            let tf = model.apply(t, f);
            (t, tf.iter().zip(f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect();
    let monotone = defects.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12) + 1e-15);
    Ok(FellerReport { defect: defects.last().unwrap().1, defects, monotone })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenTrace {
    /// `λ₁ … λ_{k_max}` per model.
    pub eigvals: Vec<Vec<f64>>,
    /// `|λ_k(i+1) − λ_k(i)| / λ_k(i)` per consecutive pair.
    pub relative_changes: Vec<Vec<f64>>,
}

pub fn eigen_convergence_trace(models: &[&SpectralHeatModel], k_max: usize) -> Result<EigenTrace> {
    if models.len() < 2 {
        return invalid("need at least two models");
    }
    if k_max == 0 || models.iter().any(|m| m.len() <= k_max) {
        return invalid(format!("k_max = {k_max} needs more eigenvalues than some model has"));
    }
    let eigvals: Vec<Vec<f64>> = models.iter().map(|m| m.eigvals()[1..=k_max].to_vec()).collect();
    let relative_changes = eigvals
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).abs() / a.abs()).collect())
        .collect();
    Ok(EigenTrace { eigvals, relative_changes })
}

//! Curvature-dimension flavoured diagnostics on finite spaces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_probability, FiniteMMSpace};
use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, linear_fit};

/// `Θ_κ(θ)`: `sin(√κ θ)/√κ`, `θ`, or `sinh(√−κ θ)/√−κ`.
pub fn theta_fn(kappa: f64, theta: f64) -> f64 {
    super::models::sin_k(kappa, theta)
}

/// Distortion coefficient `σ_κ^{(t)}(θ)`; `+∞` once `κθ² ≥ π²`.
pub fn sigma_coefficient(kappa: f64, t: f64, theta: f64) -> f64 {
    let k2 = kappa * theta * theta;
    if k2 == 0.0 {
        t
    } else if k2 >= PI * PI {
        f64::INFINITY
    } else {
        theta_fn(kappa, t * theta) / theta_fn(kappa, theta)
    }
}

fn bg_integral(kappa: f64, n: f64, r: f64) -> f64 {
    if kappa == 0.0 {
        r.powf(n + 1.0) / (n + 1.0)
    } else {
        adaptive_simpson(|t| theta_fn(kappa, t).powf(n), 0.0, r, 1e-8)
    }
}

/// Curvature/dimension model volume ratio `∫₀^r Θ^N / ∫₀^R Θ^N` with `κ = K/N`.
pub fn bishop_gromov_model_ratio(k: f64, n: f64, r: f64, big_r: f64) -> f64 {
    if r == big_r {
        return 1.0;
    }
    let kappa = k / n;
    if kappa == 0.0 {
        return (r / big_r).powf(n + 1.0);
    }
    bg_integral(kappa, n, r) / bg_integral(kappa, n, big_r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BgRatio {
    pub r: f64,
    pub big_r: f64,
    /// `v(r)/v(R)` on the space.
    pub measured: f64,
    /// Model ratio from the integral of `Θ^N`.
    pub model: f64,
    /// Mass of the shell `r < d ≤ r + h` relative to `v(R)`.
    pub shell_slack: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BgReport {
    pub ratios: Vec<BgRatio>,
    pub satisfied: bool,
}

/// Compares volume ratios of concentric closed balls against the model
/// ratio, allowing one grid shell (`h` = grid spacing) of slack plus 1e-6.
pub fn bishop_gromov_check(space: &FiniteMMSpace, center: usize, radii: &[(f64, f64)]) -> Result<BgReport> {
    if center >= space.len() {
        return Err(Error::InvalidInput(format!("center {center} out of range")));
    }
    let meta = space.meta();
    let (k, n) = (meta.curvature, meta.dimension);
    let h = space.grid_spacing();
    let closed = |r: f64| -> f64 {
        space
            .dist_row(center)
            .iter()
            .zip(space.weights())
            .filter(|(d, _)| **d <= r)
            .map(|(_, w)| w)
            .sum()
    };
    let mut ratios = Vec::with_capacity(radii.len());
    for &(r, big_r) in radii {
        if !(0.0 <= r && r <= big_r) || !big_r.is_finite() {
            return Err(Error::InvalidInput(format!("need 0 <= r <= R, got ({r}, {big_r})")));
        }
        if k > 0.0 && big_r >= PI * (n / k).sqrt() {
            return Err(Error::InvalidInput(format!(
                "R={big_r} beyond the model diameter π·√(N/K) = {}",
                PI * (n / k).sqrt()
            )));
        }
        let vr = closed(r);
        let v_big = closed(big_r);
        let measured = vr / v_big;
        let model = bishop_gromov_model_ratio(k, n, r, big_r);
        let shell_slack = if r == big_r { 0.0 } else { (closed(r + h) - vr) / v_big };
        let satisfied = measured + shell_slack >= model - 1e-6;
        ratios.push(BgRatio { r, big_r, measured, model, shell_slack, satisfied });
    }
    let satisfied = ratios.iter().all(|r| r.satisfied);
    Ok(BgReport { ratios, satisfied })
}

/// Sorted distances from each center with prefix masses, for fast ball queries.
struct BallIndex {
    rows: Vec<(Vec<f64>, Vec<f64>)>,
}

impl BallIndex {
    fn new(space: &FiniteMMSpace, centers: &[usize]) -> Self {
        let rows = centers
            .iter()
            .map(|&c| {
                let mut pairs: Vec<(f64, f64)> =
                    space.dist_row(c).iter().copied().zip(space.weights().iter().copied()).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                let mut ds = Vec::with_capacity(pairs.len());
                let mut ms = Vec::with_capacity(pairs.len());
                for (d, w) in pairs {
                    acc += w;
                    ds.push(d);
                    ms.push(acc);
                }
                (ds, ms)
            })
            .collect();
        Self { rows }
    }

    /// Mass of the open ball of radius `r` around the `c`-th indexed center.
    fn open(&self, c: usize, r: f64) -> f64 {
        let (ds, ms) = &self.rows[c];
        let k = ds.partition_point(|&d| d < r);
        if k == 0 {
            0.0
        } else {
            ms[k - 1]
        }
    }
}

/// Largest ratio `m(B_{2r}(x)) / m(B_r(x))` over all centers and radii.
pub fn doubling_constant(space: &FiniteMMSpace, radii: &[f64]) -> Result<f64> {
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidInput("doubling radii must be positive".into()));
    }
    let centers: Vec<usize> = (0..space.len()).collect();
    let idx = BallIndex::new(space, &centers);
    let mut worst: f64 = 1.0;
    for c in 0..centers.len() {
        for &r in radii {
            worst = worst.max(idx.open(c, 2.0 * r) / idx.open(c, r));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthFloor {
    /// Fitted exponent `ν` (volume grows like `r^{2ν}`).
    pub nu: f64,
    /// Largest `c` with `m(B_r(x)) ≥ c·r^{2ν}` at every sampled `(x, r)`.
    pub c: f64,
    /// Intercept of the least-squares fit, `exp` of mean `log v(r) − 2ν log r`.
    pub c_mean: f64,
}

/// Fits `log m(B_r(x)) ≈ log c + 2ν log r` over `r` in `(h, min(1, D)]`,
/// `h` the grid spacing, averaging over up to 64 centers.
pub fn volume_growth_floor(space: &FiniteMMSpace) -> Result<GrowthFloor> {
    let n = space.len();
    if n < 2 {
        return Err(Error::Degenerate("volume growth needs at least two points".into()));
    }
    let h = space.grid_spacing();
    let top = space.diameter().min(1.0);
    let stride = n.div_ceil(64).max(1);
    let centers: Vec<usize> = (0..n).step_by(stride).collect();
    let idx = BallIndex::new(space, &centers);
    // Log-spaced radii strictly above the spacing, avoiding the first shell
    // where the count is dominated by the center itself.
    let lo = 2.0 * h;
    let count = 24;
    let radii: Vec<f64> = if lo < top {
        (0..count)
            .map(|i| lo * (top / lo).powf((i as f64 + 1.0) / count as f64))
            .collect()
    } else {
        Vec::new()
    };
    if radii.len() < 3 {
        return Err(Error::Degenerate(format!(
            "fewer than 3 usable radii between grid spacing {h:.3e} and {top:.3e}"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for c in 0..centers.len() {
        for &r in &radii {
            xs.push(r.ln());
            ys.push(idx.open(c, r).ln());
        }
    }
    let (intercept, slope) = linear_fit(&xs, &ys).ok_or_else(|| Error::Degenerate("flat radius grid".into()))?;
    let c = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x).exp())
        .fold(f64::INFINITY, f64::min);
    Ok(GrowthFloor { nu: 0.5 * slope, c, c_mean: intercept.exp() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdStarReport {
    pub satisfied: bool,
    /// Smallest `lhs − rhs` over the interpolation steps.
    pub worst_margin: f64,
    /// Margin at each step `t = k/steps`.
    pub margins: Vec<f64>,
    /// Largest distance between an ideal interpolation point and its snapped grid point.
    pub max_snap_error: f64,
    /// Grid spacing of the space, for judging the snapping error.
    pub grid_spacing: f64,
    /// Set when some transported pair has an intermediate point that snaps
    /// farther than a quarter of its transport distance.
    pub grid_too_coarse: bool,
    pub note: String,
}

/// Point `z` minimizing `max(|d(x,z) − t·d|, |d(z,y) − (1−t)·d|)`, ties
/// (equal up to rounding) to the smallest index; returns it with the
/// attained deviation.
fn snap_intermediate(space: &FiniteMMSpace, x: usize, y: usize, t: f64) -> (usize, f64) {
    let d = space.dist(x, y);
    let (rx, ry) = (space.dist_row(x), space.dist_row(y));
    let tie = 1e-12 * d.max(1.0);
    let mut best = (0, f64::INFINITY);
    for z in 0..space.len() {
        let dev = (rx[z] - t * d).abs().max((ry[z] - (1.0 - t) * d).abs());
        if dev < best.1 - tie {
            best = (z, dev);
        }
    }
    best
}

/// Displacement-interpolation test of the reduced curvature-dimension
/// inequality with `N' = meta.dimension` and `K = meta.curvature`.
///
/// Interpolants are obtained by snapping the points of an optimal coupling
/// onto the grid, so the margins include discretization error; the report
/// carries the snapping error and grid spacing to judge that.
pub fn cd_star_displacement_check(
    space: &FiniteMMSpace,
    mu0: &[f64],
    mu1: &[f64],
    steps: usize,
) -> Result<CdStarReport> {
    let n = space.len();
    check_probability(mu0, n, "mu0")?;
    check_probability(mu1, n, "mu1")?;
    if steps == 0 {
        return Err(Error::InvalidInput("need at least one interpolation step".into()));
    }
    let sol = crate::transport::w2_distance(space, space, mu0, mu1)?;
    let plan = sol.plan;
    let nprime = space.meta().dimension;
    let kappa = space.meta().curvature / nprime;
    let pw = -1.0 / nprime;
    let m = space.weights();
    let support: Vec<(usize, usize, f64)> = plan.support(0.0);
    let mut margins = Vec::with_capacity(steps + 1);
    let mut max_snap: f64 = 0.0;
    let mut coarse = false;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let mut mass = vec![0.0; n];
        let mut rhs = 0.0;
        for &(i, j, q) in &support {
            let d = space.dist(i, j);
            let z = if s == 0 {
                i
            } else if s == steps {
                j
            } else {
                let (z, dev) = snap_intermediate(space, i, j, t);
                max_snap = max_snap.max(dev);
                if dev > 0.25 * d && d > 0.0 {
                    coarse = true;
                }
                z
            };
            mass[z] += q;
            let a = sigma_coefficient(kappa, 1.0 - t, d) * (mu0[i] / m[i]).powf(pw);
            let b = sigma_coefficient(kappa, t, d) * (mu1[j] / m[j]).powf(pw);
            rhs += q * (a + b);
        }
        // ∫ ρ_t^{-1/N'} dμ_t = Σ μ_t(z)^{1-1/N'} m(z)^{1/N'}
        let lhs: f64 = mass
            .iter()
            .zip(m)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, w)| p.powf(1.0 + pw) * w.powf(-pw))
            .sum();
        margins.push(lhs - rhs);
    }
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let satisfied = worst_margin >= -1e-9;
    let note = if coarse {
        "grid too coarse: snapped interpolants deviate from the geodesic by more than a quarter of the transport distance".to_string()
    } else {
        "diagnostic only: interpolants are snapped to grid points".to_string()
    };
    Ok(CdStarReport {
        satisfied,
        worst_margin,
        margins,
        max_snap_error: max_snap,
        grid_spacing: space.grid_spacing(),
        grid_too_coarse: coarse,
        note,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub satisfied: bool,
    pub worst_margin: f64,
    /// `(pair, t)` combinations that were evaluated.
    pub checked: usize,
    /// `(pair, t)` combinations with no grid point within the distortion budget.
    pub missing_geodesic: usize,
}

/// Tests `U(γ_t) ≥ σ^{(1−t)}_{K/N}(d)·U(γ_0) + σ^{(t)}_{K/N}(d)·U(γ_1)` with
/// `U = exp(−V/N)` at `t ∈ {0, 1/4, 1/2, 3/4, 1}` along discrete geodesics.
///
/// An intermediate point counts only if it sits on the geodesic to within
/// `1e-9·max(1, d)`; other combinations are tallied as missing.
pub fn strong_convexity_check(space: &FiniteMMSpace, potential: &[f64], k: f64, n_dim: f64) -> Result<ConvexityReport> {
    let n = space.len();
    if potential.len() != n || potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("potential must be finite with one entry per point".into()));
    }
    if !(n_dim > 0.0) {
        return Err(Error::InvalidInput(format!("dimension must be positive, got {n_dim}")));
    }
    let u: Vec<f64> = potential.iter().map(|v| (-v / n_dim).exp()).collect();
    let kappa = k / n_dim;
    let ts = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut missing = 0;
    for x in 0..n {
        for y in (x + 1)..n {
            let d = space.dist(x, y);
            for &t in &ts {
                let z = if t == 0.0 {
                    x
                } else if t == 1.0 {
                    y
                } else {
                    let (z, dev) = snap_intermediate(space, x, y, t);
                    if dev > 1e-9 * d.max(1.0) {
                        missing += 1;
                        continue;
                    }
                    z
                };
                let rhs = sigma_coefficient(kappa, 1.0 - t, d) * u[x] + sigma_coefficient(kappa, t, d) * u[y];
                worst = worst.min(u[z] - rhs);
                checked += 1;
            }
        }
    }
    Ok(ConvexityReport { satisfied: worst >= -1e-12, worst_margin: worst, checked, missing_geodesic: missing })
}

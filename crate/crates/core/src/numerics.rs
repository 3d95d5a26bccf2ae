//! Small numerical helpers shared across modules.

use sha2::{Digest, Sha256};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Subdivision stops once the Richardson error estimate on a panel falls
/// below `rel_tol` times the running magnitude of the integral (with an
/// absolute floor so integrals that vanish identically terminate).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Crude magnitude for the absolute floor.
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    let tol = rel_tol * scale;
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol.max(1e-300), 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Ranks with ties averaged (1-based).
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation. Returns 0 when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Ordinary least squares fit `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Upper,
    Lower,
}

/// Line `y = intercept + slope * x` supporting a point cloud from above
/// (`Upper`) or below (`Lower`).
///
/// Among all supporting lines it picks the one touching the convex hull at
/// the mean abscissa, which minimizes the average vertical gap to the
/// points. The slope is clamped into `slope_range`; if every point has the
/// same abscissa, `default_slope` is used. The intercept is then the
/// tightest one for which no point lies on the wrong side.
pub fn supporting_line(
    points: &[(f64, f64)],
    envelope: Envelope,
    slope_range: (f64, f64),
    default_slope: f64,
) -> Option<(f64, f64)> {
    if points.is_empty() {
        return None;
    }
    let sign = match envelope {
        Envelope::Upper => 1.0,
        Envelope::Lower => -1.0,
    };
    // Work with an upper hull; mirror y for the lower envelope.
    let mut pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, sign * y)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        // Keep only the highest point per abscissa.
        if let Some(last) = hull.last() {
            if last.0 == p.0 {
                hull.pop();
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let slope_mirrored = if hull.len() < 2 {
        sign * default_slope
    } else {
        let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let mut k = 0;
        while k + 2 < hull.len() && hull[k + 1].0 < mean_x {
            k += 1;
        }
        let (a, b) = (hull[k], hull[k + 1]);
        (b.1 - a.1) / (b.0 - a.0)
    };
    let slope = (sign * slope_mirrored).clamp(slope_range.0, slope_range.1);
    let intercept = match envelope {
        Envelope::Upper => points
            .iter()
            .map(|&(x, y)| y - slope * x)
            .fold(f64::NEG_INFINITY, f64::max),
        Envelope::Lower => points
            .iter()
            .map(|&(x, y)| y - slope * x)
            .fold(f64::INFINITY, f64::min),
    };
    Some((intercept, slope))
}

/// Lebesgue measure of the unit ball in `R^d` (real `d > 0`).
pub fn unit_ball_volume(d: f64) -> f64 {
    std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Maximum absolute entry of a slice (0 for empty input).
pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

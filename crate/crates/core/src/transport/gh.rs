//! Measured Gromov–Hausdorff approximation diagnostics and Hausdorff
//! distance in an ambient space.

use crate::error::{Error, Result};
use crate::space::{AmbientEmbedding, FiniteMMSpace};

fn check_map(f: &[usize], xn: &FiniteMMSpace, xinf: &FiniteMMSpace) -> Result<()> {
    if f.len() != xn.len() {
        return Err(Error::InvalidInput(format!("map has {} entries, domain has {} points", f.len(), xn.len())));
    }
    if let Some(&bad) = f.iter().find(|&&y| y >= xinf.len()) {
        return Err(Error::InvalidInput(format!("map value {bad} outside the target")));
    }
    Ok(())
}

/// `max_{x,y} |d_n(x, y) − d_∞(f x, f y)|`.
pub fn gh_distortion(f: &[usize], xn: &FiniteMMSpace, xinf: &FiniteMMSpace) -> Result<f64> {
    check_map(f, xn, xinf)?;
    let mut worst: f64 = 0.0;
    for x in 0..xn.len() {
        for y in 0..x {
            worst = worst.max((xn.dist(x, y) - xinf.dist(f[x], f[y])).abs());
        }
    }
    Ok(worst)
}

/// Largest distance from a point of `X_∞` to the image `f(X_n)`.
pub fn gh_coverage(f: &[usize], xn: &FiniteMMSpace, xinf: &FiniteMMSpace) -> Result<f64> {
    check_map(f, xn, xinf)?;
    let mut image = f.to_vec();
    image.sort_unstable();
    image.dedup();
    Ok((0..xinf.len())
        .map(|y| image.iter().map(|&z| xinf.dist(y, z)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

/// Truncated distance functions `y ↦ 1 ∧ d(y, p)`, one per point `p` of `space`.
pub fn default_dictionary(space: &FiniteMMSpace) -> Vec<Vec<f64>> {
    (0..space.len())
        .map(|p| space.dist_row(p).iter().map(|d| d.min(1.0)).collect())
        .collect()
}

/// `max_φ |Σ φ(f x) m_n(x) − Σ φ(y) m_∞(y)|` over a dictionary of test
/// functions on `X_∞` (default: [`default_dictionary`]).
pub fn measure_pushforward_gap(
    f: &[usize],
    xn: &FiniteMMSpace,
    xinf: &FiniteMMSpace,
    dictionary: Option<&[Vec<f64>]>,
) -> Result<f64> {
    check_map(f, xn, xinf)?;
    let owned;
    let dict = match dictionary {
        Some(d) => d,
        None => {
            owned = default_dictionary(xinf);
            &owned
        }
    };
    if dict.is_empty() {
        return Err(Error::InvalidInput("test-function dictionary is empty".into()));
    }
    let mut worst: f64 = 0.0;
    for phi in dict {
        if phi.len() != xinf.len() || phi.iter().any(|v| !(v.abs() <= 1.0 + 1e-12)) {
            return Err(Error::InvalidInput("test functions must be defined on X_∞ and bounded by 1".into()));
        }
        let pushed: f64 = f.iter().zip(xn.weights()).map(|(&y, w)| phi[y] * w).sum();
        let target: f64 = phi.iter().zip(xinf.weights()).map(|(v, w)| v * w).sum();
        worst = worst.max((pushed - target).abs());
    }
    Ok(worst)
}

/// Nearest point of `xinf` for every point of `xn`, measured in the shared
/// ambient space; ties go to the smallest index.
pub fn nearest_point_map(xn: &FiniteMMSpace, xinf: &FiniteMMSpace) -> Result<Vec<usize>> {
    let (a, b) = shared(xn, xinf)?;
    Ok((0..xn.len())
        .map(|x| {
            let mut best = (0, f64::INFINITY);
            for y in 0..xinf.len() {
                let d = a.cross_distance(x, b, y);
                if d < best.1 {
                    best = (y, d);
                }
            }
            best.0
        })
        .collect())
}

pub(crate) fn shared<'a>(
    x: &'a FiniteMMSpace,
    y: &'a FiniteMMSpace,
) -> Result<(&'a AmbientEmbedding, &'a AmbientEmbedding)> {
    match (x.ambient(), y.ambient()) {
        (Some(a), Some(b)) if a.shares_ambient(b) => Ok((a, b)),
        _ => Err(Error::NoSharedAmbient),
    }
}

/// Hausdorff distance between two point sets of one ambient space.
pub fn hausdorff_distance(a: &AmbientEmbedding, b: &AmbientEmbedding) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Hausdorff distance of an empty set".into()));
    }
    if !a.shares_ambient(b) {
        return Err(Error::NoSharedAmbient);
    }
    let directed = |p: &AmbientEmbedding, q: &AmbientEmbedding| {
        (0..p.len())
            .map(|i| (0..q.len()).map(|j| p.cross_distance(i, q, j)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

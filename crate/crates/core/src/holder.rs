//! Hölder extension by the sup formula `F(x) = max_a {f(a) − H·d(a, x)^α}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::space::{AmbientEmbedding, FiniteMMSpace};

/// Indexed points with a distance.
pub trait PointMetric: Sync {
    fn len(&self) -> usize;
    fn distance(&self, i: usize, j: usize) -> f64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PointMetric for FiniteMMSpace {
    fn len(&self) -> usize {
        FiniteMMSpace::len(self)
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist(i, j)
    }
}

impl PointMetric for AmbientEmbedding {
    fn len(&self) -> usize {
        AmbientEmbedding::len(self)
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        AmbientEmbedding::distance(self, i, j)
    }
}

const TOL: f64 = 1e-12;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("Hölder exponent must lie in (0, 1], got {alpha}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderConstant {
    pub value: f64,
    /// Set when the domain has fewer than two points and the constant is 0
    /// by convention.
    pub singleton: bool,
}

/// `max_{x≠y ∈ A} |f(x) − f(y)| / d(x, y)^α`.
pub fn holder_constant(metric: &impl PointMetric, domain: &[usize], values: &[f64], alpha: f64) -> Result<HolderConstant> {
    check_alpha(alpha)?;
    if domain.len() != values.len() {
        return invalid("one value per domain point");
    }
    if domain.iter().any(|&a| a >= metric.len()) {
        return invalid("domain point out of range");
    }
    if domain.len() < 2 {
        return Ok(HolderConstant { value: 0.0, singleton: true });
    }
    let value = (0..domain.len())
        .into_par_iter()
        .map(|i| {
            (0..i)
                .map(|j| {
                    let d = metric.distance(domain[i], domain[j]);
                    (values[i] - values[j]).abs() / d.powf(alpha)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(HolderConstant { value, singleton: false })
}

/// A function on a finite subset `A` with a Hölder bound `H` of exponent `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFunction {
    domain: Vec<usize>,
    values: Vec<f64>,
    alpha: f64,
    h: f64,
}

impl HolderFunction {
    /// Checks `|f(x) − f(y)| ≤ H·d(x, y)^α` on all pairs of `domain`.
    pub fn new(metric: &impl PointMetric, domain: Vec<usize>, values: Vec<f64>, alpha: f64, h: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(h >= 0.0 && h.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return invalid("Hölder constant and values must be finite, constant nonnegative");
        }
        if domain.is_empty() || domain.len() != values.len() {
            return invalid("need a nonempty domain with one value per point");
        }
        let mut sorted = domain.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return invalid("domain points must be distinct");
        }
        let k = holder_constant(metric, &domain, &values, alpha)?;
        if k.value > h + TOL {
            return invalid(format!("values have Hölder constant {} > H = {h}", k.value));
        }
        Ok(Self { domain, values, alpha, h })
    }

    pub fn domain(&self) -> &[usize] {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn constant(&self) -> f64 {
        self.h
    }
}

/// Extension to every point of `metric`. On `A` the values are returned
/// unchanged, where the formula attains them up to rounding.
pub fn extend(f: &HolderFunction, metric: &impl PointMetric) -> Result<Vec<f64>> {
    if f.domain.iter().any(|&a| a >= metric.len()) {
        return invalid("domain point outside the target set");
    }
    let mut out: Vec<f64> = (0..metric.len())
        .into_par_iter()
        .map(|x| {
            f.domain
                .iter()
                .zip(&f.values)
                .map(|(&a, &v)| v - f.h * metric.distance(a, x).powf(f.alpha))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    for (&a, &v) in f.domain.iter().zip(&f.values) {
        out[a] = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_model_space, ModelFamily};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants() {
        let s = build_model_space(ModelFamily::Interval, 2, 1.0).unwrap();
        assert_eq!(holder_constant(&s, &[0, 1], &[0.0, 1.0], 1.0).unwrap().value, 1.0);
        assert_eq!(holder_constant(&s, &[0, 1], &[2.0, 2.0], 0.5).unwrap().value, 0.0);
        assert!(holder_constant(&s, &[1], &[2.0], 0.5).unwrap().singleton);
        assert!(holder_constant(&s, &[0, 1], &[0.0, 1.0], 1.5).is_err());
    }

    #[test]
    fn singleton_extension() {
        let s = build_model_space(ModelFamily::Interval, 9, 2.0).unwrap();
        let f = HolderFunction::new(&s, vec![4], vec![0.7], 0.5, 3.0).unwrap();
        let ext = extend(&f, &s).unwrap();
        for (x, v) in ext.iter().enumerate() {
            assert_abs_diff_eq!(*v, 0.7 - 3.0 * s.dist(4, x).sqrt(), epsilon = 1e-15);
        }
        assert!(HolderFunction::new(&s, vec![0, 8], vec![0.0, 10.0], 1.0, 1.0).is_err());
    }
}

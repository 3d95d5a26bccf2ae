//! Finite metric measure spaces: storage, validation, model families,
//! cones and reweighting, geometric inequality checks and file I/O.

mod ambient;
pub mod geometry;
pub mod io;
mod models;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ambient::{angle_gap, cone_distance, AmbientEmbedding, AmbientSpace};
pub use models::{build_model_space, cone_space, cone_space_with_cutoff, weighted_space, ModelFamily};

/// Tolerance used for the triangle inequality and the mass normalization.
pub const METRIC_TOL: f64 = 1e-12;

/// Curvature/dimension/diameter parameters attached to a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceMeta {
    /// Lower Ricci bound `K`.
    pub curvature: f64,
    /// Upper dimension bound `N`, strictly greater than 1.
    pub dimension: f64,
    /// Diameter bound `D`.
    pub diameter_bound: f64,
    pub label: String,
    pub ambient: Option<AmbientEmbedding>,
    /// Covering radius of the net inside the modelled continuum, if known.
    pub covering_radius: Option<f64>,
    /// Riemannian volume of the modelled continuum, if known.
    pub volume: Option<f64>,
    /// Volume growth exponent `2ν` of the modelled continuum, if known.
    pub growth_dim: Option<f64>,
}

impl SpaceMeta {
    pub fn new(curvature: f64, dimension: f64, diameter_bound: f64, label: impl Into<String>) -> Self {
        Self {
            curvature,
            dimension,
            diameter_bound,
            label: label.into(),
            ambient: None,
            covering_radius: None,
            volume: None,
            growth_dim: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dimension > 1.0) {
            return Err(Error::Invariant(format!("dimension bound must exceed 1, got {}", self.dimension)));
        }
        if !(self.diameter_bound > 0.0) || !self.curvature.is_finite() {
            return Err(Error::Invariant(format!(
                "need D > 0 and finite K, got D={} K={}",
                self.diameter_bound, self.curvature
            )));
        }
        Ok(())
    }
}

/// Which invariant of a [`FiniteMMSpace`] failed, with the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    NonFinite { i: usize, j: usize },
    Diagonal { i: usize },
    Asymmetric { i: usize, j: usize },
    NotDistinct { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
    Weight { i: usize },
    Mass(f64),
    Diameter { diameter: f64, bound: f64 },
    Meta(String),
    Embedding { i: usize, j: usize, gap: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Shape(s) | Violation::Meta(s) => write!(f, "{s}"),
            Violation::NonFinite { i, j } => write!(f, "distance ({i},{j}) is not finite"),
            Violation::Diagonal { i } => write!(f, "dist[{i}][{i}] is not zero"),
            Violation::Asymmetric { i, j } => write!(f, "dist[{i}][{j}] != dist[{j}][{i}]"),
            Violation::NotDistinct { i, j } => write!(f, "points {i} and {j} are at distance 0"),
            Violation::Triangle { i, j, k, excess } => {
                write!(f, "triangle inequality fails for ({i},{j},{k}) by {excess:e}")
            }
            Violation::Weight { i } => write!(f, "weight[{i}] is not a positive finite number"),
            Violation::Mass(m) => write!(f, "total mass {m} is not 1"),
            Violation::Diameter { diameter, bound } => {
                write!(f, "diameter {diameter} exceeds the bound D={bound}")
            }
            Violation::Embedding { i, j, gap } => {
                write!(f, "ambient distance of ({i},{j}) differs from dist by {gap:e}")
            }
        }
    }
}

/// A finite metric measure space with a probability measure of full support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMMSpace {
    n: usize,
    dist: Vec<f64>,
    weight: Vec<f64>,
    meta: SpaceMeta,
}

impl FiniteMMSpace {
    /// Builds a space from a row-major `n × n` distance matrix, validating
    /// every invariant.
    pub fn new(dist: Vec<f64>, weight: Vec<f64>, meta: SpaceMeta) -> Result<Self> {
        let n = weight.len();
        let space = Self { n, dist, weight, meta };
        if let Some(v) = space.find_violation() {
            return Err(Error::Invariant(v.to_string()));
        }
        Ok(space)
    }

    /// Like [`FiniteMMSpace::new`] but reports the violation structurally.
    pub(crate) fn new_detailed(
        dist: Vec<f64>,
        weight: Vec<f64>,
        meta: SpaceMeta,
    ) -> std::result::Result<Self, Violation> {
        let n = weight.len();
        let space = Self { n, dist, weight, meta };
        match space.find_violation() {
            Some(v) => Err(v),
            None => Ok(space),
        }
    }

    /// Builds a space from a distance function over `0..n`.
    pub fn from_fn(n: usize, weight: Vec<f64>, meta: SpaceMeta, d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = d(i, j);
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        Self::new(dist, weight, meta)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn dist_row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn dist_matrix(&self) -> &[f64] {
        &self.dist
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weight[i]
    }

    pub fn meta(&self) -> &SpaceMeta {
        &self.meta
    }

    pub fn ambient(&self) -> Option<&AmbientEmbedding> {
        self.meta.ambient.as_ref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.label = label.into();
        self
    }

    /// Replaces the weights, re-checking positivity and normalization.
    pub fn with_weights(&self, weight: Vec<f64>) -> Result<Self> {
        if weight.len() != self.n {
            return Err(Error::InvalidInput(format!("expected {} weights, got {}", self.n, weight.len())));
        }
        let space = Self { weight, ..self.clone() };
        if let Some(v) = space.check_weights() {
            return Err(Error::Invariant(v.to_string()));
        }
        Ok(space)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Largest nearest-neighbour distance: the coarsest local spacing of the net.
    pub fn grid_spacing(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.dist_row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &d)| d)
                    .fold(f64::INFINITY, f64::min)
            })
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    /// Covering radius from metadata, else half the grid spacing.
    pub fn covering_radius(&self) -> f64 {
        self.meta.covering_radius.unwrap_or_else(|| 0.5 * self.grid_spacing())
    }

    /// Mass of the open ball `B_r(x) = {y : d(x, y) < r}`.
    pub fn ball_mass(&self, x: usize, r: f64) -> f64 {
        self.dist_row(x)
            .iter()
            .zip(&self.weight)
            .filter(|(d, _)| **d < r)
            .map(|(_, w)| w)
            .sum()
    }

    /// Index of the point minimizing `f`, ties to the smallest index.
    pub fn argmin_by(&self, f: impl Fn(usize) -> f64) -> usize {
        let mut best = 0;
        let mut best_v = f64::INFINITY;
        for i in 0..self.n {
            let v = f(i);
            if v < best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }

    /// Sha-256 of the canonical text serialization.
    pub fn content_hash(&self) -> String {
        crate::numerics::sha256_hex(io::to_text(self).as_bytes())
    }

    fn check_weights(&self) -> Option<Violation> {
        for (i, w) in self.weight.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Some(Violation::Weight { i });
            }
        }
        let mass: f64 = self.weight.iter().sum();
        if (mass - 1.0).abs() > METRIC_TOL * (self.n as f64).max(1.0).sqrt().max(1.0) {
            return Some(Violation::Mass(mass));
        }
        None
    }

    /// First invariant violation found, if any.
    pub fn find_violation(&self) -> Option<Violation> {
        let n = self.n;
        if n == 0 {
            return Some(Violation::Shape("space has no points".into()));
        }
        if self.dist.len() != n * n {
            return Some(Violation::Shape(format!(
                "distance matrix has {} entries, expected {}",
                self.dist.len(),
                n * n
            )));
        }
        if let Err(e) = self.meta.validate() {
            return Some(Violation::Meta(e.to_string()));
        }
        for i in 0..n {
            for j in 0..n {
                let d = self.dist(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Some(Violation::NonFinite { i, j });
                }
            }
            if self.dist(i, i) != 0.0 {
                return Some(Violation::Diagonal { i });
            }
            for j in 0..i {
                if self.dist(i, j) != self.dist(j, i) {
                    return Some(Violation::Asymmetric { i, j });
                }
                if self.dist(i, j) == 0.0 {
                    return Some(Violation::NotDistinct { i, j });
                }
            }
        }
        if let Some(v) = self.check_weights() {
            return Some(v);
        }
        let diameter = self.diameter();
        if diameter > self.meta.diameter_bound * (1.0 + METRIC_TOL) {
            return Some(Violation::Diameter { diameter, bound: self.meta.diameter_bound });
        }
        if let Some(v) = self.check_triangles() {
            return Some(v);
        }
        if let Some(emb) = &self.meta.ambient {
            if emb.len() != n {
                return Some(Violation::Shape(format!("embedding has {} points, space has {n}", emb.len())));
            }
            for i in 0..n {
                for j in 0..i {
                    let gap = (emb.distance(i, j) - self.dist(i, j)).abs();
                    if gap > 1e-9 {
                        return Some(Violation::Embedding { i, j, gap });
                    }
                }
            }
        }
        None
    }

    /// Exhaustive triple check up to 512 points, 10⁶ seeded random triples beyond.
    fn check_triangles(&self) -> Option<Violation> {
        let n = self.n;
        let scale = self.diameter().max(1.0);
        let tol = METRIC_TOL * scale;
        let test = |i: usize, j: usize, k: usize| {
            let excess = self.dist(i, k) - self.dist(i, j) - self.dist(j, k);
            (excess > tol).then_some(Violation::Triangle { i, j, k, excess })
        };
        if n <= 512 {
            for i in 0..n {
                let row_i = self.dist_row(i);
                for j in 0..n {
                    let dij = row_i[j];
                    let row_j = self.dist_row(j);
                    for k in 0..n {
                        if row_i[k] - dij - row_j[k] > tol {
                            return test(i, j, k);
                        }
                    }
                }
            }
            None
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7472_6961_6e67_6c65);
            for _ in 0..1_000_000 {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if let Some(v) = test(i, j, k) {
                    return Some(v);
                }
            }
            None
        }
    }
}

/// Validates a probability vector on `n` points.
pub(crate) fn check_probability(p: &[f64], n: usize, what: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::InvalidInput(format!("{what}: expected {n} entries, got {}", p.len())));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidInput(format!("{what}: entries must be finite and nonnegative")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(gap: f64) -> FiniteMMSpace {
        FiniteMMSpace::new(vec![0.0, gap, gap, 0.0], vec![0.5, 0.5], SpaceMeta::new(0.0, 2.0, gap, "two")).unwrap()
    }

    #[test]
    fn rejects_broken_spaces() {
        let meta = || SpaceMeta::new(0.0, 2.0, 10.0, "t");
        let tri = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        assert!(matches!(
            FiniteMMSpace::new_detailed(tri, vec![1.0 / 3.0; 3], meta()),
            Err(Violation::Triangle { .. })
        ));
        let asym = vec![0.0, 1.0, 2.0, 0.0];
        assert!(FiniteMMSpace::new(asym, vec![0.5, 0.5], meta()).is_err());
        let dup = vec![0.0, 0.0, 0.0, 0.0];
        assert!(FiniteMMSpace::new(dup, vec![0.5, 0.5], meta()).is_err());
        assert!(FiniteMMSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![0.6, 0.6], meta()).is_err());
        assert!(FiniteMMSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0], meta()).is_err());
        let small_d = SpaceMeta::new(0.0, 2.0, 0.5, "t");
        assert!(FiniteMMSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.5], small_d).is_err());
        let bad_n = SpaceMeta::new(0.0, 1.0, 2.0, "t");
        assert!(FiniteMMSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.5], bad_n).is_err());
    }

    #[test]
    fn balls_are_open() {
        let s = two_point(1.0);
        assert_eq!(s.ball_mass(0, 1.0), 0.5);
        assert_eq!(s.ball_mass(0, 1.0 + 1e-12), 1.0);
        assert_eq!(s.grid_spacing(), 1.0);
    }
}

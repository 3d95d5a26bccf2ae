use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A metric space large enough to hold several finite spaces at once.
///
/// Points are described by coordinate vectors whose layout depends on the
/// variant (see [`AmbientSpace::distance`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientSpace {
    /// `R^dim` with the Euclidean metric.
    Euclidean { dim: usize },
    /// Round circle of the given radius; one coordinate, the angle.
    Circle { radius: f64 },
    /// Flat torus `(R / side Z)^d`; `d` coordinates.
    FlatTorus { side: f64 },
    /// Round 2-sphere; coordinates are a unit vector in `R^3`.
    Sphere { radius: f64 },
    /// Metric cone over `base` with curvature parameter `k`.
    /// Coordinates: radial parameter followed by the base coordinates.
    Cone { base: Arc<AmbientSpace>, k: f64 },
    /// Explicit finite metric; one coordinate holding the point index.
    Finite { n: usize, dist: Vec<f64> },
    /// Paths on a time grid in `base`, compared by the local uniform
    /// distance truncated at `t_max`. Coordinates are the concatenated
    /// base coordinates at each grid time.
    Paths {
        base: Arc<AmbientSpace>,
        times: Vec<f64>,
        t_max: f64,
    },
}

impl AmbientSpace {
    /// Number of coordinates per point, when fixed by the variant.
    pub fn coord_len(&self) -> Option<usize> {
        match self {
            AmbientSpace::Euclidean { dim } => Some(*dim),
            AmbientSpace::Circle { .. } => Some(1),
            AmbientSpace::FlatTorus { .. } => None,
            AmbientSpace::Sphere { .. } => Some(3),
            AmbientSpace::Cone { base, .. } => base.coord_len().map(|l| l + 1),
            AmbientSpace::Finite { .. } => Some(1),
            AmbientSpace::Paths { base, times, .. } => base.coord_len().map(|l| l * times.len()),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            AmbientSpace::Euclidean { .. } => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            AmbientSpace::Circle { radius } => radius * angle_gap(a[0], b[0]),
            AmbientSpace::FlatTorus { side } => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let g = (x - y).rem_euclid(*side);
                    let g = g.min(side - g);
                    g * g
                })
                .sum::<f64>()
                .sqrt(),
            AmbientSpace::Sphere { radius } => {
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                let cx = a[1] * b[2] - a[2] * b[1];
                let cy = a[2] * b[0] - a[0] * b[2];
                let cz = a[0] * b[1] - a[1] * b[0];
                radius * (cx * cx + cy * cy + cz * cz).sqrt().atan2(dot)
            }
            AmbientSpace::Cone { base, k } => {
                let theta = base.distance(&a[1..], &b[1..]);
                cone_distance(*k, a[0], b[0], theta)
            }
            AmbientSpace::Finite { n, dist } => {
                let i = a[0] as usize;
                let j = b[0] as usize;
                dist[i * n + j]
            }
            AmbientSpace::Paths { base, times, t_max } => {
                let len = a.len() / times.len();
                let gaps: Vec<f64> = (0..times.len())
                    .map(|s| base.distance(&a[s * len..(s + 1) * len], &b[s * len..(s + 1) * len]))
                    .collect();
                crate::transport::path::delta_from_gaps(times, &gaps, *t_max).value
            }
        }
    }

    /// Checks that a coordinate vector has the right shape for this space.
    pub fn check_coords(&self, c: &[f64]) -> Result<()> {
        if let Some(len) = self.coord_len() {
            if c.len() != len {
                return invalid(format!("expected {len} ambient coordinates, got {}", c.len()));
            }
        }
        if c.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite ambient coordinate");
        }
        if let AmbientSpace::Finite { n, .. } = self {
            let i = c[0];
            if i < 0.0 || i.fract() != 0.0 || i as usize >= *n {
                return invalid(format!("finite ambient index {i} out of range"));
            }
        }
        Ok(())
    }
}

/// Angular gap in `[0, π]` between two angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let g = (a - b).rem_euclid(2.0 * PI);
    g.min(2.0 * PI - g)
}

/// Distance between `(s, x)` and `(t, y)` in the `k`-cone, where
/// `theta = d(x, y)` is the base distance (truncated at π).
///
/// Evaluated through the haversine form of the spherical/hyperbolic law of
/// cosines, which is exact in the same cases as the cosine form but does
/// not lose precision for nearby points.
pub fn cone_distance(k: f64, s: f64, t: f64, theta: f64) -> f64 {
    let theta = theta.min(PI);
    let half = (0.5 * theta).sin();
    let h2 = half * half;
    if k > 0.0 {
        let sk = k.sqrt();
        let a = (0.5 * sk * (s - t)).sin();
        let inner = a * a + (sk * s).sin() * (sk * t).sin() * h2;
        2.0 * inner.clamp(0.0, 1.0).sqrt().asin() / sk
    } else if k < 0.0 {
        let sk = (-k).sqrt();
        let a = (0.5 * sk * (s - t)).sinh();
        let inner = a * a + (sk * s).sinh() * (sk * t).sinh() * h2;
        2.0 * inner.max(0.0).sqrt().asinh() / sk
    } else {
        ((s - t) * (s - t) + 4.0 * s * t * h2).max(0.0).sqrt()
    }
}

/// Coordinates of a set of points inside a shared ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientEmbedding {
    pub ambient: Arc<AmbientSpace>,
    pub coords: Vec<Vec<f64>>,
}

impl AmbientEmbedding {
    pub fn new(ambient: Arc<AmbientSpace>, coords: Vec<Vec<f64>>) -> Result<Self> {
        for c in &coords {
            ambient.check_coords(c)?;
        }
        Ok(Self { ambient, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.ambient.distance(&self.coords[i], &self.coords[j])
    }

    /// Whether `other` lives in the same ambient space as `self`.
    pub fn shares_ambient(&self, other: &AmbientEmbedding) -> bool {
        Arc::ptr_eq(&self.ambient, &other.ambient) || self.ambient == other.ambient
    }

    /// Distance from point `i` of `self` to point `j` of `other`.
    pub fn cross_distance(&self, i: usize, other: &AmbientEmbedding, j: usize) -> f64 {
        self.ambient.distance(&self.coords[i], &other.coords[j])
    }
}

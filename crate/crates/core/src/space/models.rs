use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{cone_distance, AmbientEmbedding, AmbientSpace, FiniteMMSpace, SpaceMeta};
use crate::error::{Error, Result};
use crate::numerics::adaptive_simpson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Circle,
    Torus2,
    Interval,
    Sphere2,
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Self::Circle),
            "torus2" => Ok(Self::Torus2),
            "interval" => Ok(Self::Interval),
            "sphere2" => Ok(Self::Sphere2),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Circle => "circle",
            Self::Torus2 => "torus2",
            Self::Interval => "interval",
            Self::Sphere2 => "sphere2",
        })
    }
}

/// Net of a model manifold with exact geodesic distances and
/// volume-proportional weights.
///
/// * `circle`: `n` equispaced points on the circle of radius `scale`.
/// * `torus2`: square `√n × √n` grid on the flat torus of side `2π·scale`
///   (`n` must be a perfect square).
/// * `interval`: `n` equispaced points on `[0, scale]`, trapezoid weights.
/// * `sphere2`: Fibonacci lattice on the sphere of radius `scale`.
pub fn build_model_space(family: ModelFamily, n_points: usize, scale: f64) -> Result<FiniteMMSpace> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
    }
    let need = match family {
        ModelFamily::Sphere2 => 4,
        ModelFamily::Torus2 => 4,
        _ => 2,
    };
    if n_points < need {
        return Err(Error::TooFewPoints { family: family.to_string(), got: n_points, need });
    }
    match family {
        ModelFamily::Circle => circle(n_points, scale),
        ModelFamily::Torus2 => torus(n_points, scale),
        ModelFamily::Interval => interval(n_points, scale),
        ModelFamily::Sphere2 => sphere(n_points, scale),
    }
}

fn finish(
    ambient: AmbientSpace,
    coords: Vec<Vec<f64>>,
    weight: Vec<f64>,
    mut meta: SpaceMeta,
) -> Result<FiniteMMSpace> {
    let emb = AmbientEmbedding::new(Arc::new(ambient), coords)?;
    let n = emb.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = emb.distance(i, j);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    meta.label = format!("{} eps={:.6}", meta.label, meta.covering_radius.unwrap_or(f64::NAN));
    meta.ambient = Some(emb);
    FiniteMMSpace::new(dist, weight, meta)
}

fn circle(n: usize, radius: f64) -> Result<FiniteMMSpace> {
    let coords = (0..n).map(|k| vec![2.0 * PI * k as f64 / n as f64]).collect();
    let mut meta = SpaceMeta::new(0.0, 2.0, PI * radius, format!("circle n={n} scale={radius}"));
    meta.covering_radius = Some(PI * radius / n as f64);
    meta.volume = Some(2.0 * PI * radius);
    meta.growth_dim = Some(1.0);
    finish(AmbientSpace::Circle { radius }, coords, vec![1.0 / n as f64; n], meta)
}

fn torus(n: usize, scale: f64) -> Result<FiniteMMSpace> {
    let side_n = (n as f64).sqrt().round() as usize;
    if side_n * side_n != n {
        return Err(Error::InvalidInput(format!("torus2 needs a perfect square point count, got {n}")));
    }
    let side = 2.0 * PI * scale;
    let h = side / side_n as f64;
    let mut coords = Vec::with_capacity(n);
    for i in 0..side_n {
        for j in 0..side_n {
            coords.push(vec![i as f64 * h, j as f64 * h]);
        }
    }
    let mut meta = SpaceMeta::new(0.0, 2.0, 0.5 * side * 2f64.sqrt(), format!("torus2 n={n} scale={scale}"));
    meta.covering_radius = Some(0.5 * h * 2f64.sqrt());
    meta.volume = Some(side * side);
    meta.growth_dim = Some(2.0);
    finish(AmbientSpace::FlatTorus { side }, coords, vec![1.0 / n as f64; n], meta)
}

fn interval(n: usize, length: f64) -> Result<FiniteMMSpace> {
    let h = length / (n - 1) as f64;
    let coords = (0..n).map(|i| vec![if i + 1 == n { length } else { i as f64 * h }]).collect();
    let mut weight = vec![1.0; n];
    weight[0] = 0.5;
    weight[n - 1] = 0.5;
    let total = (n - 1) as f64;
    for w in &mut weight {
        *w /= total;
    }
    let mut meta = SpaceMeta::new(0.0, 2.0, length, format!("interval n={n} scale={length}"));
    meta.covering_radius = Some(0.5 * h);
    meta.volume = Some(length);
    meta.growth_dim = Some(1.0);
    finish(AmbientSpace::Euclidean { dim: 1 }, coords, weight, meta)
}

fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn sphere(n: usize, radius: f64) -> Result<FiniteMMSpace> {
    let coords = fibonacci_sphere(n);
    // Covering radius estimated against a much denser lattice.
    let probe = fibonacci_sphere((40 * n).clamp(4000, 40_000));
    let amb = AmbientSpace::Sphere { radius };
    let cov = probe
        .iter()
        .map(|p| coords.iter().map(|c| amb.distance(p, c)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let mut meta = SpaceMeta::new(1.0 / (radius * radius), 2.0, PI * radius, format!("sphere2 n={n} scale={radius}"));
    meta.covering_radius = Some(cov);
    meta.volume = Some(4.0 * PI * radius * radius);
    meta.growth_dim = Some(2.0);
    finish(amb, coords, vec![1.0 / n as f64; n], meta)
}

/// `sin_K(t)`: `sin(√K t)/√K`, `t`, or `sinh(√−K t)/√−K`.
pub(crate) fn sin_k(k: f64, t: f64) -> f64 {
    if k > 0.0 {
        let s = k.sqrt();
        (s * t).sin() / s
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (s * t).sinh() / s
    } else {
        t
    }
}

/// `(K, N)`-cone over `base`, truncated at radius `D` of the base when `K ≤ 0`.
pub fn cone_space(base: &FiniteMMSpace, k: f64, n_dim: f64, n_radial: usize) -> Result<FiniteMMSpace> {
    cone_space_with_cutoff(base, k, n_dim, n_radial, None)
}

/// Cone over `base` with an explicit radial cutoff (ignored when `K > 0`,
/// where the cone closes up at `π/√K`).
///
/// Radial levels: for `K ≤ 0`, `t_j = j·R_max/n_radial` (`j = 1..=n_radial`)
/// plus the apex; for `K > 0`, `n_radial` interior levels evenly spaced in
/// `(0, π/√K)` plus both apices. Each point carries the base weight times
/// `∫ sin_K^N` over its radial cell.
pub fn cone_space_with_cutoff(
    base: &FiniteMMSpace,
    k: f64,
    n_dim: f64,
    n_radial: usize,
    r_max: Option<f64>,
) -> Result<FiniteMMSpace> {
    if n_radial < 2 {
        return Err(Error::InvalidInput(format!("cone needs at least 2 radial levels, got {n_radial}")));
    }
    if !(n_dim > 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!("invalid cone parameters K={k} N={n_dim}")));
    }
    if k > 0.0 && base.diameter() > PI * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "positive-curvature cone needs base diameter <= π, got {}",
            base.diameter()
        )));
    }
    #[allow(clippy::type_complexity)]
    let (top, levels, cells, apices): (f64, Vec<f64>, Vec<(f64, f64)>, Vec<(f64, (f64, f64))>) = if k > 0.0 {
        let top = PI / k.sqrt();
        let dt = top / (n_radial + 1) as f64;
        let levels: Vec<f64> = (1..=n_radial).map(|j| j as f64 * dt).collect();
        let cells = levels.iter().map(|&t| (t - 0.5 * dt, t + 0.5 * dt)).collect();
        (top, levels, cells, vec![(0.0, (0.0, 0.5 * dt)), (top, (top - 0.5 * dt, top))])
    } else {
        let top = r_max.unwrap_or(base.meta().diameter_bound);
        if !(top > 0.0) {
            return Err(Error::InvalidInput(format!("cone cutoff must be positive, got {top}")));
        }
        let dt = top / n_radial as f64;
        let levels: Vec<f64> = (1..=n_radial).map(|j| j as f64 * dt).collect();
        let cells = levels
            .iter()
            .map(|&t| (t - 0.5 * dt, (t + 0.5 * dt).min(top)))
            .collect();
        (top, levels, cells, vec![(0.0, (0.0, 0.5 * dt))])
    };
    let radial_mass = |(a, b): (f64, f64)| adaptive_simpson(|t| sin_k(k, t).abs().powf(n_dim), a, b, 1e-10);

    let nb = base.len();
    // Points: apices first, then level-major grid.
    let mut radius = Vec::new();
    let mut base_idx = Vec::new();
    let mut weight = Vec::new();
    for &(t, cell) in &apices {
        radius.push(t);
        base_idx.push(0);
        weight.push(radial_mass(cell));
    }
    for (&t, &cell) in levels.iter().zip(&cells) {
        let rm = radial_mass(cell);
        for b in 0..nb {
            radius.push(t);
            base_idx.push(b);
            weight.push(rm * base.weight(b));
        }
    }
    let total: f64 = weight.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("cone radial measure vanishes".into()));
    }
    for w in &mut weight {
        *w /= total;
    }
    let n = radius.len();
    let mut dist = vec![0.0; n * n];
    let mut diameter: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            let theta = base.dist(base_idx[i], base_idx[j]);
            let d = cone_distance(k, radius[i], radius[j], theta);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
            diameter = diameter.max(d);
        }
    }

    let bm = base.meta();
    let mut meta = SpaceMeta::new(
        k * n_dim,
        n_dim + 1.0,
        diameter.max(f64::MIN_POSITIVE),
        format!("cone(K={k}, N={n_dim}, levels={n_radial}) over [{}]", bm.label),
    );
    let dt = levels[1] - levels[0];
    let outer = *levels.last().unwrap();
    meta.covering_radius = Some((0.25 * dt * dt + (sin_k(k, outer).abs() * base.covering_radius()).powi(2)).sqrt());
    meta.growth_dim = bm.growth_dim.map(|g| g + 1.0);
    meta.volume = bm.volume.map(|v| v * radial_mass((0.0, top)));
    if let Some(emb) = base.ambient() {
        let amb = Arc::new(AmbientSpace::Cone { base: emb.ambient.clone(), k });
        let coords = radius
            .iter()
            .zip(&base_idx)
            .map(|(&t, &b)| {
                let mut c = vec![t];
                c.extend_from_slice(&emb.coords[b]);
                c
            })
            .collect();
        meta.ambient = Some(AmbientEmbedding::new(amb, coords)?);
    }
    FiniteMMSpace::new(dist, weight, meta)
}

/// Reweights `base` by `exp(−V)`, renormalized to mass 1.
pub fn weighted_space(base: &FiniteMMSpace, potential: &[f64]) -> Result<FiniteMMSpace> {
    if potential.len() != base.len() {
        return Err(Error::InvalidInput(format!(
            "potential has {} entries, space has {}",
            potential.len(),
            base.len()
        )));
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("potential must be finite".into()));
    }
    let vmin = potential.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = potential
        .iter()
        .zip(base.weights())
        .map(|(v, w)| (-(v - vmin)).exp() * w)
        .collect();
    let total: f64 = raw.iter().sum();
    let weight = raw.into_iter().map(|w| w / total).collect();
    Ok(base.with_weights(weight)?.with_label(format!("weighted [{}]", base.meta().label)))
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::unit_ball_volume;
use crate::space::geometry::volume_growth_floor;
use crate::space::FiniteMMSpace;

/// Kernel length scale for the graph weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Twice the covering radius of the net.
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Bandwidth::Auto);
        }
        s.parse::<f64>()
            .map(Bandwidth::Fixed)
            .map_err(|_| Error::InvalidInput(format!("bandwidth must be `auto` or a number, got `{s}`")))
    }
}

/// Edges are kept up to this many bandwidths.
pub const CUTOFF: f64 = 3.0;

/// Symmetric conductances on a finite space; the discrete Dirichlet form is
/// `E(u) = ½ Σ_{x,y} w_xy (u_x − u_y)²`.
#[derive(Debug, Clone)]
pub struct DirichletGraph {
    space: Arc<FiniteMMSpace>,
    /// Neighbour lists `(y, w_xy)` with `y ≠ x`, symmetric.
    adjacency: Vec<Vec<(usize, f64)>>,
    bandwidth: f64,
    /// Half the volume growth exponent used in the weight scaling.
    nu: f64,
    /// Volume used in the weight normalization.
    volume: f64,
}

impl DirichletGraph {
    pub fn space(&self) -> &Arc<FiniteMMSpace> {
        &self.space
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbours(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.adjacency[x].iter().find(|e| e.0 == y).map_or(0.0, |e| e.1)
    }

    /// Earliest time from which kernel positivity is enforced: `ε²`.
    pub fn t_pos(&self) -> f64 {
        self.bandwidth * self.bandwidth
    }

    /// Bilinear form `E(u, v) = ½ Σ w_xy (u_x − u_y)(v_x − v_y)`.
    pub fn energy_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut total = 0.0;
        for (x, nb) in self.adjacency.iter().enumerate() {
            for &(y, w) in nb {
                if y > x {
                    total += w * (u[x] - u[y]) * (v[x] - v[y]);
                }
            }
        }
        total
    }

    /// Dense `D − W` (row-major).
    pub(crate) fn laplacian_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut l = vec![0.0; n * n];
        for (x, nb) in self.adjacency.iter().enumerate() {
            for &(y, w) in nb {
                l[x * n + y] -= w;
                l[x * n + x] += w;
            }
        }
        l
    }
}

/// Graph energy of `u`: `½ Σ_{x,y} w_xy (u_x − u_y)²`.
pub fn cheeger_energy(graph: &DirichletGraph, u: &[f64]) -> Result<f64> {
    if u.len() != graph.len() || u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("energy needs one finite value per point".into()));
    }
    Ok(graph.energy_form(u, u))
}

/// Builds the truncated Gaussian conductances
/// `w_xy = m_x m_y exp(−d²/ε²) / (c ε^{2ν+2})` for `d ≤ 3ε`,
/// with `c = π^ν / (4·Vol)` so that the generator approximates `−Δ` on the
/// modelled manifold.
///
/// `ν` and `Vol` come from the space metadata when present, otherwise from
/// the volume growth fit.
pub fn build_dirichlet_graph(space: &Arc<FiniteMMSpace>, bandwidth: Bandwidth) -> Result<DirichletGraph> {
    let n = space.len();
    let eps = match bandwidth {
        Bandwidth::Auto => 2.0 * space.covering_radius(),
        Bandwidth::Fixed(e) => e,
    };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {eps}")));
    }
    let meta = space.meta();
    let (nu, volume) = match (meta.growth_dim, meta.volume) {
        (Some(g), Some(v)) => (0.5 * g, v),
        _ if n == 1 => (0.5, 1.0),
        (g, v) => {
            let fit = volume_growth_floor(space)?;
            let nu = g.map_or(fit.nu, |g| 0.5 * g);
            let vol = v.unwrap_or_else(|| unit_ball_volume(2.0 * nu) / fit.c_mean);
            (nu, vol)
        }
    };
    let c_nu = std::f64::consts::PI.powf(nu) / (4.0 * volume);
    let scale = 1.0 / (c_nu * eps.powf(2.0 * nu + 2.0));
    let reach = CUTOFF * eps * (1.0 + 1e-9);
    let m = space.weights();
    let mut adjacency = vec![Vec::new(); n];
    for x in 0..n {
        let row = space.dist_row(x);
        for y in 0..n {
            let d = row[y];
            if y != x && d <= reach {
                let w = m[x] * m[y] * (-(d * d) / (eps * eps)).exp() * scale;
                adjacency[x].push((y, w));
            }
        }
    }
    let graph = DirichletGraph { space: space.clone(), adjacency, bandwidth: eps, nu, volume };
    if !is_connected(&graph) {
        let suggested = bottleneck(space) / CUTOFF * (1.0 + 1e-6);
        return Err(Error::Disconnected { bandwidth: eps, suggested });
    }
    Ok(graph)
}

fn is_connected(g: &DirichletGraph) -> bool {
    let n = g.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &(y, w) in g.neighbours(x) {
            if w > 0.0 && !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == n
}

/// Longest edge of a minimum spanning tree: the smallest connection radius.
fn bottleneck(space: &FiniteMMSpace) -> f64 {
    let n = space.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut longest: f64 = 0.0;
    for _ in 0..n {
        let x = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[x] = true;
        longest = longest.max(best[x]);
        for y in 0..n {
            if !in_tree[y] {
                best[y] = best[y].min(space.dist(x, y));
            }
        }
    }
    longest
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_model_space, ModelFamily};
    use approx::assert_relative_eq;

    #[test]
    fn two_point_edge_at_a_third() {
        let s = Arc::new(build_model_space(ModelFamily::Interval, 2, 1.0).unwrap());
        let g = build_dirichlet_graph(&s, Bandwidth::Fixed(1.0 / 3.0)).unwrap();
        assert_eq!(g.degree(0), 1);
        let w = g.conductance(0, 1);
        assert_relative_eq!(cheeger_energy(&g, &[1.0, -1.0]).unwrap(), 4.0 * w, max_relative = 1e-15);
        let Err(Error::Disconnected { suggested, .. }) = build_dirichlet_graph(&s, Bandwidth::Fixed(0.3)) else {
            panic!("expected a disconnected graph");
        };
        assert!(suggested >= 1.0 / 3.0 && suggested < 0.334);
    }

    #[test]
    fn circle_auto_bandwidth() {
        let s = Arc::new(build_model_space(ModelFamily::Circle, 256, 1.0).unwrap());
        let g = build_dirichlet_graph(&s, Bandwidth::Auto).unwrap();
        assert!((0..256).all(|x| g.degree(x) >= 2));
        assert_eq!(g.nu(), 0.5);
        let u: Vec<f64> = (0..256).map(|i| (i as f64).sin()).collect();
        assert_relative_eq!(cheeger_energy(&g, &u.iter().map(|x| 2.0 * x).collect::<Vec<_>>()).unwrap(), 4.0 * cheeger_energy(&g, &u).unwrap(), max_relative = 1e-14);
        assert_eq!(cheeger_energy(&g, &[3.0; 256]).unwrap(), 0.0);
    }
}

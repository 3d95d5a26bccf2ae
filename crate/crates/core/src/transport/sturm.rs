//! Exact 𝔻-distance on tiny spaces by multi-start projected descent over
//! metric couplings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{qp, simplex};
use crate::error::{Error, Result};
use crate::space::FiniteMMSpace;

/// Largest `N₁·N₂` accepted by [`d_distance_exact_tiny`].
pub const TINY_BUDGET: usize = 16;
pub const RESTARTS: usize = 32;
pub const AGREEMENT_TOL: f64 = 1e-5;

/// Cross distances extending `d₁` and `d₂` to a pseudo-metric on the
/// disjoint union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCoupling {
    pub n1: usize,
    pub n2: usize,
    /// Row-major `n1 × n2`.
    pub cross: Vec<f64>,
}

impl MetricCoupling {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cross[i * self.n2 + j]
    }

    /// Largest triangle-inequality excess of the block matrix
    /// `[[d₁, cross], [crossᵀ, d₂]]` (0 when it is a pseudo-metric).
    pub fn triangle_excess(&self, x1: &FiniteMMSpace, x2: &FiniteMMSpace) -> f64 {
        let n = self.n1 + self.n2;
        let d = |a: usize, b: usize| -> f64 {
            match (a < self.n1, b < self.n1) {
                (true, true) => x1.dist(a, b),
                (false, false) => x2.dist(a - self.n1, b - self.n1),
                (true, false) => self.get(a, b - self.n1),
                (false, true) => self.get(b, a - self.n1),
            }
        };
        let mut worst = self.cross.iter().fold(0.0f64, |w, &c| w.max(-c));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    worst = worst.max(d(a, c) - d(a, b) - d(b, c));
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TinyDResult {
    pub value: f64,
    pub coupling: MetricCoupling,
    /// Optimal measure coupling for the winning cross distances.
    pub plan: Vec<f64>,
    /// Restart values, in restart order.
    pub restart_values: Vec<f64>,
    /// Number of restarts within [`AGREEMENT_TOL`] of the best value.
    pub agreeing: usize,
    /// Whether at least two restarts agree with the best value.
    pub certified: bool,
}

/// Rows of `G e ≤ h` describing the metric couplings of `x1` and `x2`.
fn constraints(x1: &FiniteMMSpace, x2: &FiniteMMSpace) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (n1, n2) = (x1.len(), x2.len());
    let dim = n1 * n2;
    let var = |i: usize, j: usize| i * n2 + j;
    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut row = |entries: &[(usize, f64)], rhs: f64| {
        let mut r = vec![0.0; dim];
        for &(k, v) in entries {
            r[k] += v;
        }
        g.push(r);
        h.push(rhs);
    };
    for j in 0..n2 {
        for i in 0..n1 {
            for k in 0..n1 {
                if i != k {
                    row(&[(var(i, j), 1.0), (var(k, j), -1.0)], x1.dist(i, k));
                    if i < k {
                        row(&[(var(i, j), -1.0), (var(k, j), -1.0)], -x1.dist(i, k));
                    }
                }
            }
        }
    }
    for i in 0..n1 {
        for j in 0..n2 {
            for l in 0..n2 {
                if j != l {
                    row(&[(var(i, j), 1.0), (var(i, l), -1.0)], x2.dist(j, l));
                    if j < l {
                        row(&[(var(i, j), -1.0), (var(i, l), -1.0)], -x2.dist(j, l));
                    }
                }
            }
        }
    }
    for k in 0..dim {
        row(&[(k, -1.0)], 0.0);
    }
    (g, h)
}

/// Feasible random start: shortest-path closure of random cross edges,
/// shifted by a random constant.
fn random_start(x1: &FiniteMMSpace, x2: &FiniteMMSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n1, n2) = (x1.len(), x2.len());
    let n = n1 + n2;
    let span = x1.diameter().max(x2.diameter()).max(1e-3);
    let mut d = vec![f64::INFINITY; n * n];
    for a in 0..n1 {
        for b in 0..n1 {
            d[a * n + b] = x1.dist(a, b);
        }
    }
    for a in 0..n2 {
        for b in 0..n2 {
            d[(n1 + a) * n + n1 + b] = x2.dist(a, b);
        }
    }
    for i in 0..n1 {
        for j in 0..n2 {
            let c = rng.gen::<f64>() * 2.0 * span;
            d[i * n + n1 + j] = c;
            d[(n1 + j) * n + i] = c;
        }
    }
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = d[a * n + k] + d[k * n + b];
                if via < d[a * n + b] {
                    d[a * n + b] = via;
                }
            }
        }
    }
    let shift = rng.gen::<f64>() * 0.5 * span;
    (0..n1)
        .flat_map(|i| (0..n2).map(move |j| (i, j)))
        .map(|(i, j)| d[i * n + n1 + j] + shift)
        .collect()
}

fn descend(
    start: Vec<f64>,
    g: &[Vec<f64>],
    h: &[f64],
    mu: &[f64],
    nu: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut e = qp::project(&start, g, h)?;
    let sq = |e: &[f64]| e.iter().map(|x| x * x).collect::<Vec<_>>();
    for _ in 0..3000 {
        let sol = simplex::solve(&sq(&e), mu, nu)?;
        let qmax = sol.plan.iter().fold(0.0f64, |m, q| m.max(*q));
        let step: Vec<f64> = e
            .iter()
            .zip(&sol.plan)
            .map(|(x, q)| x - q * x / qmax)
            .collect();
        let next = qp::project(&step, g, h)?;
        let moved = next.iter().zip(&e).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        e = next;
        if moved < 1e-13 {
            break;
        }
    }
    let sol = simplex::solve(&sq(&e), mu, nu)?;
    Ok((sol.cost.max(0.0).sqrt(), e, sol.plan))
}

/// 𝔻-distance between two spaces with `N₁·N₂ ≤ 16`.
///
/// Runs [`RESTARTS`] seeded projected-descent restarts over the polytope of
/// metric couplings (inner problem: exact transport of `cross²`) and keeps
/// the best, ties broken by restart index.
pub fn d_distance_exact_tiny(x1: &FiniteMMSpace, x2: &FiniteMMSpace) -> Result<TinyDResult> {
    let size = x1.len() * x2.len();
    if size > TINY_BUDGET {
        return Err(Error::OverBudget { size, budget: TINY_BUDGET });
    }
    let (g, h) = constraints(x1, x2);
    let (mu, nu) = (x1.weights(), x2.weights());
    let runs: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5354_5552_4d00 + r as u64);
            let start = random_start(x1, x2, &mut rng);
            descend(start, &g, &h, mu, nu)
        })
        .collect();
    let runs: Vec<(f64, Vec<f64>, Vec<f64>)> = runs.into_iter().collect::<Result<_>>()?;
    let restart_values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].0.total_cmp(&runs[b].0).then(a.cmp(&b)))
        .expect("at least one restart");
    let value = runs[best].0;
    let agreeing = restart_values.iter().filter(|v| **v - value <= AGREEMENT_TOL).count();
    let (_, cross, plan) = runs.into_iter().nth(best).unwrap();
    Ok(TinyDResult {
        value,
        coupling: MetricCoupling { n1: x1.len(), n2: x2.len(), cross },
        plan,
        restart_values,
        agreeing,
        certified: agreeing >= 2,
    })
}

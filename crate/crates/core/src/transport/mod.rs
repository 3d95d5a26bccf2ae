//! Couplings, quadratic Wasserstein distance (exact and entropic), the
//! 𝔻-distance between spaces, and approximation diagnostics.

pub mod gh;
pub mod path;
mod qp;
pub mod simplex;
pub mod sinkhorn;
pub mod sturm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{check_probability, FiniteMMSpace};

pub use gh::{default_dictionary, gh_coverage, gh_distortion, hausdorff_distance, measure_pushforward_gap, nearest_point_map};
pub use path::{delta_from_gaps, path_delta_distance, DeltaEstimate};
pub use sturm::{d_distance_exact_tiny, MetricCoupling, TinyDResult};

/// Joint probability matrix with prescribed marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub n1: usize,
    pub n2: usize,
    /// Row-major `n1 × n2`.
    pub q: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl Coupling {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n2 + j]
    }

    /// Largest deviation of a row or column sum from its marginal.
    pub fn marginal_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n1 {
            let s: f64 = self.q[i * self.n2..(i + 1) * self.n2].iter().sum();
            worst = worst.max((s - self.mu[i]).abs());
        }
        for j in 0..self.n2 {
            let s: f64 = (0..self.n1).map(|i| self.get(i, j)).sum();
            worst = worst.max((s - self.nu[j]).abs());
        }
        worst
    }

    /// Entries above `threshold` as `(i, j, mass)`.
    pub fn support(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let q = self.get(i, j);
                if q > threshold {
                    out.push((i, j, q));
                }
            }
        }
        out
    }

    /// Sparse text form: header line, then one `i j mass` line per entry.
    pub fn to_text(&self) -> String {
        let support = self.support(0.0);
        let mut s = format!("mmlab-coupling 1\nshape {} {}\nentries {}\n", self.n1, self.n2, support.len());
        for (i, j, q) in support {
            s.push_str(&format!("{i} {j} {q:.17e}\n"));
        }
        s.push_str("end\n");
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct W2Result {
    pub value: f64,
    pub plan: Coupling,
    pub slackness_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinkhornResult {
    /// `√cost` of the rounded plan; never below the exact distance.
    pub value_upper: f64,
    /// Transport cost of the rounded plan, an upper bound on `W₂²`.
    pub cost_upper: f64,
    pub plan: Coupling,
    pub converged: bool,
    pub iterations: usize,
    pub marginal_residual: f64,
}

/// Squared-distance cost between the points of `x` and `y`: the intrinsic
/// metric when both are the same space, otherwise the shared ambient metric.
pub fn squared_cost(x: &FiniteMMSpace, y: &FiniteMMSpace) -> Result<Vec<f64>> {
    if std::ptr::eq(x, y) || (x.len() == y.len() && x.dist_matrix() == y.dist_matrix() && x.ambient() == y.ambient()) {
        return Ok(x.dist_matrix().iter().map(|d| d * d).collect());
    }
    let (a, b) = gh::shared(x, y)?;
    let mut c = Vec::with_capacity(x.len() * y.len());
    for i in 0..x.len() {
        for j in 0..y.len() {
            let d = a.cross_distance(i, b, j);
            c.push(d * d);
        }
    }
    Ok(c)
}

/// Exact `W₂` between `mu` on `x` and `nu` on `y`.
pub fn w2_distance(x: &FiniteMMSpace, y: &FiniteMMSpace, mu: &[f64], nu: &[f64]) -> Result<W2Result> {
    check_probability(mu, x.len(), "mu")?;
    check_probability(nu, y.len(), "nu")?;
    let cost = squared_cost(x, y)?;
    w2_from_cost(&cost, mu, nu)
}

/// Exact `W₂` for an explicit squared-distance matrix.
///
/// The problem is solved in a canonical orientation (marginals ordered by
/// their bit patterns) so that swapping `mu` and `nu` with the transposed
/// cost gives a bit-identical value.
pub fn w2_from_cost(cost: &[f64], mu: &[f64], nu: &[f64]) -> Result<W2Result> {
    let (n1, n2) = (mu.len(), nu.len());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let swap = (n2, bits(nu)) < (n1, bits(mu));
    let sol = if swap {
        let transposed: Vec<f64> = (0..n2 * n1).map(|k| cost[(k % n1) * n2 + k / n1]).collect();
        let mut sol = simplex::solve(&transposed, nu, mu)?;
        sol.plan = (0..n1 * n2).map(|k| sol.plan[(k % n2) * n1 + k / n2]).collect();
        sol
    } else {
        simplex::solve(cost, mu, nu)?
    };
    Ok(W2Result {
        value: sol.cost.max(0.0).sqrt(),
        plan: Coupling { n1, n2, q: sol.plan, mu: mu.to_vec(), nu: nu.to_vec() },
        slackness_residual: sol.slackness_residual,
    })
}

/// Entropic `W₂` upper bound with regularization `epsilon_reg` (in cost units).
pub fn w2_sinkhorn(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    mu: &[f64],
    nu: &[f64],
    epsilon_reg: f64,
) -> Result<SinkhornResult> {
    if !(epsilon_reg > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon_reg must be positive, got {epsilon_reg}")));
    }
    check_probability(mu, x.len(), "mu")?;
    check_probability(nu, y.len(), "nu")?;
    let cost = squared_cost(x, y)?;
    let run = sinkhorn::solve(&cost, mu, nu, epsilon_reg);
    Ok(SinkhornResult {
        value_upper: run.cost.max(0.0).sqrt(),
        cost_upper: run.cost,
        plan: Coupling { n1: mu.len(), n2: nu.len(), q: run.plan, mu: mu.to_vec(), nu: nu.to_vec() },
        converged: run.converged,
        iterations: run.iterations,
        marginal_residual: run.marginal_residual,
    })
}

/// `W₂` between the reference measures of two spaces embedded in one
/// ambient space, an upper bound for their 𝔻-distance.
pub fn d_distance_upper(x1: &FiniteMMSpace, x2: &FiniteMMSpace) -> Result<f64> {
    gh::shared(x1, x2)?;
    Ok(w2_distance(x1, x2, x1.weights(), x2.weights())?.value)
}

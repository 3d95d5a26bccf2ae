//! Entropic transport in the log domain with ε-scaling.

/// Result of a Sinkhorn run, with the plan rounded onto the coupling set.
#[derive(Debug, Clone)]
pub struct SinkhornRun {
    pub plan: Vec<f64>,
    /// Transport cost of the rounded plan (≥ the exact optimum).
    pub cost: f64,
    pub iterations: usize,
    /// L1 marginal residual of the unrounded iterate at exit.
    pub marginal_residual: f64,
    pub converged: bool,
}

pub const MAX_ITERATIONS: usize = 10_000;
pub const TARGET_RESIDUAL: f64 = 1e-9;

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn solve(cost: &[f64], a: &[f64], b: &[f64], eps: f64) -> SinkhornRun {
    let (n1, n2) = (a.len(), b.len());
    let rows: Vec<usize> = (0..n1).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n2).filter(|&j| b[j] > 0.0).collect();
    let c = |i: usize, j: usize| cost[rows[i] * n2 + cols[j]];
    let (m, n) = (rows.len(), cols.len());
    let la: Vec<f64> = rows.iter().map(|&i| a[i].ln()).collect();
    let lb: Vec<f64> = cols.iter().map(|&j| b[j].ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let cmax = cost.iter().fold(0.0f64, |x, y| x.max(*y));
    let mut eps_now = cmax.max(eps);
    let mut iterations = 0;
    let mut residual;

    let row_sums = |f: &[f64], g: &[f64], e: f64| -> Vec<f64> {
        (0..m)
            .map(|i| (0..n).map(|j| ((f[i] + g[j] - c(i, j)) / e).exp()).sum())
            .collect()
    };

    loop {
        let is_final = eps_now <= eps;
        let stage_cap = if is_final { MAX_ITERATIONS } else { 200 };
        let mut stage_iters = 0;
        loop {
            for i in 0..m {
                f[i] = eps_now * (la[i] - log_sum_exp((0..n).map(|j| (g[j] - c(i, j)) / eps_now)));
            }
            for j in 0..n {
                g[j] = eps_now * (lb[j] - log_sum_exp((0..m).map(|i| (f[i] - c(i, j)) / eps_now)));
            }
            iterations += 1;
            stage_iters += 1;
            // Columns are exact after the g-update; measure the rows.
            if stage_iters % 10 == 0 || iterations >= MAX_ITERATIONS {
                let rs = row_sums(&f, &g, eps_now);
                residual = rs.iter().zip(&rows).map(|(r, &i)| (r - a[i]).abs()).sum();
                let target = if is_final { TARGET_RESIDUAL } else { 1e-6 };
                if residual <= target || stage_iters >= stage_cap || iterations >= MAX_ITERATIONS {
                    break;
                }
            }
        }
        if is_final || iterations >= MAX_ITERATIONS {
            break;
        }
        eps_now = (0.5 * eps_now).max(eps);
    }
    let converged = residual <= TARGET_RESIDUAL && eps_now <= eps;

    let mut p = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            p[i * n + j] = ((f[i] + g[j] - c(i, j)) / eps_now).exp();
        }
    }
    round_to_couplings(&mut p, m, n, &rows.iter().map(|&i| a[i]).collect::<Vec<_>>(), &cols.iter().map(|&j| b[j]).collect::<Vec<_>>());
    let mut plan = vec![0.0; n1 * n2];
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let q = p[i * n + j];
            plan[rows[i] * n2 + cols[j]] = q;
            total += q * c(i, j);
        }
    }
    SinkhornRun { plan, cost: total, iterations, marginal_residual: residual, converged }
}

/// Projects a nonnegative matrix onto the couplings of `a` and `b` by
/// scaling down over-full rows and columns and redistributing the deficit
/// as a rank-one correction.
fn round_to_couplings(p: &mut [f64], m: usize, n: usize, a: &[f64], b: &[f64]) {
    for i in 0..m {
        let r: f64 = p[i * n..(i + 1) * n].iter().sum();
        if r > a[i] {
            let s = a[i] / r;
            p[i * n..(i + 1) * n].iter_mut().for_each(|x| *x *= s);
        }
    }
    for j in 0..n {
        let col: f64 = (0..m).map(|i| p[i * n + j]).sum();
        if col > b[j] {
            let s = b[j] / col;
            (0..m).for_each(|i| p[i * n + j] *= s);
        }
    }
    let da: Vec<f64> = (0..m).map(|i| (a[i] - p[i * n..(i + 1) * n].iter().sum::<f64>()).max(0.0)).collect();
    let db: Vec<f64> = (0..n).map(|j| (b[j] - (0..m).map(|i| p[i * n + j]).sum::<f64>()).max(0.0)).collect();
    let total: f64 = da.iter().sum();
    if total > 0.0 {
        for i in 0..m {
            for j in 0..n {
                p[i * n + j] += da[i] * db[j] / total;
            }
        }
    }
}

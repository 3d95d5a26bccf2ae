//! Exact discrete optimal transport by the transportation simplex method.
//!
//! The basis is a spanning tree on the bipartite graph of rows and columns.
//! Each pivot recomputes the dual potentials by a tree traversal, prices
//! cells in blocks, and pushes flow around the cycle closed by the entering
//! cell.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OtSolution {
    /// Row-major `n1 × n2` optimal plan.
    pub plan: Vec<f64>,
    pub cost: f64,
    /// Row potentials `u` and column potentials `v` with `u_i + v_j ≤ c_ij`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `max(|primal − dual|, max(0, −min reduced cost))`.
    pub slackness_residual: f64,
    pub pivots: usize,
}

/// Minimizes `Σ c_ij q_ij` over couplings of `a` and `b`.
///
/// Both marginals must be nonnegative with equal totals (up to rounding;
/// the last column absorbs a mismatch below 1e-9).
pub fn solve(cost: &[f64], a: &[f64], b: &[f64]) -> Result<OtSolution> {
    let (n1, n2) = (a.len(), b.len());
    if cost.len() != n1 * n2 {
        return Err(Error::InvalidInput("cost matrix shape does not match the marginals".into()));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidInput("empty marginal".into()));
    }
    let ta: f64 = a.iter().sum();
    let tb: f64 = b.iter().sum();
    if (ta - tb).abs() > 1e-9 * ta.max(1.0) {
        return Err(Error::InvalidInput(format!("marginal totals differ: {ta} vs {tb}")));
    }
    let rows: Vec<usize> = (0..n1).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n2).filter(|&j| b[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidInput("marginals carry no mass".into()));
    }
    let m = rows.len();
    let n = cols.len();
    let ra: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
    let mut rb: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
    // Make totals agree exactly so the initial basis is feasible.
    let shift = ra.iter().sum::<f64>() - rb.iter().sum::<f64>();
    rb[n - 1] = (rb[n - 1] + shift).max(0.0);
    let c = |i: usize, j: usize| cost[rows[i] * n2 + cols[j]];
    let cmax = cost.iter().fold(0.0f64, |x, y| x.max(y.abs()));
    let tol = 1e-13 * cmax.max(1e-300);

    let mut tree = Tree::northwest(&ra, &rb);
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let total = m * n;
    let block = ((total as f64).sqrt().ceil() as usize).clamp(16, total.max(16));
    let mut cursor = 0usize;
    let max_pivots = 50 * (m + n) * ((m + n) as f64).ln().max(1.0).ceil() as usize + 10_000;
    let mut pivots = 0;

    loop {
        tree.potentials(&c, &mut u, &mut v);
        // Block pricing: scan from the cursor, take the best candidate
        // within the first block that contains one.
        let mut best: Option<(usize, usize, f64)> = None;
        let mut scanned = 0;
        while scanned < total {
            let end = (scanned + block).min(total);
            for s in scanned..end {
                let cell = (cursor + s) % total;
                let (i, j) = (cell / n, cell % n);
                let r = c(i, j) - u[i] - v[j];
                if r < -tol && best.map_or(true, |b| r < b.2) {
                    best = Some((i, j, r));
                }
            }
            scanned = end;
            if best.is_some() {
                break;
            }
        }
        let Some((p, q, _)) = best else { break };
        cursor = (cursor + scanned) % total;
        tree.pivot(p, q);
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("transport simplex exceeded {max_pivots} pivots")));
        }
    }

    let mut plan = vec![0.0; n1 * n2];
    let mut primal = 0.0;
    for &(i, j, f) in &tree.cells {
        plan[rows[i] * n2 + cols[j]] = f;
        primal += f * c(i, j);
    }
    // Extend duals to rows/columns without mass.
    let mut uf = vec![f64::NAN; n1];
    let mut vf = vec![f64::NAN; n2];
    for (k, &i) in rows.iter().enumerate() {
        uf[i] = u[k];
    }
    for (k, &j) in cols.iter().enumerate() {
        vf[j] = v[k];
    }
    for i in 0..n1 {
        if uf[i].is_nan() {
            uf[i] = cols.iter().map(|&j| cost[i * n2 + j] - vf[j]).fold(f64::INFINITY, f64::min);
        }
    }
    for j in 0..n2 {
        if vf[j].is_nan() {
            vf[j] = (0..n1).map(|i| cost[i * n2 + j] - uf[i]).fold(f64::INFINITY, f64::min);
        }
    }
    let dual: f64 = a.iter().zip(&uf).map(|(x, y)| x * y).sum::<f64>() + b.iter().zip(&vf).map(|(x, y)| x * y).sum::<f64>();
    let mut min_red = 0.0f64;
    for i in 0..n1 {
        for j in 0..n2 {
            min_red = min_red.min(cost[i * n2 + j] - uf[i] - vf[j]);
        }
    }
    let slackness_residual = (primal - dual).abs().max(-min_red);
    Ok(OtSolution { plan, cost: primal, u: uf, v: vf, slackness_residual, pivots })
}

struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(usize, usize)>,
}

impl Adjacency {
    fn of(&self, x: usize) -> &[(usize, usize)] {
        &self.entries[self.offsets[x]..self.offsets[x + 1]]
    }
}

/// Basis tree over `m` row nodes (`0..m`) and `n` column nodes (`m..m+n`).
struct Tree {
    m: usize,
    n: usize,
    /// Basic cells `(row, col, flow)`.
    cells: Vec<(usize, usize, f64)>,
}

impl Tree {
    fn northwest(a: &[f64], b: &[f64]) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut cells = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let (mut ra, mut rb) = (a[0], b[0]);
        loop {
            let f = ra.min(rb);
            cells.push((i, j, f));
            ra -= f;
            rb -= f;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if (ra <= rb && i < m - 1) || j == n - 1 {
                i += 1;
                ra = a[i];
            } else {
                j += 1;
                rb = b[j];
            }
        }
        // Anything left over is rounding; clamp negatives.
        for c in &mut cells {
            c.2 = c.2.max(0.0);
        }
        Self { m, n, cells }
    }

    /// Compressed adjacency: neighbours of node `x` are
    /// `entries[offsets[x]..offsets[x + 1]]` as `(node, cell index)`.
    fn adjacency(&self) -> Adjacency {
        let nodes = self.m + self.n;
        let mut offsets = vec![0usize; nodes + 1];
        for &(i, j, _) in &self.cells {
            offsets[i + 1] += 1;
            offsets[self.m + j + 1] += 1;
        }
        for x in 0..nodes {
            offsets[x + 1] += offsets[x];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![(0usize, 0usize); 2 * self.cells.len()];
        for (k, &(i, j, _)) in self.cells.iter().enumerate() {
            entries[fill[i]] = (self.m + j, k);
            fill[i] += 1;
            entries[fill[self.m + j]] = (i, k);
            fill[self.m + j] += 1;
        }
        Adjacency { offsets, entries }
    }

    fn potentials(&self, c: &impl Fn(usize, usize) -> f64, u: &mut [f64], v: &mut [f64]) {
        let adj = self.adjacency();
        let mut seen = vec![false; self.m + self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &(next, _) in adj.of(node) {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                if node < self.m {
                    let j = next - self.m;
                    v[j] = c(node, j) - u[node];
                } else {
                    let j = node - self.m;
                    u[next] = c(next, j) - v[j];
                }
                stack.push(next);
            }
        }
    }

    /// Enters cell `(p, q)` and removes the blocking cell of the cycle.
    fn pivot(&mut self, p: usize, q: usize) {
        let adj = self.adjacency();
        let target = self.m + q;
        // Path from row p to column q through the tree.
        let mut parent = vec![usize::MAX; self.m + self.n];
        let mut via = vec![usize::MAX; self.m + self.n];
        let mut stack = vec![p];
        parent[p] = p;
        while let Some(node) = stack.pop() {
            if node == target {
                break;
            }
            for &(next, k) in adj.of(node) {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    via[next] = k;
                    stack.push(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != p {
            path.push(via[node]);
            node = parent[node];
        }
        path.reverse();
        // Path edges alternate −, +, −, … starting from row p.
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 && self.cells[k].2 < theta {
                theta = self.cells[k].2;
                leave = k;
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.cells[k].2 -= theta;
            } else {
                self.cells[k].2 += theta;
            }
        }
        self.cells[leave] = (p, q, theta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn three_point_example() {
        // unit distances, mu=(1,0,0), nu=(0,.5,.5)
        let d = [0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let s = solve(&d, &[1.0, 0.0, 0.0], &[0.0, 0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(s.cost, 1.0, epsilon = 1e-15);
        assert!(s.slackness_residual <= 1e-12);
    }

    #[test]
    fn monotone_on_a_line() {
        let x = [0.0, 1.0, 2.0, 5.0];
        let y = [0.5, 1.5, 4.0];
        let cost: Vec<f64> = x.iter().flat_map(|a| y.iter().map(move |b| (a - b) * (a - b))).collect();
        let s = solve(&cost, &[0.25; 4], &[0.3, 0.3, 0.4]).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                for k in i + 1..4 {
                    for l in 0..j {
                        assert!(s.plan[i * 3 + j] * s.plan[k * 3 + l] <= 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_mismatched_mass() {
        assert!(solve(&[0.0; 4], &[0.5, 0.5], &[0.5, 0.6]).is_err());
    }
}

//! Euclidean projection onto a polytope `{x : G x ≤ h}` by the dual
//! active-set method of Goldfarb and Idnani, specialised to the identity
//! Hessian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Closest point to `z` satisfying every row constraint `g_k · x ≤ h_k`.
pub fn project(z: &[f64], g: &[Vec<f64>], h: &[f64]) -> Result<Vec<f64>> {
    let dim = z.len();
    let scale = z.iter().chain(h).fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let mut x = DVector::from_column_slice(z);
    // In `n · x ≥ b` form: n = −g, b = −h.
    let normals: Vec<DVector<f64>> = g.iter().map(|row| -DVector::from_column_slice(row)).collect();
    let slack = |x: &DVector<f64>, k: usize| normals[k].dot(x) + h[k];
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let cap = 20 * (g.len() + dim) * (g.len() + dim) + 100;
    let mut steps = 0;

    loop {
        let (mut p, mut worst) = (usize::MAX, -tol);
        for k in 0..g.len() {
            let s = slack(&x, k);
            if s < worst && !active.contains(&k) {
                worst = s;
                p = k;
            }
        }
        if p == usize::MAX {
            return Ok(x.iter().copied().collect());
        }
        let np = &normals[p];
        let mut u_plus = 0.0;
        loop {
            steps += 1;
            if steps > cap {
                return Err(Error::Solver("projection did not terminate".into()));
            }
            let (r, dir) = split(&normals, &active, np, dim);
            let curvature = dir.dot(np);
            let t2 = if dir.norm() > 1e-12 * np.norm() && curvature > 0.0 {
                -slack(&x, p) / curvature
            } else {
                f64::INFINITY
            };
            let mut t1 = f64::INFINITY;
            let mut drop = usize::MAX;
            for (pos, &rk) in r.iter().enumerate() {
                if rk > 1e-14 {
                    let t = mult[pos] / rk;
                    if t < t1 {
                        t1 = t;
                        drop = pos;
                    }
                }
            }
            if t1.is_infinite() && t2.is_infinite() {
                return Err(Error::Solver("metric-coupling constraints are infeasible".into()));
            }
            if t2 <= t1 {
                x += &dir * t2;
                for (m, rk) in mult.iter_mut().zip(r.iter()) {
                    *m -= t2 * rk;
                }
                active.push(p);
                mult.push(u_plus + t2);
                break;
            }
            if t2.is_finite() {
                x += &dir * t1;
            }
            for (m, rk) in mult.iter_mut().zip(r.iter()) {
                *m -= t1 * rk;
            }
            u_plus += t1;
            active.remove(drop);
            mult.remove(drop);
            if slack(&x, p) >= -tol {
                // The partial step already satisfied the constraint.
                if u_plus > 0.0 {
                    active.push(p);
                    mult.push(u_plus);
                }
                break;
            }
        }
    }
}

/// Least-squares split `n = N r + dir` with `dir ⟂ span N`.
fn split(normals: &[DVector<f64>], active: &[usize], n: &DVector<f64>, dim: usize) -> (Vec<f64>, DVector<f64>) {
    if active.is_empty() {
        return (Vec::new(), n.clone());
    }
    let mat = DMatrix::from_fn(dim, active.len(), |i, k| normals[active[k]][i]);
    let svd = mat.clone().svd(true, true);
    let r = svd.solve(n, 1e-12).unwrap_or_else(|_| DVector::zeros(active.len()));
    let dir = n - &mat * &r;
    (r.iter().copied().collect(), dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn box_projection() {
        // 0 ≤ x ≤ 1 in two dimensions
        let g = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let h = vec![1.0, 1.0, 0.0, 0.0];
        let x = project(&[2.0, -0.5], &g, &h).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-14);
        let inside = project(&[0.3, 0.4], &g, &h).unwrap();
        assert_eq!(inside, vec![0.3, 0.4]);
    }

    #[test]
    fn halfspace_with_redundant_rows() {
        // x + y ≥ 2 written twice, plus x ≥ 0
        let g = vec![vec![-1.0, -1.0], vec![-2.0, -2.0], vec![-1.0, 0.0]];
        let h = vec![-2.0, -4.0, 0.0];
        let x = project(&[0.0, 0.0], &g, &h).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-12);
    }
}

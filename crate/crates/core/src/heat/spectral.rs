use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::graph::DirichletGraph;
use crate::error::{Error, Result};
use crate::space::FiniteMMSpace;

/// Largest space accepted by the dense eigensolver unless overridden.
pub const DEFAULT_EIG_BUDGET: usize = 4096;

/// Full spectral resolution of the graph generator `L = M⁻¹(D − W)`.
///
/// Eigenvectors are orthonormal for `⟨u, v⟩_m = Σ u_x v_x m_x`; column `k`
/// of `eigvecs` is `φ_k`, with `φ₀ ≡ 1` and `λ₀ = 0`.
#[derive(Debug, Clone)]
pub struct SpectralHeatModel {
    pub(crate) space: Arc<FiniteMMSpace>,
    pub(crate) eigvals: Vec<f64>,
    pub(crate) eigvecs: DMatrix<f64>,
    pub(crate) bandwidth: f64,
    pub(crate) space_hash: String,
    pub(crate) reconstruction_residual: f64,
}

impl SpectralHeatModel {
    pub fn space(&self) -> &Arc<FiniteMMSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.eigvals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigvals.is_empty()
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn weights(&self) -> &[f64] {
        self.space.weights()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Earliest time at which kernel positivity is expected: `ε²`.
    pub fn t_pos(&self) -> f64 {
        self.bandwidth * self.bandwidth
    }

    pub fn space_hash(&self) -> &str {
        &self.space_hash
    }

    /// `max |S Ψ − Ψ Λ| / max |λ|` of the symmetric eigenproblem.
    pub fn reconstruction_residual(&self) -> f64 {
        self.reconstruction_residual
    }

    /// First nonzero eigenvalue.
    pub fn spectral_gap(&self) -> f64 {
        self.eigvals.get(1).copied().unwrap_or(0.0)
    }

    /// Coefficients `⟨f, φ_k⟩_m`.
    pub fn coefficients(&self, f: &[f64]) -> DVector<f64> {
        let mf = DVector::from_iterator(f.len(), f.iter().zip(self.weights()).map(|(a, m)| a * m));
        self.eigvecs.tr_mul(&mf)
    }

    /// `T_t f = Σ_k e^{−λ_k t} ⟨f, φ_k⟩_m φ_k`; the identity at `t = 0`.
    pub fn apply(&self, t: f64, f: &[f64]) -> Vec<f64> {
        if t == 0.0 {
            return f.to_vec();
        }
        let mut c = self.coefficients(f);
        for (ck, lam) in c.iter_mut().zip(&self.eigvals) {
            *ck *= (-lam * t).exp();
        }
        (&self.eigvecs * c).iter().copied().collect()
    }

    /// Heat kernel density `p(t, x, y)` with respect to `m`.
    pub fn kernel(&self, t: f64, x: usize, y: usize) -> f64 {
        let mut s = 0.0;
        for (k, lam) in self.eigvals.iter().enumerate() {
            s += (-lam * t).exp() * self.eigvecs[(x, k)] * self.eigvecs[(y, k)];
        }
        s
    }

    /// `y ↦ p(t, x, y)`.
    pub fn kernel_row(&self, t: f64, x: usize) -> Vec<f64> {
        let scaled = DVector::from_iterator(
            self.len(),
            self.eigvals.iter().enumerate().map(|(k, lam)| (-lam * t).exp() * self.eigvecs[(x, k)]),
        );
        (&self.eigvecs * scaled).iter().copied().collect()
    }

    /// Dense kernel matrix `p(t, ·, ·)`.
    pub fn kernel_matrix(&self, t: f64) -> DMatrix<f64> {
        let n = self.len();
        let mut scaled = self.eigvecs.clone();
        for k in 0..n {
            let e = (-self.eigvals[k] * t).exp();
            scaled.column_mut(k).scale_mut(e);
        }
        let mut p = &scaled * self.eigvecs.transpose();
        // Symmetrize against rounding in the product.
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (p[(i, j)] + p[(j, i)]);
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
        }
        p
    }

    /// Transition probabilities `P_t(x, y) = p(t, x, y)·m_y`.
    pub fn transition_matrix(&self, t: f64) -> DMatrix<f64> {
        let mut p = self.kernel_matrix(t);
        for (j, m) in self.weights().iter().enumerate() {
            p.column_mut(j).scale_mut(*m);
        }
        p
    }

    /// `‖u‖_{L²(m)}`.
    pub fn norm(&self, u: &[f64]) -> f64 {
        u.iter().zip(self.weights()).map(|(a, m)| a * a * m).sum::<f64>().sqrt()
    }

    /// `m(u) = Σ u_x m_x`.
    pub fn mean(&self, u: &[f64]) -> f64 {
        u.iter().zip(self.weights()).map(|(a, m)| a * m).sum()
    }
}

/// Dense eigendecomposition of the generator of `graph`.
pub fn spectral_decompose(graph: &DirichletGraph) -> Result<SpectralHeatModel> {
    spectral_decompose_with_budget(graph, DEFAULT_EIG_BUDGET)
}

pub fn spectral_decompose_with_budget(graph: &DirichletGraph, budget: usize) -> Result<SpectralHeatModel> {
    let n = graph.len();
    if n > budget {
        return Err(Error::OverBudget { size: n, budget });
    }
    let space = graph.space().clone();
    let m = space.weights();
    let inv_sqrt: Vec<f64> = m.iter().map(|w| 1.0 / w.sqrt()).collect();
    let lap = graph.laplacian_dense();
    let s = DMatrix::from_fn(n, n, |i, j| lap[i * n + j] * inv_sqrt[i] * inv_sqrt[j]);
    let s = 0.5 * (&s + s.transpose());
    let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("symmetric eigensolver did not converge (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut psi = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);

    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let residual = (&s * &psi - &psi * DMatrix::from_diagonal(&DVector::from_column_slice(&vals)))
        .amax()
        / scale;
    if residual > 1e-8 {
        return Err(Error::Eigen(format!(
            "reconstruction residual {residual:.3e} exceeds 1e-8 (eigenvalue range {:.3e}..{:.3e})",
            vals[0],
            vals[n - 1]
        )));
    }
    if vals[0].abs() > 1e-10 * scale.max(1.0) || (n > 1 && vals[1] <= 1e-12 * scale) {
        return Err(Error::Eigen(format!(
            "ground state is not simple: λ₀ = {:.3e}, λ₁ = {:.3e}",
            vals[0],
            vals.get(1).copied().unwrap_or(f64::NAN)
        )));
    }
    // Exact ground state: λ₀ = 0 with ψ₀ = √m (so φ₀ ≡ 1).
    vals[0] = 0.0;
    for i in 0..n {
        psi[(i, 0)] = m[i].sqrt();
    }
    let phi = DMatrix::from_fn(n, n, |i, k| psi[(i, k)] * inv_sqrt[i]);
    Ok(SpectralHeatModel {
        space_hash: space.content_hash(),
        space,
        eigvals: vals,
        eigvecs: phi,
        bandwidth: graph.bandwidth(),
        reconstruction_residual: residual,
    })
}

//! Graph Dirichlet forms, their spectral heat semigroups and kernels, and
//! diagnostics fitted on top of them.

pub mod cache;
pub mod diagnostics;
pub mod graph;
pub mod spectral;

pub use cache::{load_spectra, save_spectra};
pub use diagnostics::{
    eigen_convergence_trace, feller_defect, gaussian_bound_fit, holder_regularity_estimate, holder_regularity_of,
    kernel_mixing_rate, mixing_check, poincare_constant, rayleigh_quotient, spectral_gap, EigenTrace, FellerReport,
    GaussianBoundReport, HolderEstimate, KernelMixingReport, LocalPoincare, MixingReport, MixingRow, PoincareReport,
};
pub use graph::{build_dirichlet_graph, cheeger_energy, Bandwidth, DirichletGraph};
pub use spectral::{spectral_decompose, spectral_decompose_with_budget, SpectralHeatModel, DEFAULT_EIG_BUDGET};

/// `T_t f`.
pub fn heat_semigroup_apply(model: &SpectralHeatModel, t: f64, f: &[f64]) -> crate::Result<Vec<f64>> {
    if !(t >= 0.0) || f.len() != model.len() {
        return crate::error::invalid("heat semigroup needs t ≥ 0 and one value per point");
    }
    Ok(model.apply(t, f))
}

/// `p(t, x, y)`.
pub fn heat_kernel_eval(model: &SpectralHeatModel, t: f64, x: usize, y: usize) -> crate::Result<f64> {
    if !(t > 0.0) || x >= model.len() || y >= model.len() {
        return crate::error::invalid("heat kernel needs t > 0 and points in range");
    }
    Ok(model.kernel(t, x, y))
}

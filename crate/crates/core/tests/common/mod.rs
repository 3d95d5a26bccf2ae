#![allow(dead_code)]

use std::sync::Arc;

use mmlab::heat::{build_dirichlet_graph, spectral_decompose, Bandwidth, DirichletGraph, SpectralHeatModel};
use mmlab::space::{build_model_space, cone_space, ModelFamily};
use mmlab::FiniteMMSpace;

/// The spaces every semigroup identity is checked on.
pub fn shipped_spaces() -> Vec<(&'static str, Arc<FiniteMMSpace>)> {
    let circle = build_model_space(ModelFamily::Circle, 256, 1.0).unwrap();
    let torus = build_model_space(ModelFamily::Torus2, 32 * 32, 1.0).unwrap();
    let interval = build_model_space(ModelFamily::Interval, 128, 1.0).unwrap();
    let base = build_model_space(ModelFamily::Circle, 32, 1.0).unwrap();
    let cone = cone_space(&base, 0.0, 1.0, 8).unwrap();
    vec![
        ("circle", Arc::new(circle)),
        ("torus2", Arc::new(torus)),
        ("interval", Arc::new(interval)),
        ("cone", Arc::new(cone)),
    ]
}

pub fn heat_model(space: &Arc<FiniteMMSpace>) -> (DirichletGraph, SpectralHeatModel) {
    let g = build_dirichlet_graph(space, Bandwidth::Auto).unwrap();
    let m = spectral_decompose(&g).unwrap();
    (g, m)
}

pub fn circle_model(n: usize) -> (DirichletGraph, SpectralHeatModel) {
    heat_model(&Arc::new(build_model_space(ModelFamily::Circle, n, 1.0).unwrap()))
}

/// Seeded uniform vector in `[-1, 1]`.
pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

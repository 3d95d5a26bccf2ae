//! Numerical laboratory for finite metric measure spaces.
//!
//! The crate discretizes compact model spaces (circles, tori, intervals,
//! spheres, cones and weighted variants) into finite metric measure spaces
//! and provides, on top of them:
//!
//! - [`transport`]: exact and entropic Wasserstein distances, Sturm's
//!   D-distance (exact on tiny spaces, ambient upper bounds in general),
//!   Gromov–Hausdorff approximation diagnostics and Hausdorff distances.
//! - [`heat`]: a graph Dirichlet form standing in for the Cheeger energy,
//!   its full spectral resolution, heat semigroup and heat kernel, and the
//!   spectral-gap / Gaussian-bound / mixing diagnostics built on them.
//! - [`brownian`]: the Markov process of the heat semigroup, with exact
//!   finite-dimensional distributions, seeded path sampling and path-law
//!   distances.
//! - [`holder`]: sup-formula Hölder extension.
//! - [`lab`]: experiment orchestration comparing convergence of spaces with
//!   convergence of their Brownian motions.

pub mod brownian;
pub mod error;
pub mod heat;
pub mod holder;
pub mod lab;
pub mod numerics;
pub mod space;
pub mod transport;

pub use error::{Error, Result};
pub use space::{AmbientEmbedding, AmbientSpace, FiniteMMSpace, ModelFamily, SpaceMeta};

//! Numerical laboratory for Steklov eigenvalues of the p-Laplacian on planar
//! polygonal domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: exact polygon computations (measures, isoperimetric ratio,
//!   boundary distortion, circle clipping) and the domain families used in
//!   the experiments (spiked squares, dumbbells, regular polygons).
//! * [`mesh`]: ear clipping, longest-edge bisection and smoothing into
//!   conforming P1 meshes.
//! * [`fem`]: p-Dirichlet energy, boundary p-norm, Rayleigh quotient and its
//!   exact gradient.
//! * [`spectrum`]: the exact discrete spectrum at p = 2, constrained descent
//!   for the second eigenvalue at general p, and disjoint-support families.
//! * [`bounds`]: boundary-measure packings, plateau test functions,
//!   mesh-free certified upper bounds and closed-form right-hand sides.
//! * [`cli`]: the experiment runner behind the `steklov` binary.
//!
//! All computation is two-dimensional.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod numeric;
pub mod spectrum;

pub use error::{Error, Result};

pub use fem::{NodalField, P1Space, QuadratureRule};
pub use geometry::{Point, Polygon};
pub use mesh::TriangleMesh;
pub use spectrum::{EstimateKind, SpectralEstimate};

/// Spatial dimension of every computation in this crate.
pub const DIM: usize = 2;

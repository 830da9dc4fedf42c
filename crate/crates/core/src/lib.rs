//! Diffusion maps on the flat torus.
//!
//! The crate estimates eigenvalues and eigenfunctions of weighted
//! Laplace–Beltrami (Langevin) generators from point samples on
//! `(R / L Z)^d`. It covers the whole pipeline:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`torus`] | periodic arithmetic, Gaussian and periodized Gaussian kernels |
//! | [`density`] | test densities and reproducible samplers |
//! | [`kernel`] | the dense kernel matrix `K_ij = g(x_i - x_j) / M` and out-of-sample rows |
//! | [`normalization`] | standard alpha-weights, plain Sinkhorn and ASSA, the Markov operator `P` |
//! | [`spectral`] | eigensolves of `P`, eigenvalue conventions, Nyström extension, eigenspace merging |
//! | [`reference`] | Fourier/collocation ground truth for the limiting generators and continuum operators |
//! | [`metrics`] | eigenvalue errors, subspace distances and log–log rate fits |
//! | [`linalg`] | dense symmetric eigensolver, block Lanczos, Cholesky |
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature assembles and applies kernel matrices with
//! rayon; results are bitwise identical to the sequential path.
//!
//! ```
//! use dmaps_core::density::DensityModel;
//! use dmaps_core::kernel::{KernelMatrix, KernelMode};
//! use dmaps_core::normalization::{assa, assemble_p, AssaOptions};
//! use dmaps_core::spectral::{eigensolve, EigenOptions};
//! use dmaps_core::torus::TorusDomain;
//!
//! let domain = TorusDomain::new(1, 1.0).unwrap();
//! let model = DensityModel::uniform(domain);
//! let sample = model.sample(200, 7).unwrap();
//! let eps = 0.01;
//! let k = KernelMatrix::build(&sample, eps, KernelMode::periodic(domain, eps)).unwrap();
//! let (weights, report) = assa(&k, eps, &AssaOptions::for_size(k.len(), eps)).unwrap();
//! assert!(report.converged);
//! let op = assemble_p(k, weights).unwrap();
//! let spec = eigensolve(&op, 3, &EigenOptions::default()).unwrap();
//! assert!((spec.semigroup_eigs[0] - 1.0).abs() < 1e-10);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the textbook algorithms
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod density;
mod error;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod normalization;
pub mod reference;
pub mod spectral;
pub mod torus;

pub use error::{Error, Result};

//! Steerable graph Laplacian.
//!
//! A graph Laplacian built over a dataset of steerable expansion coefficients
//! *and all planar rotations of every point*. Rotating a point multiplies its
//! `(m, ℓ)` coefficient by `e^{imφ}`, so the rotational affinity between two
//! points is a periodic function of the relative angle and is captured
//! completely by its Fourier coefficients: one Hermitian `N × N` block per
//! angular frequency `m`.
//!
//! The crate is organised along the pipeline:
//!
//! | module | purpose |
//! |--------|---------|
//! | [`dataset`] | coefficient layout, rotation action, generators, noise, polar grids |
//! | [`kernel`] | FFT rotational distances, Fourier affinity blocks, degrees, density normalisation |
//! | [`harmonics`] | per-frequency eigen-decomposition (steerable manifold harmonics), truncation |
//! | [`apply`] | applying the operator on the rotation grid, Laplace–Beltrami estimates, experiments |
//! | [`filter`] | rotation-equivariant low-pass filtering by per-frequency least squares |
//! | [`xval`] | held-out log-likelihood selection of `ε` and `λ_c` |
//! | [`io`] | `SGL1` / `SGA1` / `SGB1` binary formats and CSV exports |
//!
//! ```
//! use sgl_core::{dataset, harmonics, kernel::{self, KernelConfig}};
//!
//! let ds = dataset::gen_sphere(64, 7);
//! let cfg = KernelConfig::new(0.5).with_angles(32).with_max_freq(3);
//! let fa = kernel::fourier_blocks(&ds, &cfg).unwrap();
//! let basis = harmonics::decompose(&fa, true).unwrap();
//! let spectrum = harmonics::eigenvalue_spectrum(&basis);
//! assert!(spectrum[0].lambda.abs() < 1e-9);
//! ```

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apply;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod harmonics;
pub mod io;
pub mod kernel;
pub mod xval;

mod rng;

pub use num_complex::Complex64 as C64;

pub use apply::{Base, ConvergenceReport, GammaFunction};
pub use dataset::{AngularLayout, NoiseSpec, SteerableDataset};
pub use error::{Error, ErrorKind, Result};
pub use filter::FilterResult;
pub use harmonics::{HarmonicBasis, TruncationPlan};
pub use kernel::{AffinityGrid, FourierAffinity, KernelConfig};

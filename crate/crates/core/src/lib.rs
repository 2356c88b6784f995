//! Recovery of finite mixtures of local Dirac measures from their moments.
//!
//! A local Dirac of order `l` at `ξ` is the signed measure
//! `Σ_k λ_k δ_ξ^(k)`; its `i`-th moment is `Σ_k λ_k · i!/(i−k)! · ξ^(i−k)`.
//! This crate provides
//!
//! * [`moments`]: moment sequences, closed-form moment generators, cumulants
//!   and moment-generating-function (de)convolution,
//! * [`hankel`]: truncated Hankel moment matrices, numeric rank and kernels,
//! * [`recovery`]: Prony's method with multiplicities and the minimal-moment
//!   polynomial-system route,
//! * [`elimination`]: closed-form recovery of two first-order components
//!   from five cumulants,
//! * [`ideals`]: numerical evaluation of moment-ideal generators,
//! * [`fourier`]: piecewise-linear signals and their Fourier coefficients,
//! * [`statmix`]: local Gaussian mixture models,
//! * [`io`]: the CSV/JSON file formats shared with the CLI.
//!
//! ```
//! use localdirac_core::moments::{local_dirac_moments, LocalDirac, LocalDiracMixture};
//! use localdirac_core::recovery::{recover, RecoveryConfig};
//!
//! let mix = LocalDiracMixture::new(vec![
//!     LocalDirac::new(-0.5, vec![0.4, 0.3]),
//!     LocalDirac::new(0.75, vec![0.6, -0.2]),
//! ])
//! .unwrap();
//! let m = local_dirac_moments(&mix, 6);
//! let rec = recover(&m, 2, 1, &RecoveryConfig::default()).unwrap();
//! let xi: Vec<f64> = rec.mixture.components().iter().map(|c| c.xi.re).collect();
//! assert!((xi[0] + 0.5).abs() < 1e-8 && (xi[1] - 0.75).abs() < 1e-8);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod elimination;
pub mod error;
pub mod fourier;
pub mod hankel;
pub mod ideals;
pub mod io;
pub mod moments;
pub mod poly;
pub mod recovery;
pub mod scalar;
pub mod statmix;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scalar::Scalar;

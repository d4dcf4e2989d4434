//! Asymmetric dependence measures and exact inference for correlation
//! coefficients.
//!
//! The numerical modules are generic over the floating-point type (see
//! [`Scalar`]); the aliases at the crate root fix the scalar to `f64`, which
//! is what the CLI and most callers want.
//!
//! - [`specfun`]: log-gamma and the Gauss hypergeometric series.
//! - [`taraldsen`]: exact sampling density of a correlation coefficient,
//!   rectangle-rule CDF, quantiles, p-values and critical-value tables.
//! - [`kernelreg`]: Nadaraya–Watson regression with cross-validated bandwidth.
//! - [`gencorr`]: generalized correlations r*, the asymmetric R* matrix and
//!   the signed max-dependence measure.
//! - [`bootstrap`]: maximum-entropy bootstrap and order-statistic intervals.
//! - [`cli`]: CSV ingestion and the command-line front end.

// `!(x > 0)` is used on purpose so NaN lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod gencorr;
pub mod kernelreg;
pub mod scalar;
pub mod specfun;
pub mod taraldsen;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PairedSample = kernelreg::PairedSample<f64>;
pub type KernelFit = kernelreg::KernelFit<f64>;
pub type GenCorrPair = gencorr::GenCorrPair<f64>;
pub type GenCorrMatrix = gencorr::GenCorrMatrix<f64>;
pub type TaraldsenParams = taraldsen::TaraldsenParams<f64>;
pub type DensityGrid = taraldsen::DensityGrid<f64>;
pub type Hyp2F1Args = specfun::Hyp2F1Args<f64>;
pub type BootstrapEnsemble = bootstrap::BootstrapEnsemble<f64>;
pub type Interval = bootstrap::Interval<f64>;

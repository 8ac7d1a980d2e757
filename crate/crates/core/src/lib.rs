//! Partially linear minimum mean squared error (PLMMSE) estimation.
//!
//! The estimators in this crate combine a nonlinear estimate of `X` built
//! from one set of measurements `Z` with a linear correction driven by a
//! second set `Y`. Only the second-order statistics linking `X` and `Y` are
//! needed, together with `E[X|Z]` and the joint law of `(Y, Z)`.
//!
//! Modules:
//!
//! - [`linalg`]: pseudo-inverse, sample moments, Gaussian density, Hadamard
//!   dictionaries and periodized orthogonal wavelets.
//! - [`estimator`]: conditional and separable partially linear estimators,
//!   the additive-noise gain and the scalar binary toy problem.
//! - [`sparse`]: spike-and-slab priors, the scalar MMSE shrinkage, shrinkage
//!   variances, the sparse PLMMSE gain and an exhaustive MMSE oracle.
//! - [`minimax`]: the worst-case distribution under which PLMMSE is the MMSE
//!   estimator.
//! - [`tracking`]: recursive PLMMSE, Kalman and IMM filters for a maneuvering
//!   target observed through position and acceleration sensors.
//! - [`deblur`]: EM fit of wavelet mixtures, wavelet-domain denoising and
//!   frequency-domain fusion of a blurred/noisy signal pair.
//! - [`harness`]: experiment configuration, seeding, result tables and CSV.
//! - [`cli`] and [`selftest`]: the `plmmse` command-line front end.

pub mod cli;
pub mod deblur;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod minimax;
pub mod selftest;
pub mod sparse;
pub mod tracking;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};

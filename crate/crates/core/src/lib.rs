//! Nonlinear sufficient dimension reduction toolkit.
//!
//! Two layers share one linear-algebra core:
//!
//! * [`finite`] — an exact oracle on finite probability spaces: conditional
//!   expectations, ε-measurability, covariance-orthogonality structures,
//!   population covariance/regression operators, and brute-force verifiers
//!   for the measure-theoretic statements connecting the regression operator
//!   to conditional independence.
//! * [`gsir`] / [`kernel`] — the sampled estimator: kernels, centered Gram
//!   matrices, and the regularized generalized eigenproblem that extracts an
//!   estimate of the central class (generalized sliced inverse regression).
//!
//! [`diagnostics`] scores fitted predictors against a known sufficient
//! reduction; [`synth`] generates datasets and finite joint models whose
//! central σ-field is known by construction.

pub mod diagnostics;
pub mod error;
pub mod finite;
pub mod gsir;
pub mod kernel;
pub mod linalg;
pub mod synth;

pub use error::{Error, Result};

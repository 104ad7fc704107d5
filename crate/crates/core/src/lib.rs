//! Variational upper bounds for the ground state of a two-dimensional
//! Schrödinger operator with an attractive delta interaction on a broken line,
//! together with an independent finite-difference eigensolver used to check them.
//!
//! * [`trial`] evaluates the explicit trial family and the closed-form bound.
//! * [`quadrature`] is the adaptive 1D integrator behind every numerical integral.
//! * [`variational`] computes Rayleigh quotients of the trial family and searches it.
//! * [`spectral`] discretizes the quadratic form and finds the lowest eigenvalue.
//! * [`report`] holds the command-line surface and the report formats.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod quadrature;
#[cfg(feature = "cli")]
pub mod report;
pub mod spectral;
pub mod trial;
pub mod variational;

pub use error::{Error, Result};
pub use trial::{BoundReport, Cutoff, TrialParams, WedgeConfig};

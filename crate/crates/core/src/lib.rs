//! Numerical spectral toolkit for the symmetric integral kernel
//!
//! ```text
//! K(x, y) = 1/2 - {1/(xy)}        (0 < x, y <= 1),   K = 0 when xy = 0,
//! ```
//!
//! where `{t}` is the fractional part. The crate provides the scalar building
//! blocks (periodic Bernoulli functions, log-factorials, zeta values), point
//! evaluation of `K` and of its iterated kernel `K2 = K∘K` by independent
//! routes, a discretisation of the eigenproblem `phi = lambda K phi` with a
//! dense Jacobi eigensolver, continuous eigenfunction interpolants together
//! with their derivative series, and verification suites that check the
//! known identities, bounds and asymptotics of this operator numerically.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernoulli;
pub mod calculus;
pub mod error;
pub mod iterated;
pub mod kernel;
pub mod quadrature;
pub mod report;
pub mod spectra;
pub mod suites;
pub mod zeta;

mod jacobi;
mod pwpoly;
mod resonance;

pub use error::{Error, Result};

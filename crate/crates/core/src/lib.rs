//! Open pointer-based simultaneous measurements of position and momentum.
//!
//! A system particle is coupled bilinearly to two pointer particles; both
//! may also couple to a Caldeira-Leggett bath of harmonic oscillators.
//! Reading one observable of each pointer after an interaction time `t`
//! yields the commuting inferred observables `𝒳(t)`, `𝒫(t)`, which equal
//! the initial system position and momentum plus additive noise.
//!
//! The crate
//!
//! * propagates the linear Heisenberg dynamics exactly on piecewise-constant
//!   couplings ([`dynamics`]),
//! * computes the noise covariance by direct linear propagation and by the
//!   kernel double integral, and checks the noise-product bounds ([`noise`]),
//! * builds the broadened marginals and the Gaussian joint distribution
//!   ([`distributions`]),
//! * evaluates the collective entropy against its lower bound
//!   `1 + ln[2π(δ_X δ_P + 1/2)]` ([`entropy`]),
//! * runs configurable time sweeps with CSV output ([`scenario`]).
//!
//! All quantities are dimensionless with ħ = 1; entropies are in nats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod model;
pub mod noise;
pub mod scenario;

pub use error::{Error, Result};

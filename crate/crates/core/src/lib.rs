//! Numerical scattering maps for a priori unstable rotator-pendulum systems.
//!
//! The crate computes first-order Melnikov-type predictions for the change of
//! action and angle along homoclinic excursions, builds the perturbative
//! generating function of the scattering map, and cross-checks everything
//! against a brute-force construction of the perturbed invariant manifolds.

// Index loops mirror the component formulas; the numeric entry points take
// the full (system, state, eps, config) tuple.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod error;
pub mod exprs;
pub mod flow;
pub mod geometry;
pub mod hamgen;
mod linalg;
pub mod melnikov;
pub mod model;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ExtendedState, PerturbationField, SystemSpec, Tangent};

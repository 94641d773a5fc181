//! Rotator-pendulum systems, extended states and perturbation fields.

pub(crate) mod field;
mod potential;
mod rotator;
mod state;
mod system;

pub use field::{
    eval_perturbed, eval_unperturbed, hamiltonian_to_field, FieldFn, PerturbationField, Provenance,
};
pub use potential::PotentialSpec;
pub use rotator::RotatorSpec;
pub use state::{angle_distance, wrap_angle, ExtendedState, PhaseRef, Tangent};
pub use system::{pendulum_energy, Pendulum, Sign, SystemSpec};

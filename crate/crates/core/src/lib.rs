//! Iterative control improvement for finite-dimensional bilinear Schrödinger
//! systems dΨ/dt = −i(H⁰ + u·H¹)Ψ with box-bounded scalar controls.
//!
//! Two improvement methods are provided: a line-searched projected-gradient
//! step ([`gradient`]) and the Krotov global step ([`krotov`]) built from one
//! backward costate sweep plus one forward sweep applying the pointwise
//! argmax update, with explicit singular-regime synthesis. An outer loop
//! ([`budget`]) enforces a terminal energy budget ∫u² dt ≤ a by tuning the
//! penalty weight β, and [`oracle`] holds the independent ground-truth
//! generators (exhaustive bang-bang search, finite-difference gradients, the
//! analytic pulse-area solution) that pin every sign convention.
//!
//! Internal units fix ħ = 1.

// validations use negated comparisons so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod dynamics;
pub mod error;
pub mod gradient;
pub mod krotov;
pub mod objective;
pub mod operator;
pub mod oracle;
pub mod problem;
pub mod solve;
pub mod state;
pub mod synth;

pub use dynamics::{
    energy_integral, k1_profile, k1_value, propagate_backward, propagate_forward,
    AdjointTrajectory, ControlProgram, StateTrajectory, NORM_DRIFT_TOL,
};
pub use error::{Error, Result};
pub use objective::{complement, projector_from_states, terminal_cost, total_cost, Objective};
pub use operator::{
    commutator, pauli_x, pauli_y, pauli_z, BilinearSystem, CMatrix, CVector, HermitianOperator,
    C64, HERMITICITY_TOL, UNITARITY_TOL,
};
pub use problem::{ControlProblem, Evaluation};
pub use state::StateVector;

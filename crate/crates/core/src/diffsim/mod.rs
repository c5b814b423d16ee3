//! Minimal differentiable simulation kernels.
//!
//! Scenes are written once, generic over [`Real`], and differentiated either
//! with forward-mode [`Dual`] numbers (few parameters) or with a discrete
//! adjoint (one control per time step). Contacts are differentiated as
//! branched: the derivative is that of whichever branch the primal values
//! selected, with no smoothing of the branch condition.

mod adjoint;
mod contact;
mod dual;
mod particles;
mod real;
pub mod tape;
mod vector;

pub use adjoint::{
    simulate_backward_adjoint, AdjointTape, CartPendulum, DiscreteDynamics, DoubleIntegrator,
    TerminalLoss, TerminalPosition, TipDistance,
};
pub use contact::{apply_contact, ContactBranch, ContactEvent, ContactModel, Geometry};
pub use dual::{forward_gradient, Dual};
pub use particles::{step_semi_implicit, ParticleSystem, Spring};
pub use real::Real;
pub use tape::Var;
pub use vector::V3;

use thiserror::Error;

/// Largest parameter count handled with forward-mode duals.
pub const MAX_FORWARD_PARAMS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation produced a non-finite value")]
    NonFinite,
    #[error("adjoint tape already consumed")]
    TapeReused,
    #[error("invalid simulation input: {0}")]
    Invalid(String),
}

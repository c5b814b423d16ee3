//! Global search for rugged, contact-rich loss landscapes.
//!
//! The crate bundles three things:
//!
//! * [`optimizers::BoLeap`], a three-level optimizer: a Gaussian-process
//!   Bayesian optimizer proposes start points, CMA-ES style populations
//!   explore around them, and clipped gradient descents move the population
//!   mean between generations.
//! * The baselines it is compared against: random search, CMA-ES, random
//!   restarts of gradient descent, plain Bayesian optimization and a CMA-ES
//!   variant that nudges every mean with a single gradient step.
//! * A small suite of differentiable simulation problems (cartpole, bounce,
//!   pinball, cloth swing) plus a closed-form rugged test function, all with
//!   exact gradients.
//!
//! All optimizers work inside the normalized unit cube; problems receive
//! points in their own coordinates. See the `examples/` directory for one
//! runnable program per capability.

pub mod cmaes;
pub mod common;
pub mod descent;
pub mod diffsim;
pub mod gp;
pub mod harness;
pub mod optimizers;
pub mod problems;

pub use common::{
    seeded_rng, Bounds, Budget, CoreError, EvaluationRecord, Evaluator, ParameterVector, Phase,
    Rng,
};
pub use optimizers::{Optimizer, OptimizerResult};
pub use problems::{Evaluation, Problem};

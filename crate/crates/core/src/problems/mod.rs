//! Benchmark problems: closed-form test functions and simulated scenes bound
//! to a common [`Problem`] interface.

mod analytic;
mod bounce;
mod cartpole;
mod pinball;
mod swing;

pub use analytic::{Sphere, SyntheticRugged};
pub use bounce::{Bounce, BounceConfig, BounceOutcome};
pub use cartpole::{Cartpole, CartpoleConfig};
pub use pinball::{Pinball, PinballConfig, PinballOutcome};
pub use swing::{Swing, SwingConfig, SwingLoss, SwingMode};

use crate::common::{Bounds, CoreError, Result};
use serde::{Deserialize, Serialize};
use std::hash::{DefaultHasher, Hash, Hasher};

/// Result of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Present iff a gradient was requested and the problem provides one.
    pub gradient: Option<Vec<f64>>,
}

impl Evaluation {
    pub fn loss_only(loss: f64) -> Self {
        Self { loss, gradient: None }
    }
}

/// A deterministic objective over a box-constrained space.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn bounds(&self) -> &Bounds;

    fn dimension(&self) -> usize {
        self.bounds().dim()
    }

    fn gradient_available(&self) -> bool;

    /// Runs one episode at `x` (problem coordinates). Simulation failures are
    /// reported as a non-finite loss.
    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Evaluation;

    /// Fingerprint of every discrete decision the simulation took at `x`
    /// (contact on/off, contact branch, step index). Two points with equal
    /// signatures lie in the same smooth piece of the loss.
    fn branch_signature(&self, _x: &[f64]) -> Option<u64> {
        None
    }
}

/// Hashes a sequence of branch decisions into a signature.
pub(crate) fn signature_of<T: Hash>(items: impl IntoIterator<Item = T>) -> u64 {
    let mut h = DefaultHasher::new();
    for item in items {
        item.hash(&mut h);
    }
    h.finish()
}

/// Names accepted by [`by_name`].
pub const REGISTRY: &[&str] = &[
    "synthetic",
    "cartpole",
    "bounce",
    "pinball-2",
    "pinball-16",
    "swing-stiffness",
    "swing-velocity",
    "sphere",
];

/// Options shared by the registry constructors. Every field is optional in
/// config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemOptions {
    /// Dimension of `synthetic` and `sphere`.
    pub dimension: usize,
    /// Cartpole horizon (control steps).
    pub horizon: usize,
    /// Cartpole pendulum links; more than one adds per-joint torques.
    pub links: usize,
    /// Swing loss variant: `single`, `corner` or `mesh`.
    pub swing_loss: String,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        Self {
            dimension: 10,
            horizon: 100,
            links: 1,
            swing_loss: "corner".into(),
        }
    }
}

/// Builds a registered problem.
pub fn by_name(name: &str, options: &ProblemOptions) -> Result<Box<dyn Problem>> {
    Ok(match name {
        "synthetic" => Box::new(SyntheticRugged::new(options.dimension)?),
        "sphere" => Box::new(Sphere::new(options.dimension, -5.0, 5.0)?),
        "cartpole" => Box::new(Cartpole::new(CartpoleConfig {
            horizon: options.horizon,
            links: options.links,
            ..CartpoleConfig::default()
        })?),
        "bounce" => Box::new(Bounce::new(BounceConfig::default())?),
        "pinball-2" => Box::new(Pinball::new(PinballConfig::grid(1, 2))?),
        "pinball-16" => Box::new(Pinball::new(PinballConfig::grid(4, 4))?),
        "swing-stiffness" | "swing-velocity" => {
            let mode = if name == "swing-stiffness" {
                SwingMode::Stiffness
            } else {
                SwingMode::Velocity
            };
            let loss = options.swing_loss.parse::<SwingLoss>()?;
            Box::new(Swing::new(SwingConfig { mode, loss, ..SwingConfig::default() })?)
        }
        other => {
            return Err(CoreError::Config(format!(
                "unknown problem '{other}'; available: {}",
                REGISTRY.join(", ")
            )))
        }
    })
}

/// Forward-mode gradient for a runtime parameter count: picks the smallest
/// supported dual width that fits. `$body` is expanded once per width, so it
/// may call generic simulation code.
macro_rules! forward_dispatch {
    ($params:expr, |$v:ident| $body:expr) => {{
        use $crate::diffsim::forward_gradient;
        let params: &[f64] = $params;
        match params.len() {
            0..=1 => forward_gradient::<1, _>(params, |$v| $body),
            2 => forward_gradient::<2, _>(params, |$v| $body),
            3..=4 => forward_gradient::<4, _>(params, |$v| $body),
            5..=8 => forward_gradient::<8, _>(params, |$v| $body),
            9..=16 => forward_gradient::<16, _>(params, |$v| $body),
            17..=32 => forward_gradient::<32, _>(params, |$v| $body),
            n => panic!("forward mode supports at most {} parameters, got {n}", $crate::diffsim::MAX_FORWARD_PARAMS),
        }
    }};
}
pub(crate) use forward_dispatch;

/// Central finite-difference gradient in problem coordinates with absolute
/// step `h`.
pub fn finite_difference_gradient(problem: &dyn Problem, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = problem.evaluate(&probe, false).loss;
        probe[i] = orig - h;
        let down = problem.evaluate(&probe, false).loss;
        probe[i] = orig;
        g.push((up - down) / (2.0 * h));
    }
    g
}

use super::{Evaluation, Problem};
use crate::common::{Bounds, CoreError, Result};
use crate::diffsim::{simulate_backward_adjoint, CartPendulum, DiscreteDynamics, TipDistance};

#[derive(Debug, Clone, PartialEq)]
pub struct CartpoleConfig {
    /// Number of control steps.
    pub horizon: usize,
    /// Pendulum links. One link is driven by cart velocity alone; longer
    /// chains add a torque control per joint.
    pub links: usize,
    pub dt: f64,
    /// Commanded cart velocity range (m/s).
    pub max_velocity: f64,
    /// Joint torque range (N·m) when `links > 1`.
    pub max_torque: f64,
    /// Tip target (m), cart pivot starts at the origin.
    pub target: [f64; 2],
}

impl Default for CartpoleConfig {
    fn default() -> Self {
        Self {
            horizon: 100,
            links: 1,
            dt: 1e-2,
            max_velocity: 5.0,
            max_torque: 20.0,
            target: [0.6, -0.4],
        }
    }
}

/// Cart-pole trajectory optimization: one cart velocity (plus joint torques
/// for multi-link poles) per time step; loss is the distance from the pole
/// tip to the target at the end of the episode. Gradients come from the
/// discrete adjoint.
#[derive(Debug, Clone)]
pub struct Cartpole {
    config: CartpoleConfig,
    dynamics: CartPendulum,
    loss: TipDistance,
    bounds: Bounds,
}

impl Cartpole {
    pub fn new(config: CartpoleConfig) -> Result<Self> {
        if config.horizon == 0 || config.links == 0 {
            return Err(CoreError::Config("cartpole needs horizon ≥ 1 and links ≥ 1".into()));
        }
        let dynamics = if config.links == 1 {
            CartPendulum::single()
        } else {
            CartPendulum::chain(config.links)
        };
        let cd = dynamics.control_dim();
        let mut lower = Vec::with_capacity(config.horizon * cd);
        let mut upper = Vec::with_capacity(config.horizon * cd);
        for _ in 0..config.horizon {
            lower.push(-config.max_velocity);
            upper.push(config.max_velocity);
            for _ in 1..cd {
                lower.push(-config.max_torque);
                upper.push(config.max_torque);
            }
        }
        let loss = TipDistance {
            target: config.target,
            links: config.links,
            link_length: dynamics.link_length,
        };
        Ok(Self { bounds: Bounds::new(lower, upper)?, dynamics, loss, config })
    }

    pub fn config(&self) -> &CartpoleConfig {
        &self.config
    }

    pub fn dynamics(&self) -> &CartPendulum {
        &self.dynamics
    }

    /// Tip position after the episode.
    pub fn final_tip(&self, controls: &[f64]) -> (f64, f64) {
        let s = self.dynamics.rollout(&self.dynamics.rest_state(), controls, self.config.dt);
        self.loss.tip(&s)
    }
}

impl Problem for Cartpole {
    fn name(&self) -> &str {
        "cartpole"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn gradient_available(&self) -> bool {
        true
    }

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Evaluation {
        let initial = self.dynamics.rest_state();
        if !with_gradient {
            let s = self.dynamics.rollout(&initial, x, self.config.dt);
            return Evaluation::loss_only(self.loss.value_generic(&s));
        }
        match simulate_backward_adjoint(&self.dynamics, &initial, x, self.config.dt, &self.loss) {
            Ok((loss, g)) => Evaluation { loss, gradient: Some(g) },
            Err(_) => Evaluation::loss_only(f64::NAN),
        }
    }
}

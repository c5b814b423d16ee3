use super::{signature_of, Evaluation, Problem};
use crate::common::{Bounds, CoreError, Result};
use crate::diffsim::{
    apply_contact, forward_gradient, ContactBranch, ContactModel, Geometry, ParticleSystem, Real, V3,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BounceConfig {
    /// Initial centre of the ball (m).
    pub start: [f64; 2],
    pub radius: f64,
    pub mass: f64,
    pub gravity: f64,
    pub dt: f64,
    /// Episode length (s).
    pub duration: f64,
    pub target: [f64; 2],
    pub contact: ContactModel,
    /// Bounds on the launch velocity `(v_x, v_y)` in m/s. The upper `v_y`
    /// bound of 0 forces a downward launch.
    pub velocity_lower: [f64; 2],
    pub velocity_upper: [f64; 2],
}

impl Default for BounceConfig {
    fn default() -> Self {
        Self {
            start: [0.0, 1.0],
            radius: 0.1,
            mass: 1.0,
            gravity: -9.8,
            dt: 1e-4,
            duration: 2.0,
            target: [4.0, 0.6],
            contact: ContactModel::Penalty {
                stiffness: 1e4,
                damping: 10.0,
                friction: 0.3,
                restitution: 0.8,
            },
            velocity_lower: [-10.0, -10.0],
            velocity_upper: [10.0, 0.0],
        }
    }
}

/// What happened during one bounce episode.
#[derive(Debug, Clone, PartialEq)]
pub struct BounceOutcome {
    pub final_position: [f64; 2],
    /// Separate ground contacts (entries into contact).
    pub bounces: usize,
    /// `(step, branch)` for every step spent in contact.
    pub contact_log: Vec<(usize, ContactBranch)>,
}

/// Launch a ball against a penalty-contact ground so that it ends the
/// episode at the target; parameters are the launch velocity.
#[derive(Debug, Clone)]
pub struct Bounce {
    config: BounceConfig,
    bounds: Bounds,
}

impl Bounce {
    pub fn new(config: BounceConfig) -> Result<Self> {
        config.contact.validate().map_err(CoreError::Config)?;
        if !(config.dt > 0.0) || !(config.duration > 0.0) {
            return Err(CoreError::Config("bounce needs positive dt and duration".into()));
        }
        let bounds = Bounds::new(config.velocity_lower.to_vec(), config.velocity_upper.to_vec())?;
        Ok(Self { config, bounds })
    }

    pub fn config(&self) -> &BounceConfig {
        &self.config
    }

    fn steps(&self) -> usize {
        (self.config.duration / self.config.dt).round() as usize
    }

    /// Simulates the episode on any scalar; returns the loss and what the
    /// primal trajectory did.
    pub fn simulate<T: Real>(&self, velocity: [T; 2]) -> (T, BounceOutcome) {
        let c = &self.config;
        let mut ball = ParticleSystem::new(
            vec![V3::new(T::cst(c.start[0]), T::cst(c.start[1]), T::zero())],
            vec![V3::new(velocity[0], velocity[1], T::zero())],
            vec![c.mass],
        )
        .expect("valid ball");
        let ground = Geometry::Plane { point: V3::new(0.0, 0.0, 0.0), normal: V3::new(0.0, 1.0, 0.0) };
        let gravity = V3::new(0.0, c.gravity, 0.0);
        let mut log = Vec::new();
        let mut bounces = 0;
        let mut in_contact = false;
        for step in 0..self.steps() {
            let mut forces = ball.internal_forces(gravity);
            let events = apply_contact(&mut ball, &c.contact, &ground, 0, c.radius, c.dt, &mut forces);
            let touching = !events.is_empty();
            if touching && !in_contact {
                bounces += 1;
            }
            in_contact = touching;
            log.extend(events.iter().map(|e| (step, e.branch)));
            if ball.integrate_velocities(&forces, c.dt).is_err() {
                let nan = T::cst(f64::NAN);
                return (nan, BounceOutcome { final_position: [f64::NAN; 2], bounces, contact_log: log });
            }
            ball.integrate_positions(c.dt);
        }
        let p = ball.positions[0];
        let dx = p.x - c.target[0];
        let dy = p.y - c.target[1];
        let loss = (dx * dx + dy * dy).sqrt();
        (loss, BounceOutcome { final_position: [p.x.value(), p.y.value()], bounces, contact_log: log })
    }

    pub fn outcome(&self, velocity: &[f64]) -> BounceOutcome {
        self.simulate([velocity[0], velocity[1]]).1
    }
}

impl Problem for Bounce {
    fn name(&self) -> &str {
        "bounce"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn gradient_available(&self) -> bool {
        true
    }

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Evaluation {
        if with_gradient {
            let (loss, g) = forward_gradient::<2, _>(x, |v| self.simulate([v[0], v[1]]).0);
            Evaluation { loss, gradient: Some(g) }
        } else {
            Evaluation::loss_only(self.simulate([x[0], x[1]]).0)
        }
    }

    fn branch_signature(&self, x: &[f64]) -> Option<u64> {
        Some(signature_of(self.outcome(x).contact_log))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffsim::Dual;

    #[test]
    fn episode_is_two_seconds() {
        let b = Bounce::new(BounceConfig::default()).unwrap();
        assert_eq!(b.steps() as f64 * b.config().dt, 2.0);
        assert_eq!(b.dimension(), 2);
        assert_eq!(b.bounds().upper()[1], 0.0);
    }

    #[test]
    fn airborne_ball_is_smooth_in_vx() {
        // Tall drop: the ball never reaches the ground within 2 s.
        let b = Bounce::new(BounceConfig { start: [0.0, 50.0], ..Default::default() }).unwrap();
        let x = [3.0, -1.0];
        let out = b.outcome(&x);
        assert_eq!(out.bounces, 0);
        let g = b.evaluate(&x, true).gradient.unwrap();
        let h = 1e-4;
        let fd = (b.evaluate(&[x[0] + h, x[1]], false).loss - b.evaluate(&[x[0] - h, x[1]], false).loss)
            / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn duals_do_not_change_the_trajectory() {
        let b = Bounce::new(BounceConfig::default()).unwrap();
        let x = [1.3, -4.2];
        let (_, plain) = b.simulate([x[0], x[1]]);
        let (_, dual) = b.simulate([Dual::<2>::variable(x[0], 0), Dual::<2>::variable(x[1], 1)]);
        assert_eq!(plain, dual);
    }

    #[test]
    fn ball_bounces_a_few_times() {
        let b = Bounce::new(BounceConfig::default()).unwrap();
        for vy in [0.0, -5.0, -10.0] {
            let n = b.outcome(&[1.0, vy]).bounces;
            assert!((2..=5).contains(&n), "vy={vy}: {n} bounces");
        }
        // Faster launches bounce higher, so fewer landings fit in the episode.
        assert!(b.outcome(&[1.0, 0.0]).bounces > b.outcome(&[1.0, -10.0]).bounces);
    }
}

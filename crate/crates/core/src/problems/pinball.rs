use super::{forward_dispatch, signature_of, Evaluation, Problem};
use crate::common::{Bounds, CoreError, Result};
use crate::diffsim::{apply_contact, ContactEvent, ContactModel, Geometry, ParticleSystem, Real, MAX_FORWARD_PARAMS, V3};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, PartialEq)]
pub struct PinballConfig {
    pub rows: usize,
    pub cols: usize,
    /// Platform size (m).
    pub width: f64,
    pub height: f64,
    pub ball_start: [f64; 2],
    pub ball_radius: f64,
    pub gravity: f64,
    pub dt: f64,
    pub duration: f64,
    pub target: [f64; 2],
    pub collider_restitution: f64,
    pub wall_restitution: f64,
    /// Collider half-length as a fraction of half the grid cell width.
    pub collider_fill: f64,
}

impl PinballConfig {
    /// `rows × cols` colliders on the default platform.
    pub fn grid(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            width: 8.0,
            height: 10.0,
            ball_start: [2.1, 9.5],
            ball_radius: 0.2,
            gravity: -9.8,
            dt: 1e-2,
            duration: 4.0,
            target: [7.0, 0.5],
            collider_restitution: 0.8,
            wall_restitution: 0.6,
            collider_fill: 0.8,
        }
    }

    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    /// Centre and half-length of collider `k` (row-major).
    pub fn collider(&self, k: usize) -> ([f64; 2], f64) {
        let (r, c) = ((k / self.cols) as f64, (k % self.cols) as f64);
        let cell_w = (self.width - 2.0) / self.cols as f64;
        let cell_h = 5.5 / self.rows as f64;
        let centre = [1.0 + cell_w * (c + 0.5), self.height - 2.0 - cell_h * (r + 0.5)];
        (centre, self.collider_fill * cell_w / 2.0)
    }
}

/// What happened during one pinball episode.
#[derive(Debug, Clone, PartialEq)]
pub struct PinballOutcome {
    pub final_position: [f64; 2],
    /// Number of reflections off rotating colliders (walls excluded).
    pub collider_contacts: usize,
    pub contact_log: Vec<(usize, ContactEvent)>,
}

/// A ball dropped onto a grid of rotated segment colliders; the parameters
/// are the collider angles and the loss is the distance from the ball's final
/// position to the target.
#[derive(Debug, Clone)]
pub struct Pinball {
    config: PinballConfig,
    bounds: Bounds,
    name: String,
}

impl Pinball {
    pub fn new(config: PinballConfig) -> Result<Self> {
        let n = config.count();
        if n == 0 {
            return Err(CoreError::Config("pinball needs at least one collider".into()));
        }
        if n > MAX_FORWARD_PARAMS {
            return Err(CoreError::Config(format!(
                "pinball supports at most {MAX_FORWARD_PARAMS} colliders, got {n}"
            )));
        }
        for e in [config.collider_restitution, config.wall_restitution] {
            ContactModel::Reflection { restitution: e }.validate().map_err(CoreError::Config)?;
        }
        if !(config.dt > 0.0) || !(config.duration > 0.0) {
            return Err(CoreError::Config("pinball needs positive dt and duration".into()));
        }
        let bounds = Bounds::uniform(n, -FRAC_PI_2, FRAC_PI_2)?;
        Ok(Self { name: format!("pinball-{n}"), config, bounds })
    }

    pub fn config(&self) -> &PinballConfig {
        &self.config
    }

    fn steps(&self) -> usize {
        (self.config.duration / self.config.dt).round() as usize
    }

    /// Simulates the episode on any scalar.
    pub fn simulate<T: Real>(&self, angles: &[T]) -> (T, PinballOutcome) {
        let c = &self.config;
        let colliders: Vec<Geometry<T>> = angles
            .iter()
            .enumerate()
            .map(|(k, &theta)| {
                let (centre, half) = c.collider(k);
                let centre = V3::cst(centre[0], centre[1], 0.0);
                let dir = V3::new(theta.cos(), theta.sin(), T::zero()).scale(T::cst(half));
                Geometry::Segment { a: centre - dir, b: centre + dir }
            })
            .collect();
        let walls = [
            Geometry::Plane { point: V3::new(0.0, 0.0, 0.0), normal: V3::new(0.0, 1.0, 0.0) },
            Geometry::Plane { point: V3::new(0.0, 0.0, 0.0), normal: V3::new(1.0, 0.0, 0.0) },
            Geometry::Plane { point: V3::new(c.width, 0.0, 0.0), normal: V3::new(-1.0, 0.0, 0.0) },
            Geometry::Plane { point: V3::new(0.0, c.height, 0.0), normal: V3::new(0.0, -1.0, 0.0) },
        ];
        let bumper = ContactModel::Reflection { restitution: c.collider_restitution };
        let wall = ContactModel::Reflection { restitution: c.wall_restitution };
        let mut ball = ParticleSystem::new(
            vec![V3::cst(c.ball_start[0], c.ball_start[1], 0.0)],
            vec![V3::zero()],
            vec![1.0],
        )
        .expect("valid ball");
        let gravity = V3::new(0.0, c.gravity, 0.0);
        let n = colliders.len();
        let mut log = Vec::new();
        let mut hits = 0;
        for step in 0..self.steps() {
            let forces = ball.internal_forces(gravity);
            if ball.integrate_velocities(&forces, c.dt).is_err() {
                let out = PinballOutcome { final_position: [f64::NAN; 2], collider_contacts: hits, contact_log: log };
                return (T::cst(f64::NAN), out);
            }
            for (k, g) in colliders.iter().enumerate() {
                let ev = apply_contact(&mut ball, &bumper, g, k, c.ball_radius, c.dt, &mut []);
                hits += ev.len();
                log.extend(ev.into_iter().map(|e| (step, e)));
            }
            for (k, g) in walls.iter().enumerate() {
                let ev = apply_contact(&mut ball, &wall, g, n + k, c.ball_radius, c.dt, &mut []);
                log.extend(ev.into_iter().map(|e| (step, e)));
            }
            ball.integrate_positions(c.dt);
        }
        let p = ball.positions[0];
        let dx = p.x - c.target[0];
        let dy = p.y - c.target[1];
        let loss = (dx * dx + dy * dy).sqrt();
        let out = PinballOutcome {
            final_position: [p.x.value(), p.y.value()],
            collider_contacts: hits,
            contact_log: log,
        };
        (loss, out)
    }

    pub fn outcome(&self, angles: &[f64]) -> PinballOutcome {
        self.simulate(angles).1
    }
}

impl Problem for Pinball {
    fn name(&self) -> &str {
        &self.name
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn gradient_available(&self) -> bool {
        true
    }

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Evaluation {
        if with_gradient {
            let (loss, g) = forward_dispatch!(x, |v| self.simulate(v).0);
            Evaluation { loss, gradient: Some(g) }
        } else {
            Evaluation::loss_only(self.simulate(x).0)
        }
    }

    fn branch_signature(&self, x: &[f64]) -> Option<u64> {
        Some(signature_of(self.outcome(x).contact_log))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collider_layout() {
        let c = PinballConfig::grid(1, 2);
        let ((centre, half), (right, _)) = (c.collider(0), c.collider(1));
        assert_eq!(centre, [2.5, 5.25]);
        assert_eq!(right[0], 5.5);
        assert!((half - 1.2).abs() < 1e-12);
        let c = PinballConfig::grid(4, 4);
        assert!((c.collider(0).1 - 0.6).abs() < 1e-12);
        assert_eq!(Pinball::new(c).unwrap().name(), "pinball-16");
    }

    #[test]
    fn miss_everything_is_a_plateau() {
        for (r, c) in [(1, 2), (4, 4)] {
            let p = Pinball::new(PinballConfig::grid(r, c)).unwrap();
            let x = vec![1.5; r * c];
            assert_eq!(p.outcome(&x).collider_contacts, 0);
            let g = p.evaluate(&x, true).gradient.unwrap();
            assert!(g.iter().all(|&d| d == 0.0), "{g:?}");
        }
    }

    #[test]
    fn flat_collider_deflects_the_ball() {
        let p = Pinball::new(PinballConfig::grid(1, 2)).unwrap();
        let out = p.outcome(&[0.3, 0.0]);
        assert!(out.collider_contacts > 0);
        let g = p.evaluate(&[0.3, 0.0], true).gradient.unwrap();
        assert!(g[0] != 0.0);
    }

    #[test]
    fn too_many_colliders_rejected() {
        assert!(Pinball::new(PinballConfig::grid(6, 6)).is_err());
        assert!(Pinball::new(PinballConfig::grid(0, 3)).is_err());
    }
}

use super::{forward_dispatch, signature_of, Evaluation, Problem};
use crate::common::{Bounds, CoreError, Result};
use crate::diffsim::{apply_contact, ContactModel, Geometry, ParticleSystem, Real, Spring, V3};
use std::str::FromStr;

/// Which parameters the swing task exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwingMode {
    /// One stiffness per cloth patch.
    Stiffness,
    /// The initial velocity shared by the cloth and both anchors.
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwingLoss {
    /// Distance of one free corner to its target.
    Single,
    /// Mean distance of the four corners.
    Corner,
    /// Mean distance over every particle.
    Mesh,
}

impl FromStr for SwingLoss {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(SwingLoss::Single),
            "corner" => Ok(SwingLoss::Corner),
            "mesh" => Ok(SwingLoss::Mesh),
            other => Err(CoreError::Config(format!(
                "unknown swing loss '{other}' (expected single, corner or mesh)"
            ))),
        }
    }
}

impl FromStr for SwingMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stiffness" => Ok(SwingMode::Stiffness),
            "velocity" => Ok(SwingMode::Velocity),
            other => Err(CoreError::Config(format!(
                "unknown swing mode '{other}' (expected stiffness or velocity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwingConfig {
    pub mode: SwingMode,
    pub loss: SwingLoss,
    /// Particles per side.
    pub resolution: usize,
    /// Cloth side length (m).
    pub size: f64,
    /// Total cloth mass (kg).
    pub mass: f64,
    /// Patches per side.
    pub patches: usize,
    /// Height of the top edge at the start (m).
    pub top_height: f64,
    /// Stiffness used for every patch in velocity mode (N/m).
    pub stiffness: f64,
    pub stiffness_range: [f64; 2],
    pub shear_scale: f64,
    pub bend_scale: f64,
    pub spring_damping: f64,
    /// Anchor and cloth launch velocity used in stiffness mode.
    pub velocity: [f64; 3],
    pub velocity_lower: [f64; 3],
    pub velocity_upper: [f64; 3],
    /// Anchors let go of the cloth at this time (s).
    pub release_time: f64,
    pub duration: f64,
    pub dt: f64,
    pub gravity: f64,
    /// Centre of the target cloth laid flat on the floor, as `(x, z)`.
    pub target_centre: [f64; 2],
}

impl Default for SwingConfig {
    fn default() -> Self {
        Self {
            mode: SwingMode::Stiffness,
            loss: SwingLoss::Corner,
            resolution: 9,
            size: 0.2,
            mass: 0.2,
            patches: 4,
            top_height: 0.45,
            stiffness: 200.0,
            stiffness_range: [20.0, 400.0],
            shear_scale: 1.0,
            bend_scale: 0.25,
            spring_damping: 0.005,
            velocity: [0.0, 0.5, 1.5],
            velocity_lower: [-1.0, -1.0, 0.0],
            velocity_upper: [1.0, 2.0, 3.0],
            release_time: 0.3,
            duration: 1.0,
            dt: 1e-3,
            gravity: -9.8,
            target_centre: [0.0, 1.0],
        }
    }
}

/// Two anchors hold the top corners of a hanging cloth, swing it with a
/// constant velocity and let go; the cloth should land flat on a target
/// region of the floor.
#[derive(Debug, Clone)]
pub struct Swing {
    config: SwingConfig,
    bounds: Bounds,
    name: &'static str,
    /// `(i, j, rest length, patch, stiffness scale)`.
    springs: Vec<(usize, usize, f64, usize, f64)>,
}

impl Swing {
    pub fn new(config: SwingConfig) -> Result<Self> {
        let n = config.resolution;
        if n < 2 || config.patches == 0 || config.patches > n - 1 {
            return Err(CoreError::Config(format!(
                "swing needs resolution ≥ 2 and 1..={} patches per side",
                n.saturating_sub(1)
            )));
        }
        if !(config.dt > 0.0) || !(config.duration > 0.0) || !(config.mass > 0.0) || !(config.size > 0.0) {
            return Err(CoreError::Config("swing needs positive dt, duration, mass and size".into()));
        }
        let (bounds, name) = match config.mode {
            SwingMode::Stiffness => {
                let p = config.patches * config.patches;
                let [lo, hi] = config.stiffness_range;
                (Bounds::uniform(p, lo, hi)?, "swing-stiffness")
            }
            SwingMode::Velocity => {
                (Bounds::new(config.velocity_lower.to_vec(), config.velocity_upper.to_vec())?, "swing-velocity")
            }
        };
        if bounds.dim() > crate::diffsim::MAX_FORWARD_PARAMS {
            return Err(CoreError::Config("too many swing patches for forward mode".into()));
        }
        let springs = build_springs(&config);
        Ok(Self { config, bounds, name, springs })
    }

    pub fn config(&self) -> &SwingConfig {
        &self.config
    }

    fn index(&self, i: usize, j: usize) -> usize {
        i * self.config.resolution + j
    }

    fn spacing(&self) -> f64 {
        self.config.size / (self.config.resolution - 1) as f64
    }

    /// Rest position of particle `(row i, column j)`; row 0 is the top edge.
    fn rest_position(&self, i: usize, j: usize) -> [f64; 3] {
        let h = self.spacing();
        [-self.config.size / 2.0 + j as f64 * h, self.config.top_height - i as f64 * h, 0.0]
    }

    /// Target of particle `(i, j)` on the floor. The top edge leads the
    /// swing, so it lands furthest along +z.
    pub fn target_position(&self, i: usize, j: usize) -> [f64; 3] {
        let h = self.spacing();
        let half = self.config.size / 2.0;
        let [cx, cz] = self.config.target_centre;
        [cx - half + j as f64 * h, 0.0, cz + half - i as f64 * h]
    }

    fn loss_particles(&self) -> Vec<(usize, usize)> {
        let last = self.config.resolution - 1;
        match self.config.loss {
            SwingLoss::Single => vec![(last, 0)],
            SwingLoss::Corner => vec![(0, 0), (0, last), (last, 0), (last, last)],
            SwingLoss::Mesh => (0..=last).flat_map(|i| (0..=last).map(move |j| (i, j))).collect(),
        }
    }

    /// Runs the episode and returns the loss together with the final
    /// positions and the floor-contact log.
    pub fn simulate<T: Real>(&self, params: &[T]) -> (T, Vec<V3<f64>>, Vec<(usize, usize)>) {
        let c = &self.config;
        let n = c.resolution;
        let (patch_k, vel): (Vec<T>, [T; 3]) = match c.mode {
            SwingMode::Stiffness => {
                (params.to_vec(), [T::cst(c.velocity[0]), T::cst(c.velocity[1]), T::cst(c.velocity[2])])
            }
            SwingMode::Velocity => {
                (vec![T::cst(c.stiffness); c.patches * c.patches], [params[0], params[1], params[2]])
            }
        };
        let v0 = V3::new(vel[0], vel[1], vel[2]);
        let mut positions = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = self.rest_position(i, j);
                positions.push(V3::cst(p[0], p[1], p[2]));
            }
        }
        let m = c.mass / (n * n) as f64;
        let mut cloth = ParticleSystem::new(positions, vec![v0; n * n], vec![m; n * n]).expect("valid cloth");
        for &(i, j, rest, patch, scale) in &self.springs {
            cloth
                .add_spring(Spring {
                    i,
                    j,
                    rest_length: rest,
                    stiffness: patch_k[patch] * scale,
                    damping: c.spring_damping,
                })
                .expect("valid spring");
        }
        let anchors = [self.index(0, 0), self.index(0, n - 1)];
        for &a in &anchors {
            cloth.pinned[a] = true;
        }
        let floor = Geometry::Plane { point: V3::new(0.0, 0.0, 0.0), normal: V3::new(0.0, 1.0, 0.0) };
        let projection = ContactModel::Reflection { restitution: 0.0 };
        let gravity = V3::new(0.0, c.gravity, 0.0);
        let steps = (c.duration / c.dt).round() as usize;
        let release = (c.release_time / c.dt).round() as usize;
        let mut log = Vec::new();
        for step in 0..steps {
            if step == release {
                for &a in &anchors {
                    cloth.pinned[a] = false;
                }
            }
            let forces = cloth.internal_forces(gravity);
            if cloth.integrate_velocities(&forces, c.dt).is_err() {
                let nan = vec![V3::cst(f64::NAN, f64::NAN, f64::NAN); n * n];
                return (T::cst(f64::NAN), nan, log);
            }
            for ev in apply_contact(&mut cloth, &projection, &floor, 0, 0.0, c.dt, &mut []) {
                log.push((step, ev.particle));
            }
            cloth.integrate_positions(c.dt);
        }
        let picks = self.loss_particles();
        let mut total = T::zero();
        for &(i, j) in &picks {
            let t = self.target_position(i, j);
            let d = cloth.positions[self.index(i, j)] - V3::cst(t[0], t[1], t[2]);
            total += d.norm();
        }
        let loss = total * (1.0 / picks.len() as f64);
        (loss, cloth.positions.iter().map(|p| p.value()).collect(), log)
    }

    /// Final particle positions, row-major.
    pub fn final_state(&self, params: &[f64]) -> Vec<V3<f64>> {
        self.simulate(params).1
    }
}

fn build_springs(c: &SwingConfig) -> Vec<(usize, usize, f64, usize, f64)> {
    let n = c.resolution;
    let h = c.size / (n - 1) as f64;
    let idx = |i: usize, j: usize| i * n + j;
    // Patch of a spring from its midpoint, in doubled grid units.
    let patch = |i1: usize, j1: usize, i2: usize, j2: usize| {
        let cell = |a: usize, b: usize| ((a + b) * c.patches / (2 * (n - 1))).min(c.patches - 1);
        cell(i1, i2) * c.patches + cell(j1, j2)
    };
    let mut out = Vec::new();
    let mut add = |i1: usize, j1: usize, i2: usize, j2: usize, scale: f64| {
        let di = i1.abs_diff(i2) as f64;
        let dj = j1.abs_diff(j2) as f64;
        let rest = h * (di * di + dj * dj).sqrt();
        out.push((idx(i1, j1), idx(i2, j2), rest, patch(i1, j1, i2, j2), scale));
    };
    for i in 0..n {
        for j in 0..n {
            if j + 1 < n {
                add(i, j, i, j + 1, 1.0);
            }
            if i + 1 < n {
                add(i, j, i + 1, j, 1.0);
            }
            if i + 1 < n && j + 1 < n {
                add(i, j, i + 1, j + 1, c.shear_scale);
                add(i, j + 1, i + 1, j, c.shear_scale);
            }
            if j + 2 < n {
                add(i, j, i, j + 2, c.bend_scale);
            }
            if i + 2 < n {
                add(i, j, i + 2, j, c.bend_scale);
            }
        }
    }
    out
}

impl Problem for Swing {
    fn name(&self) -> &str {
        self.name
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
        Some(signature_of(self.simulate(x).2))
    }
}

use super::{Real, SimError, V3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring<T> {
    pub i: usize,
    pub j: usize,
    /// Rest length in meters.
    pub rest_length: f64,
    /// N/m.
    pub stiffness: T,
    /// N·s/m along the spring axis.
    pub damping: f64,
}

/// Point masses connected by damped springs. Pinned particles are kinematic:
/// their velocity is prescribed and forces do not act on them.
#[derive(Debug, Clone)]
pub struct ParticleSystem<T> {
    pub positions: Vec<V3<T>>,
    pub velocities: Vec<V3<T>>,
    pub masses: Vec<f64>,
    pub pinned: Vec<bool>,
    pub springs: Vec<Spring<T>>,
}

impl<T: Real> ParticleSystem<T> {
    pub fn new(positions: Vec<V3<T>>, velocities: Vec<V3<T>>, masses: Vec<f64>) -> Result<Self, SimError> {
        let n = positions.len();
        if velocities.len() != n || masses.len() != n {
            return Err(SimError::Invalid("positions, velocities and masses differ in length".into()));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(SimError::Invalid("masses must be positive".into()));
        }
        Ok(Self {
            positions,
            velocities,
            masses,
            pinned: vec![false; n],
            springs: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn add_spring(&mut self, spring: Spring<T>) -> Result<(), SimError> {
        if spring.i >= self.len() || spring.j >= self.len() || spring.i == spring.j {
            return Err(SimError::Invalid(format!("bad spring indices ({}, {})", spring.i, spring.j)));
        }
        if !(spring.rest_length > 0.0) {
            return Err(SimError::Invalid("rest length must be positive".into()));
        }
        self.springs.push(spring);
        Ok(())
    }

    /// Gravity plus spring and spring-damping forces on every particle.
    pub fn internal_forces(&self, gravity: V3<f64>) -> Vec<V3<T>> {
        let mut forces: Vec<V3<T>> = self
            .masses
            .iter()
            .map(|&m| V3::cst(gravity.x * m, gravity.y * m, gravity.z * m))
            .collect();
        for s in &self.springs {
            let d = self.positions[s.j] - self.positions[s.i];
            let len = d.norm();
            if len.value() <= 0.0 {
                continue;
            }
            let dir = d.scale(T::cst(1.0) / len);
            let rel_v = (self.velocities[s.j] - self.velocities[s.i]).dot(dir);
            let magnitude = s.stiffness * (len - s.rest_length) + rel_v * s.damping;
            let f = dir.scale(magnitude);
            forces[s.i] += f;
            forces[s.j] -= f;
        }
        forces
    }

    /// `v ← v + dt·F/m` for free particles.
    pub fn integrate_velocities(&mut self, forces: &[V3<T>], dt: f64) -> Result<(), SimError> {
        for (k, f) in forces.iter().enumerate() {
            if !f.is_finite() {
                return Err(SimError::NonFinite);
            }
            if self.pinned[k] {
                continue;
            }
            let inv_m = dt / self.masses[k];
            self.velocities[k] += f.scale_f(inv_m);
        }
        Ok(())
    }

    /// `x ← x + dt·v` using the already-updated velocities.
    pub fn integrate_positions(&mut self, dt: f64) {
        for (x, v) in self.positions.iter_mut().zip(&self.velocities) {
            *x += v.scale_f(dt);
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.masses)
            .map(|(v, m)| 0.5 * m * v.value().norm_sq())
            .sum()
    }

    pub fn spring_energy(&self) -> f64 {
        self.springs
            .iter()
            .map(|s| {
                let ext = (self.positions[s.j] - self.positions[s.i]).value().norm() - s.rest_length;
                0.5 * s.stiffness.value() * ext * ext
            })
            .sum()
    }
}

/// One semi-implicit (symplectic) Euler step: the velocity update precedes
/// and feeds the position update.
pub fn step_semi_implicit<T: Real>(
    system: &mut ParticleSystem<T>,
    forces: &[V3<T>],
    dt: f64,
) -> Result<(), SimError> {
    if !(dt > 0.0) {
        return Err(SimError::Invalid("dt must be positive".into()));
    }
    if forces.len() != system.len() {
        return Err(SimError::Invalid("one force per particle".into()));
    }
    system.integrate_velocities(forces, dt)?;
    system.integrate_positions(dt);
    Ok(())
}

use super::{ParticleSystem, Real, V3};

/// Tangential-velocity scale (m/s) of the regularized Coulomb friction.
const FRICTION_REGULARIZATION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactModel {
    /// Relaxed contact: a spring-damper along the normal while penetrating.
    /// Stiffness drops to `restitution² · stiffness` once the particle moves
    /// outwards, so an undamped impact leaves with `restitution` times its
    /// entry speed.
    Penalty {
        stiffness: f64,
        damping: f64,
        friction: f64,
        restitution: f64,
    },
    /// Velocity-level contact: the normal velocity component `v_n < 0` is
    /// replaced by `-restitution · v_n`. With `restitution = 0` the velocity
    /// is projected onto the contact plane.
    Reflection { restitution: f64 },
}

impl ContactModel {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ContactModel::Penalty { stiffness, damping, friction, restitution } => {
                if stiffness < 0.0 || damping < 0.0 || friction < 0.0 {
                    return Err("penalty coefficients must be non-negative".into());
                }
                check_restitution(restitution)
            }
            ContactModel::Reflection { restitution } => check_restitution(restitution),
        }
    }
}

fn check_restitution(e: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(format!("restitution {e} outside [0, 1]"))
    }
}

/// Collider shapes. Segment endpoints may depend on optimized parameters.
#[derive(Debug, Clone, Copy)]
pub enum Geometry<T> {
    /// Half-space boundary through `point` with outward unit `normal`.
    Plane { point: V3<f64>, normal: V3<f64> },
    /// Thin segment collider between `a` and `b`.
    Segment { a: V3<T>, b: V3<T> },
}

/// Which branch a contact took, recorded so callers can tell whether two
/// parameter settings share the same piecewise-smooth regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContactBranch {
    Compress,
    Restitute,
    Separating,
    Reflect,
    /// Reflection off a segment endpoint rather than its interior.
    ReflectEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContactEvent {
    pub particle: usize,
    pub collider: usize,
    pub branch: ContactBranch,
}

struct Proximity<T> {
    /// Penetration depth, positive when overlapping.
    depth: T,
    normal: V3<T>,
    endpoint: bool,
}

fn proximity<T: Real>(p: V3<T>, radius: f64, geometry: &Geometry<T>) -> Option<Proximity<T>> {
    match geometry {
        Geometry::Plane { point, normal } => {
            let n = V3::<T>::cst(normal.x, normal.y, normal.z);
            let signed = (p - V3::cst(point.x, point.y, point.z)).dot(n);
            let depth = T::cst(radius) - signed;
            (depth.value() > 0.0).then_some(Proximity { depth, normal: n, endpoint: false })
        }
        Geometry::Segment { a, b } => {
            let ab = *b - *a;
            let len_sq = ab.norm_sq();
            let raw_t = (p - *a).dot(ab) / len_sq;
            let (t, endpoint) = if raw_t.value() <= 0.0 {
                (T::zero(), true)
            } else if raw_t.value() >= 1.0 {
                (T::cst(1.0), true)
            } else {
                (raw_t, false)
            };
            let closest = *a + ab.scale(t);
            let d = p - closest;
            let dist = d.norm();
            if dist.value() >= radius || dist.value() == 0.0 {
                return None;
            }
            Some(Proximity {
                depth: T::cst(radius) - dist,
                normal: d.scale(T::cst(1.0) / dist),
                endpoint,
            })
        }
    }
}

/// Applies `model` between every particle (a sphere of `radius`) and
/// `geometry`.
///
/// The penalty variant adds normal and friction forces to `forces` based on
/// the current state; call it before integrating velocities. The reflection
/// variant edits velocities, testing penetration at the predicted position
/// `x + dt·v`; call it after integrating velocities and before positions.
pub fn apply_contact<T: Real>(
    system: &mut ParticleSystem<T>,
    model: &ContactModel,
    geometry: &Geometry<T>,
    collider: usize,
    radius: f64,
    dt: f64,
    forces: &mut [V3<T>],
) -> Vec<ContactEvent> {
    let mut events = Vec::new();
    for k in 0..system.len() {
        if system.pinned[k] {
            continue;
        }
        match *model {
            ContactModel::Penalty { stiffness, damping, friction, restitution } => {
                let Some(c) = proximity(system.positions[k], radius, geometry) else {
                    continue;
                };
                let v = system.velocities[k];
                let v_n = v.dot(c.normal);
                let (k_eff, branch) = if v_n.value() < 0.0 {
                    (stiffness, ContactBranch::Compress)
                } else {
                    (restitution * restitution * stiffness, ContactBranch::Restitute)
                };
                let f_n = c.depth * k_eff - v_n * damping;
                if f_n.value() <= 0.0 {
                    events.push(ContactEvent { particle: k, collider, branch: ContactBranch::Separating });
                    continue;
                }
                let v_t = v - c.normal.scale(v_n);
                let reg = (v_t.norm_sq() + FRICTION_REGULARIZATION * FRICTION_REGULARIZATION).sqrt();
                let friction_force = v_t.scale(-(f_n * friction) / reg);
                forces[k] += c.normal.scale(f_n) + friction_force;
                events.push(ContactEvent { particle: k, collider, branch });
            }
            ContactModel::Reflection { restitution } => {
                let predicted = system.positions[k] + system.velocities[k].scale_f(dt);
                let Some(c) = proximity(predicted, radius, geometry) else {
                    continue;
                };
                let v = system.velocities[k];
                let v_n = v.dot(c.normal);
                if v_n.value() >= 0.0 {
                    continue;
                }
                system.velocities[k] = v - c.normal.scale(v_n * (1.0 + restitution));
                let branch = if c.endpoint { ContactBranch::ReflectEndpoint } else { ContactBranch::Reflect };
                events.push(ContactEvent { particle: k, collider, branch });
            }
        }
    }
    events
}

//! Discrete adjoints for per-timestep control problems.
//!
//! A forward rollout stores every intermediate state on an [`AdjointTape`];
//! the reverse sweep then chains vector-Jacobian products of the step map
//! from the terminal loss back to the first control, yielding the gradient
//! with respect to all controls in one pass.

use super::{tape, Real, SimError};

/// Time-discrete dynamics `s_{t+1} = step(s_t, u_t)`.
pub trait DiscreteDynamics {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn step(&self, state: &[f64], control: &[f64], dt: f64) -> Vec<f64>;
    /// Given `λ = ∂L/∂s_{t+1}`, returns `(∂L/∂s_t, ∂L/∂u_t)`.
    fn step_vjp(&self, state: &[f64], control: &[f64], dt: f64, lambda: &[f64]) -> (Vec<f64>, Vec<f64>);
}

/// Loss on the final state of a rollout.
pub trait TerminalLoss {
    fn value_and_gradient(&self, state: &[f64]) -> (f64, Vec<f64>);
}

/// States recorded by a forward rollout. The reverse sweep may run once.
#[derive(Debug, Clone)]
pub struct AdjointTape {
    states: Vec<Vec<f64>>,
    controls: Vec<f64>,
    control_dim: usize,
    dt: f64,
    consumed: bool,
}

impl AdjointTape {
    /// Rolls `dynamics` forward from `initial` under `controls` (laid out
    /// step-major, `control_dim` entries per step).
    pub fn record<D: DiscreteDynamics + ?Sized>(
        dynamics: &D,
        initial: &[f64],
        controls: &[f64],
        dt: f64,
    ) -> Result<Self, SimError> {
        let cd = dynamics.control_dim();
        if initial.len() != dynamics.state_dim() {
            return Err(SimError::Invalid("initial state has the wrong dimension".into()));
        }
        if cd == 0 || controls.len() % cd != 0 {
            return Err(SimError::Invalid("controls are not a whole number of steps".into()));
        }
        if !(dt > 0.0) {
            return Err(SimError::Invalid("dt must be positive".into()));
        }
        let steps = controls.len() / cd;
        let mut states = Vec::with_capacity(steps + 1);
        states.push(initial.to_vec());
        for t in 0..steps {
            let next = dynamics.step(&states[t], &controls[t * cd..(t + 1) * cd], dt);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(SimError::NonFinite);
            }
            states.push(next);
        }
        Ok(Self {
            states,
            controls: controls.to_vec(),
            control_dim: cd,
            dt,
            consumed: false,
        })
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("tape holds the initial state")
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// Reverse sweep: loss and gradient over every control.
    pub fn backward<D, L>(&mut self, dynamics: &D, loss: &L) -> Result<(f64, Vec<f64>), SimError>
    where
        D: DiscreteDynamics + ?Sized,
        L: TerminalLoss + ?Sized,
    {
        if self.consumed {
            return Err(SimError::TapeReused);
        }
        self.consumed = true;
        let (value, mut lambda) = loss.value_and_gradient(self.final_state());
        let cd = self.control_dim;
        let mut grad = vec![0.0; self.controls.len()];
        for t in (0..self.steps()).rev() {
            let u = &self.controls[t * cd..(t + 1) * cd];
            let (ls, lu) = dynamics.step_vjp(&self.states[t], u, self.dt, &lambda);
            grad[t * cd..(t + 1) * cd].copy_from_slice(&lu);
            lambda = ls;
        }
        Ok((value, grad))
    }
}

/// Forward rollout followed by the adjoint sweep.
pub fn simulate_backward_adjoint<D, L>(
    dynamics: &D,
    initial: &[f64],
    controls: &[f64],
    dt: f64,
    loss: &L,
) -> Result<(f64, Vec<f64>), SimError>
where
    D: DiscreteDynamics + ?Sized,
    L: TerminalLoss + ?Sized,
{
    AdjointTape::record(dynamics, initial, controls, dt)?.backward(dynamics, loss)
}

/// `x'' = u`, state `[x, v]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleIntegrator;

impl DiscreteDynamics for DoubleIntegrator {
    fn state_dim(&self) -> usize {
        2
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn step(&self, s: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
        let v = s[1] + dt * u[0];
        vec![s[0] + dt * v, v]
    }
    fn step_vjp(&self, _s: &[f64], _u: &[f64], dt: f64, l: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lv = l[1] + dt * l[0];
        (vec![l[0], lv], vec![dt * lv])
    }
}

/// Terminal position `x_T` of a [`DoubleIntegrator`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TerminalPosition;

impl TerminalLoss for TerminalPosition {
    fn value_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        (s[0], vec![1.0, 0.0])
    }
}

/// Cart carrying a chain of `links` point-mass pendulum links (length
/// `link_length` each, angles measured from hanging straight down).
///
/// The cart follows its commanded velocity exactly; the cart acceleration
/// `(u_t − u_{t−1})/dt` drives the links. With `torques` enabled every joint
/// also receives a torque control. State layout:
/// `[x, θ_1..θ_n, ω_1..ω_n, u_prev]`; control layout `[u, τ_1..τ_n]`.
#[derive(Debug, Clone)]
pub struct CartPendulum {
    pub link_masses: Vec<f64>,
    pub link_length: f64,
    pub gravity: f64,
    /// Angular velocity damping (1/s).
    pub damping: f64,
    pub torques: bool,
}

impl CartPendulum {
    pub fn single() -> Self {
        Self {
            link_masses: vec![1.0],
            link_length: 1.0,
            gravity: 9.8,
            damping: 0.1,
            torques: false,
        }
    }

    /// Links get lighter away from the cart.
    pub fn chain(links: usize) -> Self {
        Self {
            link_masses: (0..links).map(|i| 0.5f64.powi(i as i32)).collect(),
            torques: true,
            ..Self::single()
        }
    }

    pub fn links(&self) -> usize {
        self.link_masses.len()
    }

    /// Resting initial state.
    pub fn rest_state(&self) -> Vec<f64> {
        vec![0.0; self.state_dim()]
    }

    /// One semi-implicit Euler step, generic over the scalar.
    pub fn step_generic<T: Real>(&self, s: &[T], u: &[T], dt: f64) -> Vec<T> {
        let n = self.links();
        let l = self.link_length;
        let x = s[0];
        let theta = &s[1..1 + n];
        let omega = &s[1 + n..1 + 2 * n];
        let u_prev = s[1 + 2 * n];
        let accel = (u[0] - u_prev) / dt;

        let alpha: Vec<T> = if n == 1 && !self.torques {
            // Closed form of the 1×1 system below.
            vec![-(theta[0].sin() * (self.gravity / l)) - accel * theta[0].cos() / l]
        } else {
            // μ_ij: mass carried beyond both joints i and j.
            let tail: Vec<f64> = (0..n).map(|i| self.link_masses[i..].iter().sum()).collect();
            let mut m = vec![vec![T::zero(); n]; n];
            let mut rhs = vec![T::zero(); n];
            for i in 0..n {
                for j in 0..n {
                    let mu = tail[i.max(j)] * l * l;
                    let diff = theta[i] - theta[j];
                    m[i][j] = diff.cos() * mu;
                    rhs[i] -= diff.sin() * omega[j] * omega[j] * mu;
                }
                rhs[i] -= (theta[i].sin() * self.gravity + accel * theta[i].cos()) * (tail[i] * l);
                if self.torques {
                    rhs[i] += u[1 + i];
                    if i + 1 < n {
                        rhs[i] -= u[2 + i];
                    }
                }
            }
            solve_dense(m, rhs)
        };

        let mut next = Vec::with_capacity(s.len());
        next.push(x + u[0] * dt);
        let new_omega: Vec<T> = (0..n)
            .map(|i| omega[i] + (alpha[i] - omega[i] * self.damping) * dt)
            .collect();
        for i in 0..n {
            next.push(theta[i] + new_omega[i] * dt);
        }
        next.extend(new_omega);
        next.push(u[0]);
        next
    }

    /// Rollout over all controls, generic over the scalar. Returns the final
    /// state.
    pub fn rollout<T: Real>(&self, initial: &[f64], controls: &[T], dt: f64) -> Vec<T> {
        let cd = self.control_dim();
        let mut s: Vec<T> = initial.iter().map(|&v| T::cst(v)).collect();
        for u in controls.chunks(cd) {
            s = self.step_generic(&s, u, dt);
        }
        s
    }

    /// Hand-derived VJP of the single-link step without torques.
    fn single_link_vjp(&self, s: &[f64], u: &[f64], dt: f64, l: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let len = self.link_length;
        let (phi, u_prev) = (s[1], s[3]);
        let accel = (u[0] - u_prev) / dt;
        let (sin, cos) = phi.sin_cos();
        let (lx, lphi, lomega, lup) = (l[0], l[1], l[2], l[3]);

        // φ' = φ + dt·ω' feeds back into ω'.
        let lomega_total = lomega + dt * lphi;
        let dalpha_dphi = -(self.gravity / len) * cos + (accel / len) * sin;
        let dalpha_daccel = -cos / len;
        let laccel = lomega_total * dt * dalpha_daccel;

        let d_phi = lphi + lomega_total * dt * dalpha_dphi;
        let d_omega = lomega_total * (1.0 - dt * self.damping);
        let d_uprev = -laccel / dt;
        let d_u = lx * dt + lup + laccel / dt;
        (vec![lx, d_phi, d_omega, d_uprev], vec![d_u])
    }
}

impl DiscreteDynamics for CartPendulum {
    fn state_dim(&self) -> usize {
        2 * self.links() + 2
    }

    fn control_dim(&self) -> usize {
        if self.torques {
            1 + self.links()
        } else {
            1
        }
    }

    fn step(&self, s: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
        self.step_generic(s, u, dt)
    }

    fn step_vjp(&self, s: &[f64], u: &[f64], dt: f64, lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if self.links() == 1 && !self.torques {
            return self.single_link_vjp(s, u, dt, lambda);
        }
        let sd = s.len();
        let inputs: Vec<f64> = s.iter().chain(u).copied().collect();
        let (_, g) = tape::vjp(&inputs, lambda, |v| self.step_generic(&v[..sd], &v[sd..], dt));
        (g[..sd].to_vec(), g[sd..].to_vec())
    }
}

/// Distance from the pendulum tip to a fixed target.
#[derive(Debug, Clone)]
pub struct TipDistance {
    pub target: [f64; 2],
    pub links: usize,
    pub link_length: f64,
}

impl TipDistance {
    pub fn tip<T: Real>(&self, s: &[T]) -> (T, T) {
        let mut tx = s[0];
        let mut ty = T::zero();
        for k in 0..self.links {
            tx += s[1 + k].sin() * self.link_length;
            ty -= s[1 + k].cos() * self.link_length;
        }
        (tx, ty)
    }

    pub fn value_generic<T: Real>(&self, s: &[T]) -> T {
        let (tx, ty) = self.tip(s);
        let dx = tx - self.target[0];
        let dy = ty - self.target[1];
        (dx * dx + dy * dy).sqrt()
    }
}

impl TerminalLoss for TipDistance {
    fn value_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        let (tx, ty) = self.tip(s);
        let (dx, dy) = (tx - self.target[0], ty - self.target[1]);
        let dist = (dx * dx + dy * dy).sqrt();
        let mut g = vec![0.0; s.len()];
        if dist > 0.0 {
            g[0] = dx / dist;
            for k in 0..self.links {
                let (sin, cos) = s[1 + k].sin_cos();
                g[1 + k] = (dx * cos + dy * sin) * self.link_length / dist;
            }
        }
        (dist, g)
    }
}

/// Gaussian elimination with partial pivoting (pivots chosen on primal
/// values).
fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Vec<T> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                let delta = a[col][k] * factor;
                a[row][k] -= delta;
            }
            let delta = b[col] * factor;
            b[row] -= delta;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

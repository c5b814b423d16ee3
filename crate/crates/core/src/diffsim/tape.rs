//! Reverse-mode scalar tape.
//!
//! `Var` values record every operation on a thread-local Wengert list while a
//! [`vjp`] call is active. One sweep backwards over the list yields the
//! vector-Jacobian product for all inputs at once.

use super::Real;
use std::cell::RefCell;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

const CONST: u32 = u32::MAX;

type Node = [(u32, f64); 2];

thread_local! {
    static TAPE: RefCell<Option<Vec<Node>>> = const { RefCell::new(None) };
}

#[derive(Debug, Clone, Copy)]
pub struct Var {
    idx: u32,
    val: f64,
}

impl Var {
    fn push(val: f64, parents: Node) -> Self {
        if parents[0].0 == CONST && parents[1].0 == CONST {
            return Self { idx: CONST, val };
        }
        Self::node(val, parents)
    }

    fn node(val: f64, parents: Node) -> Self {
        TAPE.with(|t| {
            let mut t = t.borrow_mut();
            let nodes = t.as_mut().expect("Var arithmetic outside an active tape");
            nodes.push(parents);
            Self {
                idx: (nodes.len() - 1) as u32,
                val,
            }
        })
    }

    fn unary(self, val: f64, partial: f64) -> Self {
        Self::push(val, [(self.idx, partial), (CONST, 0.0)])
    }

    fn binary(self, o: Self, val: f64, pa: f64, pb: f64) -> Self {
        Self::push(val, [(self.idx, pa), (o.idx, pb)])
    }
}

impl Add for Var {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.binary(o, self.val + o.val, 1.0, 1.0)
    }
}
impl Sub for Var {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.binary(o, self.val - o.val, 1.0, -1.0)
    }
}
impl Mul for Var {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.binary(o, self.val * o.val, o.val, self.val)
    }
}
impl Div for Var {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let v = self.val / o.val;
        self.binary(o, v, 1.0 / o.val, -v / o.val)
    }
}
impl Neg for Var {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}
impl Add<f64> for Var {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        self.unary(self.val + o, 1.0)
    }
}
impl Sub<f64> for Var {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        self.unary(self.val - o, 1.0)
    }
}
impl Mul<f64> for Var {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        self.unary(self.val * o, o)
    }
}
impl Div<f64> for Var {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        self.unary(self.val / o, 1.0 / o)
    }
}
impl AddAssign for Var {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl SubAssign for Var {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl MulAssign for Var {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl Real for Var {
    fn cst(v: f64) -> Self {
        Self { idx: CONST, val: v }
    }
    fn value(self) -> f64 {
        self.val
    }
    fn sqrt(self) -> Self {
        let v = self.val.sqrt();
        self.unary(v, if v > 0.0 { 0.5 / v } else { 0.0 })
    }
    fn sin(self) -> Self {
        self.unary(self.val.sin(), self.val.cos())
    }
    fn cos(self) -> Self {
        self.unary(self.val.cos(), -self.val.sin())
    }
    fn exp(self) -> Self {
        let v = self.val.exp();
        self.unary(v, v)
    }
}

/// Evaluates `f` at `inputs` on a fresh tape and returns its outputs together
/// with `cotangentᵀ · J`, the gradient of `Σ cotangent[k] · out[k]` with
/// respect to every input.
///
/// Not re-entrant: `f` must not call `vjp` itself.
pub fn vjp<F>(inputs: &[f64], cotangent: &[f64], f: F) -> (Vec<f64>, Vec<f64>)
where
    F: FnOnce(&[Var]) -> Vec<Var>,
{
    TAPE.with(|t| {
        let mut t = t.borrow_mut();
        assert!(t.is_none(), "vjp is not re-entrant");
        *t = Some(Vec::with_capacity(inputs.len() * 16));
    });
    let vars: Vec<Var> = inputs
        .iter()
        .map(|&v| Var::node(v, [(CONST, 0.0), (CONST, 0.0)]))
        .collect();
    let outputs = f(&vars);
    let nodes = TAPE.with(|t| t.borrow_mut().take().expect("tape still active"));
    assert_eq!(outputs.len(), cotangent.len(), "one cotangent per output");

    let mut adj = vec![0.0; nodes.len()];
    for (o, &c) in outputs.iter().zip(cotangent) {
        if o.idx != CONST {
            adj[o.idx as usize] += c;
        }
    }
    for i in (0..nodes.len()).rev() {
        let a = adj[i];
        if a == 0.0 {
            continue;
        }
        for &(p, partial) in &nodes[i] {
            if p != CONST {
                adj[p as usize] += a * partial;
            }
        }
    }
    let grads = vars.iter().map(|v| adj[v.idx as usize]).collect();
    (outputs.iter().map(|o| o.val).collect(), grads)
}

/// Scalar convenience over [`vjp`].
pub fn reverse_gradient<F>(inputs: &[f64], f: F) -> (f64, Vec<f64>)
where
    F: FnOnce(&[Var]) -> Var,
{
    let (out, g) = vjp(inputs, &[1.0], |x| vec![f(x)]);
    (out[0], g)
}

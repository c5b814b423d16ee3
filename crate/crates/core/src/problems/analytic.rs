use super::{Evaluation, Problem};
use crate::common::{Bounds, CoreError, Result};
use std::f64::consts::PI;

/// Separable rugged test function on `[0, 1]^d`:
/// `Σ (x−0.7)² + 0.15·sin(14πx)·exp(−2(x−0.4)²)`.
///
/// Every coordinate has several shallow ripples on top of one global basin,
/// so isolated gradient descents stall in whichever ripple they start in.
#[derive(Debug, Clone)]
pub struct SyntheticRugged {
    bounds: Bounds,
}

impl SyntheticRugged {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::Config("synthetic problem needs d ≥ 1".into()));
        }
        Ok(Self { bounds: Bounds::unit(dim) })
    }

    pub fn coordinate(x: f64) -> f64 {
        (x - 0.7).powi(2) + 0.15 * (14.0 * PI * x).sin() * (-2.0 * (x - 0.4).powi(2)).exp()
    }

    pub fn coordinate_derivative(x: f64) -> f64 {
        let envelope = (-2.0 * (x - 0.4).powi(2)).exp();
        let phase = 14.0 * PI * x;
        2.0 * (x - 0.7)
            + 0.15 * envelope * (14.0 * PI * phase.cos() - 4.0 * (x - 0.4) * phase.sin())
    }
}

impl Problem for SyntheticRugged {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn gradient_available(&self) -> bool {
        true
    }

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Evaluation {
        let loss = x.iter().map(|&v| Self::coordinate(v)).sum();
        let gradient =
            with_gradient.then(|| x.iter().map(|&v| Self::coordinate_derivative(v)).collect());
        Evaluation { loss, gradient }
    }
}

/// `|x − c|²` on a cube, minimum at the centre `c` of the box.
#[derive(Debug, Clone)]
pub struct Sphere {
    bounds: Bounds,
    center: Vec<f64>,
}

impl Sphere {
    pub fn new(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        let bounds = Bounds::uniform(dim, lower, upper)?;
        Ok(Self { center: vec![0.5 * (lower + upper); dim], bounds })
    }

    pub fn with_center(bounds: Bounds, center: Vec<f64>) -> Result<Self> {
        if center.len() != bounds.dim() {
            return Err(CoreError::Dimension { expected: bounds.dim(), got: center.len() });
        }
        Ok(Self { bounds, center })
    }
}

impl Problem for Sphere {
    fn name(&self) -> &str {
        "sphere"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn gradient_available(&self) -> bool {
        true
    }

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Evaluation {
        let loss = x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum();
        let gradient =
            with_gradient.then(|| x.iter().zip(&self.center).map(|(a, c)| 2.0 * (a - c)).collect());
        Evaluation { loss, gradient }
    }
}

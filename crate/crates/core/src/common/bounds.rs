use super::{CoreError, ParameterVector, Result};
use log::warn;
use serde::{Deserialize, Serialize};

/// Box constraints of a search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CoreError::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(CoreError::InvalidBounds {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` in every one of `dim` coordinates.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&p, (&lo, &hi))| p >= lo && p <= hi)
    }

    pub fn clamp(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&p, (&lo, &hi))| p.clamp(lo, hi))
            .collect()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(CoreError::Dimension {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Maps `point` affinely onto the unit cube. Points outside the box are
/// clamped first.
pub fn normalize(point: &[f64], bounds: &Bounds) -> Result<ParameterVector> {
    bounds.check_dim(point.len())?;
    if !bounds.contains(point) {
        warn!("normalize: point outside bounds, clamping");
    }
    let unit = point
        .iter()
        .enumerate()
        .map(|(i, &p)| (p.clamp(bounds.lower[i], bounds.upper[i]) - bounds.lower[i]) / bounds.width(i))
        .collect();
    ParameterVector::new(unit)
}

/// Inverse of [`normalize`]. Coordinates outside `[0, 1]` are clamped with a
/// warning.
pub fn denormalize(unit: &[f64], bounds: &Bounds) -> Result<ParameterVector> {
    bounds.check_dim(unit.len())?;
    if unit.iter().any(|u| !(0.0..=1.0).contains(u)) {
        warn!("denormalize: point outside the unit cube, clamping");
    }
    let point = unit
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let u = u.clamp(0.0, 1.0);
            // Exact at both corners.
            if u == 1.0 {
                bounds.upper[i]
            } else {
                bounds.lower[i] + u * bounds.width(i)
            }
        })
        .collect();
    ParameterVector::new(point)
}

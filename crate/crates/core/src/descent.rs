//! Clipped gradient descent with stagnation-based early stopping, and the
//! random-restart baseline built on it.

use crate::common::{CoreError, Evaluator, Phase, Result, Rng};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentConfig {
    /// Step size α in unit-cube coordinates.
    pub learning_rate: f64,
    /// Largest number of evaluations per descent (J).
    pub max_steps: usize,
    /// Stop once the best loss has failed to improve this many times in a
    /// row, plus one.
    pub stagnation_window: usize,
    /// Relative improvement that counts as progress; the absolute threshold
    /// is `max(tol·|best|, 1e-8)`.
    pub stagnation_tolerance: f64,
    /// Gradients longer than this are rescaled to this norm.
    pub clip_norm: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_steps: 25,
            stagnation_window: 3,
            stagnation_tolerance: 1e-6,
            clip_norm: 1.0,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0)
            || self.max_steps == 0
            || self.stagnation_window == 0
            || !(self.stagnation_tolerance >= 0.0)
            || !(self.clip_norm > 0.0)
        {
            return Err(CoreError::Config(format!("invalid descent settings: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxSteps,
    Stagnation,
    Budget,
    NoGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentStep {
    /// Unit-cube point.
    pub point: Vec<f64>,
    pub loss: f64,
    /// Unit-cube gradient.
    pub gradient: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrace {
    pub steps: Vec<DescentStep>,
    pub termination: Termination,
}

impl DescentTrace {
    pub fn last_point(&self) -> Option<&[f64]> {
        self.steps.last().map(|s| s.point.as_slice())
    }

    pub fn best(&self) -> Option<&DescentStep> {
        self.steps.iter().min_by(|a, b| a.loss.total_cmp(&b.loss))
    }
}

/// Rescales `g` to norm `max_norm` if it is longer.
pub fn clip(g: &[f64], max_norm: f64) -> Vec<f64> {
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > max_norm && n.is_finite() {
        g.iter().map(|v| v * max_norm / n).collect()
    } else {
        g.to_vec()
    }
}

/// Descends from the unit-cube point `start`: evaluate loss and gradient,
/// then step `s ← clamp(s − α·clip(∇))`. `phase` tags every evaluation.
pub fn descend(
    eval: &mut Evaluator<'_>,
    start: &[f64],
    config: &DescentConfig,
    phase: Phase,
) -> Result<DescentTrace> {
    config.validate()?;
    if !eval.problem().gradient_available() {
        return Ok(DescentTrace { steps: Vec::new(), termination: Termination::NoGradient });
    }
    let mut s = start.iter().map(|v| v.clamp(0.0, 1.0)).collect::<Vec<_>>();
    let mut steps = Vec::new();
    let mut best = f64::INFINITY;
    let mut stalled = 0usize;
    loop {
        if steps.len() >= config.max_steps {
            return Ok(DescentTrace { steps, termination: Termination::MaxSteps });
        }
        if eval.is_exhausted() {
            return Ok(DescentTrace { steps, termination: Termination::Budget });
        }
        let out = eval.evaluate(&s, true, phase)?;
        let grad_ok = out.gradient.as_ref().is_some_and(|g| g.iter().all(|v| v.is_finite()));
        let improved = if best.is_finite() {
            out.loss < best - (config.stagnation_tolerance * best.abs()).max(1e-8)
        } else {
            out.loss.is_finite()
        };
        if grad_ok && improved {
            stalled = 0;
        } else {
            stalled += 1;
        }
        best = best.min(out.loss);
        let next: Vec<f64> = match (&out.gradient, grad_ok) {
            (Some(g), true) => {
                let g = clip(g, config.clip_norm);
                s.iter().zip(&g).map(|(x, gi)| (x - config.learning_rate * gi).clamp(0.0, 1.0)).collect()
            }
            _ => s.clone(),
        };
        steps.push(DescentStep { point: s, loss: out.loss, gradient: out.gradient });
        if stalled >= config.stagnation_window {
            return Ok(DescentTrace { steps, termination: Termination::Stagnation });
        }
        s = next;
    }
}

/// Repeated descents from uniform random starts until the budget is spent.
/// Returns the number of descents started.
pub fn rand_descents_run(eval: &mut Evaluator<'_>, config: &DescentConfig, rng: &mut Rng) -> Result<usize> {
    config.validate()?;
    if !eval.problem().gradient_available() {
        return Err(CoreError::Config(format!(
            "random descents need gradients; '{}' has none",
            eval.problem().name()
        )));
    }
    let d = eval.dim();
    let mut count = 0;
    while !eval.is_exhausted() {
        let start: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        descend(eval, &start, config, Phase::Descent { trial: 0, descent: count })?;
        count += 1;
    }
    Ok(count)
}

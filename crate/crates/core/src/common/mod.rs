//! Shared domain types: points, bounds, budget accounting, the run log and
//! seeded randomness.

mod bounds;
mod evaluator;

pub use bounds::{denormalize, normalize, Bounds};
pub use evaluator::{Evaluator, UnitEvaluation};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use thiserror::Error;

/// Loss assigned to an episode whose simulation produced a non-finite loss.
pub const FAILED_LOSS: f64 = 1e6;

/// Deterministic generator used everywhere in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid bounds in dimension {index}: lower {lower} must be < upper {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
    #[error("non-finite parameter value at index {0}")]
    NonFinite(usize),
    #[error("evaluation budget of {0} steps exhausted")]
    BudgetExhausted(usize),
    #[error("budget must allow at least one step")]
    EmptyBudget,
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

/// A point in a problem's search space (or in the unit cube, depending on
/// context). Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Deref for ParameterVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Where in an optimizer an evaluation was spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phase {
    /// Uniform sample (random search, BO warm-up, RandDescents has its own tag).
    Random,
    /// A point chosen by the acquisition function of plain BO.
    Acquisition { trial: usize },
    /// A CMA-ES population candidate; `trial` is 0 outside BO-Leap.
    Generation { trial: usize, generation: usize },
    /// A step of a gradient descent; `trial` is 0 outside BO-Leap.
    Descent { trial: usize, descent: usize },
    /// The single gradient evaluation at a recombined CMA-ES mean.
    GradientStep { generation: usize },
}

/// One simulation episode: the point (problem coordinates), its loss and the
/// gradient when it was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub point: ParameterVector,
    pub loss: f64,
    pub gradient: Option<Vec<f64>>,
    pub step_index: usize,
    pub failed: bool,
}

impl EvaluationRecord {
    pub fn grad_norm(&self) -> Option<f64> {
        self.gradient
            .as_ref()
            .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// Step budget; one simulation episode costs exactly one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    max_steps: usize,
    used: usize,
}

impl Budget {
    pub fn new(max_steps: usize) -> Result<Self> {
        if max_steps == 0 {
            return Err(CoreError::EmptyBudget);
        }
        Ok(Self { max_steps, used: 0 })
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.max_steps - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.max_steps
    }

    /// Claims one step, failing once the budget is spent.
    pub fn consume(&mut self) -> Result<usize> {
        if self.is_exhausted() {
            return Err(CoreError::BudgetExhausted(self.max_steps));
        }
        self.used += 1;
        Ok(self.used - 1)
    }
}

/// Appends `record` to `log`, charging one budget step.
pub fn record(
    budget: &mut Budget,
    log: &mut Vec<EvaluationRecord>,
    mut record: EvaluationRecord,
) -> Result<()> {
    record.step_index = budget.consume()?;
    log.push(record);
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonlLine {
    step: usize,
    point: Vec<f64>,
    loss: f64,
    grad_norm: Option<f64>,
}

/// Writes the log as JSONL: `step`, `point`, `loss`, `grad_norm` (null when
/// no gradient was computed).
pub fn write_jsonl<W: Write>(mut out: W, log: &[EvaluationRecord]) -> Result<()> {
    for rec in log {
        let line = JsonlLine {
            step: rec.step_index,
            point: rec.point.as_slice().to_vec(),
            loss: rec.loss,
            grad_norm: rec.grad_norm().filter(|g| g.is_finite()),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Entry read back from a JSONL log.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedStep {
    pub step: usize,
    pub point: Vec<f64>,
    pub loss: f64,
    pub grad_norm: Option<f64>,
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<LoggedStep>> {
    let mut steps = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: JsonlLine = serde_json::from_str(&line)?;
        steps.push(LoggedStep {
            step: l.step,
            point: l.point,
            loss: l.loss,
            grad_norm: l.grad_norm,
        });
    }
    Ok(steps)
}

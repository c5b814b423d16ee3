use super::{
    denormalize, record, Budget, CoreError, EvaluationRecord, Phase, Result, FAILED_LOSS,
};
use crate::problems::Problem;
use log::warn;

/// Loss and gradient as seen by an optimizer: the gradient is taken with
/// respect to unit-cube coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitEvaluation {
    pub loss: f64,
    pub gradient: Option<Vec<f64>>,
}

/// Runs episodes of a problem on behalf of an optimizer, charging the budget
/// and appending to the run log in call order.
pub struct Evaluator<'p> {
    problem: &'p dyn Problem,
    budget: Budget,
    log: Vec<EvaluationRecord>,
    phases: Vec<Phase>,
    units: Vec<Vec<f64>>,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p dyn Problem, max_steps: usize) -> Result<Self> {
        Ok(Self {
            problem,
            budget: Budget::new(max_steps)?,
            log: Vec::with_capacity(max_steps.min(1 << 16)),
            phases: Vec::with_capacity(max_steps.min(1 << 16)),
            units: Vec::with_capacity(max_steps.min(1 << 16)),
        })
    }

    pub fn problem(&self) -> &dyn Problem {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dimension()
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget.remaining()
    }

    pub fn is_exhausted(&self) -> bool {
        self.budget.is_exhausted()
    }

    pub fn log(&self) -> &[EvaluationRecord] {
        &self.log
    }

    /// Evaluates the problem at the unit-cube point `unit` (clamped into the
    /// cube). Fails without evaluating once the budget is spent.
    pub fn evaluate(
        &mut self,
        unit: &[f64],
        with_gradient: bool,
        phase: Phase,
    ) -> Result<UnitEvaluation> {
        if self.budget.is_exhausted() {
            return Err(CoreError::BudgetExhausted(self.budget.max_steps()));
        }
        let bounds = self.problem.bounds();
        let clamped: Vec<f64> = unit.iter().map(|u| u.clamp(0.0, 1.0)).collect();
        let point = denormalize(&clamped, bounds)?;
        let want_grad = with_gradient && self.problem.gradient_available();
        let eval = self.problem.evaluate(&point, want_grad);

        let failed = !eval.loss.is_finite();
        let (loss, gradient) = if failed {
            warn!("{}: simulation failed, recording sentinel loss", self.problem.name());
            (FAILED_LOSS, None)
        } else {
            (eval.loss, if want_grad { eval.gradient } else { None })
        };
        if let Some(g) = &gradient {
            if g.len() != point.len() {
                return Err(CoreError::Dimension {
                    expected: point.len(),
                    got: g.len(),
                });
            }
        }
        let unit_gradient = gradient.as_ref().map(|g| {
            g.iter()
                .enumerate()
                .map(|(i, gi)| gi * bounds.width(i))
                .collect()
        });

        record(
            &mut self.budget,
            &mut self.log,
            EvaluationRecord {
                point,
                loss,
                gradient,
                step_index: 0,
                failed,
            },
        )?;
        self.phases.push(phase);
        self.units.push(clamped);
        Ok(UnitEvaluation {
            loss,
            gradient: unit_gradient,
        })
    }

    /// Unit-cube coordinates of every logged point, in log order.
    pub fn unit_points(&self) -> &[Vec<f64>] {
        &self.units
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn into_parts(self) -> (Vec<EvaluationRecord>, Vec<Phase>) {
        (self.log, self.phases)
    }
}

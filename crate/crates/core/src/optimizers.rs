//! BO-Leap and the baselines it is compared against, behind one
//! [`Optimizer`] interface.

use crate::cmaes::{
    cma_es_run, sample_population, select_best, subset_mean, update_distribution, CmaConfig, CmaConstants,
    CmaEsConfig, PopulationState,
};
use crate::common::{CoreError, EvaluationRecord, Evaluator, Phase, Result, Rng};
use crate::descent::{clip, descend, rand_descents_run, DescentConfig};
use crate::gp::{acquire, fit_hyperparams, subsample_indices, AcquisitionConfig, FitConfig, GpHyperparams, GpModel};
use crate::problems::Problem;
use log::{debug, warn};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Largest dataset the GP is conditioned on.
pub const GP_DATASET_CAP: usize = 1200;
/// Lowest-loss points always kept when the dataset is capped.
pub const GP_KEEP_BEST: usize = 200;

/// Output of one optimizer run.
#[derive(Debug, Clone)]
pub struct OptimizerResult {
    /// Lowest-loss record (earliest on ties).
    pub best: EvaluationRecord,
    pub log: Vec<EvaluationRecord>,
    /// One tag per log entry.
    pub phases: Vec<Phase>,
}

impl OptimizerResult {
    fn from_evaluator(eval: Evaluator<'_>) -> Result<Self> {
        let (log, phases) = eval.into_parts();
        let best = log
            .iter()
            .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.step_index.cmp(&b.step_index)))
            .cloned()
            .ok_or(CoreError::EmptyBudget)?;
        Ok(Self { best, log, phases })
    }

    /// Best loss seen after each step.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.log
            .iter()
            .map(|r| {
                best = best.min(r.loss);
                best
            })
            .collect()
    }

    /// Index of the first step reaching the best loss.
    pub fn steps_to_best(&self) -> usize {
        self.best.step_index
    }
}

pub trait Optimizer {
    fn name(&self) -> &str;

    /// Minimizes `problem` using exactly `budget` episodes (fewer only if the
    /// algorithm cannot continue).
    fn minimize(&self, problem: &dyn Problem, budget: usize, rng: &mut Rng) -> Result<OptimizerResult>;
}

fn uniform(dim: usize, rng: &mut Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// Uniform samples in the unit cube.
#[derive(Debug, Clone, Default)]
pub struct RandomSearch;

impl Optimizer for RandomSearch {
    fn name(&self) -> &str {
        "random"
    }

    fn minimize(&self, problem: &dyn Problem, budget: usize, rng: &mut Rng) -> Result<OptimizerResult> {
        let mut eval = Evaluator::new(problem, budget)?;
        while !eval.is_exhausted() {
            let x = uniform(eval.dim(), rng);
            eval.evaluate(&x, false, Phase::Random)?;
        }
        OptimizerResult::from_evaluator(eval)
    }
}

/// Standard CMA-ES.
#[derive(Debug, Clone, Default)]
pub struct CmaEs {
    pub config: CmaEsConfig,
}

impl Optimizer for CmaEs {
    fn name(&self) -> &str {
        "cma-es"
    }

    fn minimize(&self, problem: &dyn Problem, budget: usize, rng: &mut Rng) -> Result<OptimizerResult> {
        let mut eval = Evaluator::new(problem, budget)?;
        cma_es_run(&mut eval, &self.config, rng, |_, m, _| Ok(m.to_vec()))?;
        OptimizerResult::from_evaluator(eval)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaGradStepConfig {
    pub cma_es: CmaEsConfig,
    /// Step length applied to the clipped gradient at each recombined mean.
    pub learning_rate: f64,
    pub clip_norm: f64,
}

impl Default for CmaGradStepConfig {
    fn default() -> Self {
        Self { cma_es: CmaEsConfig::default(), learning_rate: 0.05, clip_norm: 1.0 }
    }
}

/// CMA-ES whose recombined mean takes one clipped gradient step before the
/// distribution update. The gradient costs one episode per generation; with
/// a zero learning rate it is skipped and the run equals plain CMA-ES.
#[derive(Debug, Clone, Default)]
pub struct CmaGradStep {
    pub config: CmaGradStepConfig,
}

impl Optimizer for CmaGradStep {
    fn name(&self) -> &str {
        "cma-grad-step"
    }

    fn minimize(&self, problem: &dyn Problem, budget: usize, rng: &mut Rng) -> Result<OptimizerResult> {
        let c = &self.config;
        if c.learning_rate > 0.0 && !problem.gradient_available() {
            return Err(CoreError::Config(format!("cma-grad-step needs gradients; '{}' has none", problem.name())));
        }
        let mut eval = Evaluator::new(problem, budget)?;
        cma_es_run(&mut eval, &c.cma_es, rng, |eval, m, generation| {
            if c.learning_rate == 0.0 || eval.is_exhausted() {
                return Ok(m.to_vec());
            }
            let out = eval.evaluate(m, true, Phase::GradientStep { generation })?;
            match out.gradient {
                Some(g) if g.iter().all(|v| v.is_finite()) => {
                    let g = clip(&g, c.clip_norm);
                    Ok(m.iter().zip(&g).map(|(x, gi)| (x - c.learning_rate * gi).clamp(0.0, 1.0)).collect())
                }
                _ => Ok(m.to_vec()),
            }
        })?;
        OptimizerResult::from_evaluator(eval)
    }
}

/// Random restarts of clipped gradient descent.
#[derive(Debug, Clone, Default)]
pub struct RandDescents {
    pub config: DescentConfig,
}

impl Optimizer for RandDescents {
    fn name(&self) -> &str {
        "rand-descents"
    }

    fn minimize(&self, problem: &dyn Problem, budget: usize, rng: &mut Rng) -> Result<OptimizerResult> {
        let mut eval = Evaluator::new(problem, budget)?;
        rand_descents_run(&mut eval, &self.config, rng)?;
        OptimizerResult::from_evaluator(eval)
    }
}

/// GP conditioned on a (capped) dataset with refitted hyperparameters.
fn fit_model(
    points: &[Vec<f64>],
    losses: &[f64],
    warm: Option<&GpHyperparams>,
    fit: &FitConfig,
    rng: &mut Rng,
) -> Result<GpModel> {
    let idx = subsample_indices(losses, GP_DATASET_CAP, GP_KEEP_BEST, rng);
    let pts: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| losses[i]).collect();
    let hyper = fit_hyperparams(&pts, &ys, warm, fit, rng)?;
    debug!("GP hyperparameters {hyper:?}");
    GpModel::fit(pts, ys, hyper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoConfig {
    /// Uniform random evaluations before the first fit.
    pub warmup: usize,
    /// New points between hyperparameter refits.
    pub refit_every: usize,
    pub acquisition: AcquisitionConfig,
    pub fit: FitConfig,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            warmup: 5,
            refit_every: 25,
            acquisition: AcquisitionConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

/// Classic Bayesian optimization: one acquired point per episode.
#[derive(Debug, Clone, Default)]
pub struct Bo {
    pub config: BoConfig,
}

impl Optimizer for Bo {
    fn name(&self) -> &str {
        "bo"
    }

    fn minimize(&self, problem: &dyn Problem, budget: usize, rng: &mut Rng) -> Result<OptimizerResult> {
        let c = &self.config;
        c.acquisition.validate()?;
        let mut eval = Evaluator::new(problem, budget)?;
        let d = eval.dim();
        for _ in 0..c.warmup.max(1) {
            if eval.is_exhausted() {
                break;
            }
            eval.evaluate(&uniform(d, rng), false, Phase::Random)?;
        }
        let mut model: Option<GpModel> = None;
        let mut since_refit = 0;
        let mut trial = 0;
        while !eval.is_exhausted() {
            let n = eval.log().len();
            let needs_refit = model.as_ref().is_none_or(|m| m.len() + 1 > GP_DATASET_CAP) || since_refit >= c.refit_every.max(1);
            if needs_refit {
                let losses: Vec<f64> = eval.log().iter().map(|r| r.loss).collect();
                let warm = model.as_ref().map(|m| m.hyperparams().clone());
                let mut fitted = fit_model(eval.unit_points(), &losses, warm.as_ref(), &c.fit, rng)?;
                fitted.cache_inverse_factor();
                model = Some(fitted);
                since_refit = 0;
            } else if let Some(m) = model.as_mut() {
                let r = &eval.log()[n - 1];
                m.append(eval.unit_points()[n - 1].clone(), r.loss)?;
            }
            let m = model.as_ref().expect("model fitted");
            let x = acquire(m, &c.acquisition, rng).unwrap_or_else(|e| {
                warn!("acquisition failed ({e}); sampling uniformly");
                uniform(d, rng)
            });
            eval.evaluate(&x, false, Phase::Acquisition { trial })?;
            trial += 1;
            since_refit += 1;
        }
        OptimizerResult::from_evaluator(eval)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoLeapConfig {
    /// Episodes spent in each semi-local phase.
    pub local_steps: usize,
    /// Initial population step size in unit-cube coordinates.
    pub sigma_init_scale: f64,
    pub cma: CmaConfig,
    pub descent: DescentConfig,
    pub acquisition: AcquisitionConfig,
    pub fit: FitConfig,
}

impl Default for BoLeapConfig {
    fn default() -> Self {
        Self {
            local_steps: 100,
            sigma_init_scale: 0.15,
            cma: CmaConfig::default(),
            descent: DescentConfig::default(),
            acquisition: AcquisitionConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

/// Bayesian optimization over start points of semi-local phases. Each phase
/// runs CMA-ES generations whose mean is moved by a gradient descent from
/// the mean of the best candidates.
#[derive(Debug, Clone, Default)]
pub struct BoLeap {
    pub config: BoLeapConfig,
}

impl BoLeap {
    pub fn new(config: BoLeapConfig) -> Self {
        Self { config }
    }
}

impl Optimizer for BoLeap {
    fn name(&self) -> &str {
        "bo-leap"
    }

    fn minimize(&self, problem: &dyn Problem, budget: usize, rng: &mut Rng) -> Result<OptimizerResult> {
        let c = &self.config;
        c.cma.validate()?;
        c.descent.validate()?;
        c.acquisition.validate()?;
        if c.local_steps == 0 || !(c.sigma_init_scale > 0.0) {
            return Err(CoreError::Config("bo-leap needs local_steps ≥ 1 and a positive sigma_init_scale".into()));
        }
        let mut eval = Evaluator::new(problem, budget)?;
        let d = eval.dim();
        let consts = CmaConstants::new(d, &c.cma);
        let gradients = problem.gradient_available();
        let mut hyper: Option<GpHyperparams> = None;
        let mut trial = 0;
        while !eval.is_exhausted() {
            let start = if eval.log().len() < 2 {
                uniform(d, rng)
            } else {
                let losses: Vec<f64> = eval.log().iter().map(|r| r.loss).collect();
                let picked = fit_model(eval.unit_points(), &losses, hyper.as_ref(), &c.fit, rng)
                    .and_then(|m| {
                        hyper = Some(m.hyperparams().clone());
                        acquire(&m, &c.acquisition, rng)
                    });
                picked.unwrap_or_else(|e| {
                    warn!("acquisition failed ({e}); starting the phase at a uniform point");
                    uniform(d, rng)
                })
            };
            let mut state = PopulationState::new(start, c.sigma_init_scale);
            let phase_start = eval.budget().used();
            let mut generation = 0;
            while eval.budget().used() - phase_start < c.local_steps && !eval.is_exhausted() {
                let cands = sample_population(&state, c.cma.population_size, rng);
                let mut losses = Vec::with_capacity(cands.len());
                for x in &cands {
                    if eval.is_exhausted() {
                        break;
                    }
                    losses.push(eval.evaluate(x, false, Phase::Generation { trial, generation })?.loss);
                }
                if losses.len() < cands.len() {
                    break;
                }
                let ranked = select_best(&losses, c.cma.parent_count);
                let best: Vec<&[f64]> = ranked.iter().map(|&i| cands[i].as_slice()).collect();
                let s1 = subset_mean(&best);
                let new_mean = if gradients {
                    let trace = descend(&mut eval, &s1, &c.descent, Phase::Descent { trial, descent: generation })?;
                    trace.last_point().map(<[f64]>::to_vec).unwrap_or(s1)
                } else {
                    s1
                };
                state = update_distribution(&state, &new_mean, &best, &consts);
                generation += 1;
            }
            trial += 1;
        }
        OptimizerResult::from_evaluator(eval)
    }
}

/// Names accepted by [`by_name`].
pub const REGISTRY: &[&str] = &["bo-leap", "random", "cma-es", "rand-descents", "bo", "cma-grad-step"];

/// Settings for every registered optimizer; each reads its own section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub bo_leap: BoLeapConfig,
    pub cma_es: CmaEsConfig,
    pub cma_grad_step: CmaGradStepConfig,
    pub rand_descents: DescentConfig,
    pub bo: BoConfig,
}

pub fn by_name(name: &str, options: &OptimizerOptions) -> Result<Box<dyn Optimizer>> {
    Ok(match name {
        "bo-leap" => Box::new(BoLeap::new(options.bo_leap.clone())),
        "random" => Box::new(RandomSearch),
        "cma-es" => Box::new(CmaEs { config: options.cma_es.clone() }),
        "rand-descents" => Box::new(RandDescents { config: options.rand_descents.clone() }),
        "bo" => Box::new(Bo { config: options.bo.clone() }),
        "cma-grad-step" => Box::new(CmaGradStep { config: options.cma_grad_step.clone() }),
        other => {
            return Err(CoreError::Config(format!(
                "unknown optimizer '{other}'; available: {}",
                REGISTRY.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::seeded_rng;
    use crate::problems::{Sphere, SyntheticRugged};

    #[test]
    fn random_search_budget_one() {
        let p = Sphere::new(2, -1.0, 1.0).unwrap();
        let r = RandomSearch.minimize(&p, 1, &mut seeded_rng(0)).unwrap();
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.best, r.log[0]);
    }

    #[test]
    fn bo_leap_phases_and_budget() {
        let p = SyntheticRugged::new(2).unwrap();
        let r = BoLeap::default().minimize(&p, 1000, &mut seeded_rng(1)).unwrap();
        assert_eq!(r.log.len(), 1000);
        assert_eq!(r.phases.len(), 1000);
        let trials: std::collections::BTreeSet<usize> = r
            .phases
            .iter()
            .map(|ph| match ph {
                Phase::Generation { trial, .. } | Phase::Descent { trial, .. } => *trial,
                other => panic!("unexpected phase {other:?}"),
            })
            .collect();
        assert!((9..=11).contains(&trials.len()), "{} trials", trials.len());
        assert!(r.phases.iter().any(|p| matches!(p, Phase::Descent { .. })));
        assert!(r.best_so_far().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_free_bo_leap_has_no_descents() {
        struct NoGrad(SyntheticRugged);
        impl Problem for NoGrad {
            fn name(&self) -> &str {
                "no-grad"
            }
            fn bounds(&self) -> &crate::common::Bounds {
                self.0.bounds()
            }
            fn gradient_available(&self) -> bool {
                false
            }
            fn evaluate(&self, x: &[f64], _: bool) -> crate::problems::Evaluation {
                crate::problems::Evaluation::loss_only(self.0.evaluate(x, false).loss)
            }
        }
        let p = NoGrad(SyntheticRugged::new(3).unwrap());
        let r = BoLeap::default().minimize(&p, 250, &mut seeded_rng(2)).unwrap();
        assert_eq!(r.log.len(), 250);
        assert!(r.phases.iter().all(|p| matches!(p, Phase::Generation { .. })));
        assert!(r.log.iter().all(|rec| rec.gradient.is_none()));
    }

    #[test]
    fn zero_rate_grad_step_is_cma_es() {
        let p = SyntheticRugged::new(3).unwrap();
        let a = CmaEs::default().minimize(&p, 200, &mut seeded_rng(5)).unwrap();
        let cfg = CmaGradStepConfig { learning_rate: 0.0, ..Default::default() };
        let b = CmaGradStep { config: cfg }.minimize(&p, 200, &mut seeded_rng(5)).unwrap();
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn bo_solves_1d_quadratic() {
        let p = Sphere::with_center(crate::common::Bounds::uniform(1, -1.0, 1.0).unwrap(), vec![0.3]).unwrap();
        let r = Bo::default().minimize(&p, 30, &mut seeded_rng(3)).unwrap();
        assert_eq!(r.log.len(), 30);
        assert!(r.best.loss < 1e-2, "{}", r.best.loss);
        assert!(r.phases[..5].iter().all(|p| *p == Phase::Random));
    }

    #[test]
    fn registry_rejects_unknown() {
        assert!(by_name("simulated-annealing", &OptimizerOptions::default()).is_err());
        for n in REGISTRY {
            assert_eq!(by_name(n, &OptimizerOptions::default()).unwrap().name(), *n);
        }
    }
}

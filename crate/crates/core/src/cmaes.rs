//! CMA-ES sampling distribution: population sampling, truncation selection
//! and the cumulative step-size and covariance updates with the standard
//! tutorial constants.
//!
//! The update takes the new mean as an argument so callers can move the
//! mean by other means (a gradient descent, say) and still adapt σ and C
//! from the realized displacement.

use crate::common::{CoreError, Evaluator, Phase, Result, Rng};
use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub const SIGMA_MIN: f64 = 1e-8;
pub const SIGMA_MAX: f64 = 1e4;
const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaConfig {
    /// Candidates per generation (λ, K).
    pub population_size: usize,
    /// Parents used for recombination (μ).
    pub parent_count: usize,
}

impl Default for CmaConfig {
    fn default() -> Self {
        Self { population_size: 10, parent_count: 5 }
    }
}

impl CmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 || self.parent_count == 0 || self.parent_count > self.population_size {
            return Err(CoreError::Config(format!(
                "need 1 ≤ parent_count ≤ population_size, got {} and {}",
                self.parent_count, self.population_size
            )));
        }
        Ok(())
    }

    /// Log-rank weights `ln(μ + ½) − ln i`, normalized to sum to one.
    pub fn weights(&self) -> Vec<f64> {
        let mu = self.parent_count as f64;
        let raw: Vec<f64> = (1..=self.parent_count).map(|i| (mu + 0.5).ln() - (i as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|w| w / sum).collect()
    }
}

/// Learning rates and damping for dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaConstants {
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// E‖N(0, I)‖.
    pub chi_n: f64,
}

impl CmaConstants {
    pub fn new(dim: usize, config: &CmaConfig) -> Self {
        let d = dim as f64;
        let weights = config.weights();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (d + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d);
        let c_1 = 2.0 / ((d + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0).powi(2) + mu_eff));
        let chi_n = d.sqrt() * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));
        Self { weights, mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu, chi_n }
    }
}

/// Search distribution `N(mean, σ² C)` plus evolution paths.
#[derive(Debug, Clone)]
pub struct PopulationState {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub p_sigma: Vec<f64>,
    pub p_c: Vec<f64>,
    pub generation: usize,
    /// Eigenvectors of `cov` (columns).
    basis: DMatrix<f64>,
    /// Square roots of the (floored) eigenvalues of `cov`.
    axis: DVector<f64>,
}

impl PopulationState {
    /// Isotropic start: `C = I`, zero paths.
    pub fn new(mean: Vec<f64>, sigma: f64) -> Self {
        let d = mean.len();
        Self {
            sigma,
            cov: DMatrix::identity(d, d),
            p_sigma: vec![0.0; d],
            p_c: vec![0.0; d],
            generation: 0,
            basis: DMatrix::identity(d, d),
            axis: DVector::from_element(d, 1.0),
            mean,
        }
    }

    /// Builds a state from explicit parts.
    pub fn from_parts(mean: Vec<f64>, sigma: f64, cov: DMatrix<f64>, p_sigma: Vec<f64>, p_c: Vec<f64>, generation: usize) -> Self {
        let mut s = Self::new(mean, sigma);
        s.cov = cov;
        s.p_sigma = p_sigma;
        s.p_c = p_c;
        s.generation = generation;
        s.refresh_eigen();
        s
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn refresh_eigen(&mut self) {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        if eig.eigenvalues.iter().any(|&l| !(l > EIGEN_FLOOR)) {
            warn!("covariance lost positive definiteness; clamping eigenvalues at {EIGEN_FLOOR:e}");
        }
        let vals = eig.eigenvalues.map(|l| if l > EIGEN_FLOOR { l } else { EIGEN_FLOOR });
        self.basis = eig.eigenvectors;
        self.axis = vals.map(f64::sqrt);
    }

    /// `C^{-1/2} v`.
    fn inv_sqrt_times(&self, v: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(v);
        let z = self.basis.transpose() * v;
        let z = z.component_div(&self.axis);
        &self.basis * z
    }
}

/// `K` draws from `N(mean, σ² C)`, clamped into the unit cube.
pub fn sample_population(state: &PopulationState, k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let d = state.dim();
    (0..k)
        .map(|_| {
            let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
            let y = &state.basis * z.component_mul(&state.axis);
            state
                .mean
                .iter()
                .zip(y.iter())
                .map(|(m, yi)| (m + state.sigma * yi).clamp(0.0, 1.0))
                .collect()
        })
        .collect()
}

/// Indices of the `count` smallest losses, ascending; ties go to the lower
/// index.
pub fn select_best(losses: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..losses.len()).collect();
    idx.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// Unweighted mean of a non-empty set of points.
pub fn subset_mean(points: &[&[f64]]) -> Vec<f64> {
    assert!(!points.is_empty(), "mean of an empty subset");
    let n = points.len() as f64;
    let mut m = vec![0.0; points[0].len()];
    for p in points {
        for (mi, pi) in m.iter_mut().zip(p.iter()) {
            *mi += pi;
        }
    }
    m.iter().map(|v| v / n).collect()
}

/// `Σ w_i x_i` over the ranked parents.
pub fn weighted_mean(points: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; points[0].len()];
    for (p, w) in points.iter().zip(weights) {
        for (mi, pi) in m.iter_mut().zip(p.iter()) {
            *mi += w * pi;
        }
    }
    m
}

/// One generation of path cumulation, step-size adaptation and rank-one plus
/// rank-μ covariance update. `best` holds the ranked parents (best first)
/// and must not be longer than the weight vector.
pub fn update_distribution(
    state: &PopulationState,
    new_mean: &[f64],
    best: &[&[f64]],
    consts: &CmaConstants,
) -> PopulationState {
    let d = state.dim();
    let df = d as f64;
    let sigma = state.sigma;
    let y_w: Vec<f64> = new_mean.iter().zip(&state.mean).map(|(a, b)| (a - b) / sigma).collect();

    let cs = consts.c_sigma;
    let whitened = state.inv_sqrt_times(&y_w);
    let ks = (cs * (2.0 - cs) * consts.mu_eff).sqrt();
    let p_sigma: Vec<f64> = state.p_sigma.iter().zip(whitened.iter()).map(|(p, w)| (1.0 - cs) * p + ks * w).collect();
    let ps_norm = p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();

    let g = (state.generation + 1) as f64;
    let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * g)).sqrt() < (1.4 + 2.0 / (df + 1.0)) * consts.chi_n;
    let h = if h_sigma { 1.0 } else { 0.0 };

    let cc = consts.c_c;
    let kc = h * (cc * (2.0 - cc) * consts.mu_eff).sqrt();
    let p_c: Vec<f64> = state.p_c.iter().zip(&y_w).map(|(p, y)| (1.0 - cc) * p + kc * y).collect();

    let (c1, cmu) = (consts.c_1, consts.c_mu);
    let delta = (1.0 - h) * cc * (2.0 - cc);
    let pc = DVector::from_column_slice(&p_c);
    let mut cov = &state.cov * (1.0 + c1 * delta - c1 - cmu) + (&pc * pc.transpose()) * c1;
    for (x, w) in best.iter().zip(&consts.weights) {
        let y = DVector::from_iterator(d, x.iter().zip(&state.mean).map(|(a, b)| (a - b) / sigma));
        cov += (&y * y.transpose()) * (cmu * w);
    }
    cov = (&cov + cov.transpose()) * 0.5;

    let mut new_sigma = sigma * ((cs / consts.d_sigma) * (ps_norm / consts.chi_n - 1.0)).exp();
    if !(SIGMA_MIN..=SIGMA_MAX).contains(&new_sigma) {
        warn!("step size {new_sigma:e} clamped into [{SIGMA_MIN:e}, {SIGMA_MAX:e}]");
        new_sigma = if new_sigma.is_nan() { SIGMA_MIN } else { new_sigma.clamp(SIGMA_MIN, SIGMA_MAX) };
    }

    let mut next = PopulationState {
        mean: new_mean.to_vec(),
        sigma: new_sigma,
        cov,
        p_sigma,
        p_c,
        generation: state.generation + 1,
        basis: state.basis.clone(),
        axis: state.axis.clone(),
    };
    next.refresh_eigen();
    next
}

/// Settings of the standalone CMA-ES baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaEsConfig {
    pub cma: CmaConfig,
    /// Initial step size in unit-cube coordinates.
    pub sigma0: f64,
}

impl Default for CmaEsConfig {
    fn default() -> Self {
        Self { cma: CmaConfig::default(), sigma0: 0.3 }
    }
}

/// Generational CMA-ES with weighted recombination from a uniform random
/// start, until the budget runs out. `mean_hook` may move each recombined
/// mean before the update (it receives the generation index).
pub fn cma_es_run<F>(eval: &mut Evaluator<'_>, config: &CmaEsConfig, rng: &mut Rng, mut mean_hook: F) -> Result<()>
where
    F: FnMut(&mut Evaluator<'_>, &[f64], usize) -> Result<Vec<f64>>,
{
    config.cma.validate()?;
    let d = eval.dim();
    let consts = CmaConstants::new(d, &config.cma);
    let start: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let mut state = PopulationState::new(start, config.sigma0);
    while !eval.is_exhausted() {
        let gen = state.generation;
        let cands = sample_population(&state, config.cma.population_size, rng);
        let mut losses = Vec::with_capacity(cands.len());
        for c in &cands {
            if eval.is_exhausted() {
                return Ok(());
            }
            losses.push(eval.evaluate(c, false, Phase::Generation { trial: 0, generation: gen })?.loss);
        }
        let ranked = select_best(&losses, config.cma.parent_count);
        let best: Vec<&[f64]> = ranked.iter().map(|&i| cands[i].as_slice()).collect();
        let m = weighted_mean(&best, &consts.weights);
        let m = mean_hook(eval, &m, gen)?;
        state = update_distribution(&state, &m, &best, &consts);
    }
    Ok(())
}

//! Gaussian-process surrogate on the unit cube: squared-exponential ARD
//! kernel, exact posterior through a Cholesky factor, marginal-likelihood
//! hyperparameter fitting and lower-confidence-bound acquisition.
//!
//! Losses are standardized (zero mean, unit spread) before fitting, so the
//! hyperparameters live in standardized output space and the prior mean is
//! the mean observed loss.

use crate::common::{CoreError, Result, Rng};
use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Kernel hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
    pub noise_variance: f64,
}

impl GpHyperparams {
    /// `ℓ = 0.5` per dimension, `σ_k² = 1`, `σ_n² = 1e-4`.
    pub fn default_for(dim: usize) -> Self {
        Self {
            signal_variance: 1.0,
            length_scales: vec![0.5; dim],
            noise_variance: 1e-4,
        }
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.signal_variance) || !ok(self.noise_variance) || !self.length_scales.iter().all(|&l| ok(l)) {
            return Err(CoreError::Config(format!("GP hyperparameters must be positive: {self:?}")));
        }
        Ok(())
    }

    #[inline]
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.length_scales) {
            let d = (x - y) / l;
            r2 += d * d;
        }
        self.signal_variance * (-0.5 * r2).exp()
    }
}

/// Squared-exponential ARD kernel `σ_k² exp(−½ Σ (a_d − b_d)² / ℓ_d²)`.
pub fn kernel(a: &[f64], b: &[f64], hyper: &GpHyperparams) -> Result<f64> {
    hyper.validate()?;
    if a.len() != b.len() || a.len() != hyper.dim() {
        return Err(CoreError::Dimension { expected: hyper.dim(), got: a.len().max(b.len()) });
    }
    Ok(hyper.eval(a, b))
}

/// Mean and spread used to standardize losses. The spread is 1 when fewer
/// than two losses are given or they are (numerically) constant.
fn standardization(y: &[f64]) -> (f64, f64) {
    if y.is_empty() {
        return (0.0, 1.0);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    if y.len() < 2 {
        return (mean, 1.0);
    }
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd < 1e-12 { 1.0 } else { sd })
}

fn gram(points: &[Vec<f64>], hyper: &GpHyperparams) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = hyper.eval(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += hyper.noise_variance;
    }
    k
}

const BLOCK: usize = 64;

/// Blocked right-looking Cholesky factorization; `None` if `a` is not
/// positive definite. Same factor as the unblocked algorithm up to rounding.
pub fn cholesky_blocked(mut a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if n <= 2 * BLOCK {
        return a.cholesky().map(|c| c.unpack());
    }
    let mut k = 0;
    while k < n {
        let b = BLOCK.min(n - k);
        let l11 = a.view((k, k), (b, b)).clone_owned().cholesky()?.unpack();
        a.view_mut((k, k), (b, b)).copy_from(&l11);
        let m = n - k - b;
        if m > 0 {
            // Panel: L21 = A21 L11⁻ᵀ, kept transposed as P = L11⁻¹ A21ᵀ.
            let l11_inv = l11.solve_lower_triangular(&DMatrix::identity(b, b))?;
            let p = &l11_inv * a.view((k + b, k), (m, b)).transpose();
            let l21 = p.transpose();
            a.view_mut((k + b, k), (m, b)).copy_from(&l21);
            a.view_mut((k + b, k + b), (m, m)).gemm(-1.0, &l21, &p, 1.0);
        }
        k += b;
    }
    a.fill_upper_triangle(0.0, 1);
    Some(a)
}

/// Inverse of a lower-triangular matrix by recursive 2×2 blocking.
pub fn lower_triangular_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    if n <= 2 * BLOCK {
        return l.solve_lower_triangular(&DMatrix::identity(n, n));
    }
    let h = n / 2;
    let a_inv = lower_triangular_inverse(&l.view((0, 0), (h, h)).clone_owned())?;
    let c_inv = lower_triangular_inverse(&l.view((h, h), (n - h, n - h)).clone_owned())?;
    let ba = l.view((h, 0), (n - h, h)) * &a_inv;
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (h, h)).copy_from(&a_inv);
    out.view_mut((h, h), (n - h, n - h)).copy_from(&c_inv);
    out.view_mut((h, 0), (n - h, h)).copy_from(&(-(&c_inv * ba)));
    Some(out)
}

/// Lower Cholesky factor of `k`, escalating diagonal jitter on failure.
/// Returns the factor and the jitter that was needed.
fn cholesky_with_jitter(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(c) = cholesky_blocked(k.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = cholesky_blocked(kj) {
            debug!("cholesky needed jitter {jitter:e}");
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(CoreError::Numerical("kernel matrix not positive definite even with jitter 1e-4".into()))
}

/// Exact GP posterior over a fixed dataset.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: GpHyperparams,
    points: Vec<Vec<f64>>,
    losses: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    /// Lower Cholesky factor of `K + (σ_n² + jitter) I`.
    chol: DMatrix<f64>,
    jitter: f64,
    /// `(K + σ_n² I)⁻¹ y_std`.
    alpha: DVector<f64>,
    /// Inverse of `chol`, kept only after [`GpModel::cache_inverse_factor`].
    chol_inv: Option<DMatrix<f64>>,
}

impl GpModel {
    /// The prior: no data.
    pub fn prior(hyper: GpHyperparams) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            hyper,
            points: Vec::new(),
            losses: Vec::new(),
            y_mean: 0.0,
            y_scale: 1.0,
            chol: DMatrix::zeros(0, 0),
            jitter: 0.0,
            alpha: DVector::zeros(0),
            chol_inv: None,
        })
    }

    /// Conditions on `(points, losses)` with fixed hyperparameters.
    pub fn fit(points: Vec<Vec<f64>>, losses: Vec<f64>, hyper: GpHyperparams) -> Result<Self> {
        hyper.validate()?;
        if points.len() != losses.len() {
            return Err(CoreError::Dimension { expected: points.len(), got: losses.len() });
        }
        if let Some(p) = points.iter().find(|p| p.len() != hyper.dim()) {
            return Err(CoreError::Dimension { expected: hyper.dim(), got: p.len() });
        }
        let (chol, jitter) = cholesky_with_jitter(&gram(&points, &hyper))?;
        let mut model = Self {
            hyper,
            points,
            losses,
            y_mean: 0.0,
            y_scale: 1.0,
            chol,
            jitter,
            alpha: DVector::zeros(0),
            chol_inv: None,
        };
        model.refresh_alpha();
        Ok(model)
    }

    fn refresh_alpha(&mut self) {
        let (m, s) = standardization(&self.losses);
        self.y_mean = m;
        self.y_scale = s;
        let y = DVector::from_iterator(self.losses.len(), self.losses.iter().map(|v| (v - m) / s));
        self.alpha = cholesky_solve(&self.chol, &y);
    }

    /// Adds one observation by extending the Cholesky factor, keeping the
    /// hyperparameters. Falls back to a full refactorization if the new
    /// pivot is not positive.
    pub fn append(&mut self, point: Vec<f64>, loss: f64) -> Result<()> {
        if point.len() != self.hyper.dim() {
            return Err(CoreError::Dimension { expected: self.hyper.dim(), got: point.len() });
        }
        let n = self.points.len();
        let k = DVector::from_iterator(n, self.points.iter().map(|p| self.hyper.eval(p, &point)));
        let kss = self.hyper.signal_variance + self.hyper.noise_variance + self.jitter;
        let l = self.chol.solve_lower_triangular(&k).unwrap_or_else(|| DVector::zeros(n));
        let pivot = kss - l.dot(&l);
        self.points.push(point);
        self.losses.push(loss);
        if pivot > 0.0 && pivot.is_finite() {
            let mut grown = DMatrix::zeros(n + 1, n + 1);
            grown.view_mut((0, 0), (n, n)).copy_from(&self.chol);
            for j in 0..n {
                grown[(n, j)] = l[j];
            }
            let diag = pivot.sqrt();
            grown[(n, n)] = diag;
            self.chol = grown;
            if let Some(inv) = self.chol_inv.take() {
                // Last row of the inverse: −(lᵀ L⁻¹)/d, then 1/d.
                let row = inv.tr_mul(&l);
                let mut next = DMatrix::zeros(n + 1, n + 1);
                next.view_mut((0, 0), (n, n)).copy_from(&inv);
                for j in 0..n {
                    next[(n, j)] = -row[j] / diag;
                }
                next[(n, n)] = 1.0 / diag;
                self.chol_inv = Some(next);
            }
        } else {
            let (chol, jitter) = cholesky_with_jitter(&gram(&self.points, &self.hyper))?;
            self.chol = chol;
            self.jitter = jitter;
            if self.chol_inv.is_some() {
                self.chol_inv = None;
                self.cache_inverse_factor();
            }
        }
        self.refresh_alpha();
        Ok(())
    }

    /// Keeps the inverse Cholesky factor so batched posterior queries become
    /// one matrix product. Worth it when many acquisitions follow one fit.
    pub fn cache_inverse_factor(&mut self) {
        if self.chol_inv.is_none() {
            self.chol_inv = lower_triangular_inverse(&self.chol);
        }
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// `(mean, scale)` of the loss standardization.
    pub fn output_standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_scale)
    }

    /// Jitter added to the diagonal beyond the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and variance in standardized output units.
    pub fn posterior_standardized(&self, query: &[f64]) -> (f64, f64) {
        let prior = self.hyper.signal_variance;
        if self.points.is_empty() {
            return (0.0, prior);
        }
        let n = self.points.len();
        let k = DVector::from_iterator(n, self.points.iter().map(|p| self.hyper.eval(p, query)));
        let mean = k.dot(&self.alpha);
        let v = self.chol.solve_lower_triangular(&k).unwrap_or_else(|| DVector::zeros(n));
        (mean, (prior - v.dot(&v)).max(0.0))
    }

    /// Posterior mean and variance of the loss.
    pub fn posterior(&self, query: &[f64]) -> (f64, f64) {
        let (m, v) = self.posterior_standardized(query);
        (self.y_mean + self.y_scale * m, self.y_scale * self.y_scale * v)
    }

    /// Standardized posterior means and variances for many queries at once.
    pub fn posterior_batch_standardized(&self, queries: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let prior = self.hyper.signal_variance;
        let n = self.points.len();
        if n == 0 {
            return (vec![0.0; queries.len()], vec![prior; queries.len()]);
        }
        let mut ks = DMatrix::zeros(n, queries.len());
        for (c, q) in queries.iter().enumerate() {
            for (r, p) in self.points.iter().enumerate() {
                ks[(r, c)] = self.hyper.eval(p, q);
            }
        }
        let means = (ks.transpose() * &self.alpha).iter().copied().collect();
        if let Some(inv) = &self.chol_inv {
            let v = inv * &ks;
            let vars = v.column_iter().map(|col| (prior - col.norm_squared()).max(0.0)).collect();
            return (means, vars);
        }
        if !self.chol.solve_lower_triangular_mut(&mut ks) {
            warn!("triangular solve failed; reporting prior variance");
            return (means, vec![prior; queries.len()]);
        }
        let vars = ks.column_iter().map(|col| (prior - col.norm_squared()).max(0.0)).collect();
        (means, vars)
    }

    /// Log marginal likelihood of the standardized losses.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.points.len();
        let y = DVector::from_iterator(n, self.losses.iter().map(|v| (v - self.y_mean) / self.y_scale));
        let log_det: f64 = (0..n).map(|i| self.chol[(i, i)].ln()).sum();
        -0.5 * y.dot(&self.alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let z = l.solve_lower_triangular(b).unwrap_or_else(|| DVector::zeros(b.len()));
    l.transpose().solve_upper_triangular(&z).unwrap_or_else(|| DVector::zeros(b.len()))
}

/// Box constraints for hyperparameter fitting, applied in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub signal_variance: [f64; 2],
    pub length_scale: [f64; 2],
    pub noise_variance: [f64; 2],
    /// L-BFGS iteration cap.
    pub max_iterations: usize,
    /// Largest number of points used for fitting; larger datasets are
    /// subsampled (the lowest losses plus a random remainder).
    pub max_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            signal_variance: [1e-6, 1e2],
            length_scale: [1e-3, 1e2],
            noise_variance: [1e-8, 10.0],
            max_iterations: 50,
            max_points: 200,
        }
    }
}

impl FitConfig {
    fn boxes(&self, dim: usize) -> Vec<(f64, f64)> {
        let log = |b: [f64; 2]| (b[0].ln(), b[1].ln());
        let mut v = vec![log(self.signal_variance)];
        v.extend(std::iter::repeat_n(log(self.length_scale), dim));
        v.push(log(self.noise_variance));
        v
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Unconstrained coordinates ↔ hyperparameters through a sigmoid onto each
/// log-space box.
struct Transform {
    boxes: Vec<(f64, f64)>,
}

impl Transform {
    fn decode(&self, z: &[f64]) -> GpHyperparams {
        let logs: Vec<f64> = z.iter().zip(&self.boxes).map(|(&z, &(lo, hi))| lo + (hi - lo) * sigmoid(z)).collect();
        let d = logs.len() - 2;
        GpHyperparams {
            signal_variance: logs[0].exp(),
            length_scales: logs[1..=d].iter().map(|l| l.exp()).collect(),
            noise_variance: logs[d + 1].exp(),
        }
    }

    fn encode(&self, h: &GpHyperparams) -> Vec<f64> {
        let mut logs = vec![h.signal_variance.ln()];
        logs.extend(h.length_scales.iter().map(|l| l.ln()));
        logs.push(h.noise_variance.ln());
        logs.iter()
            .zip(&self.boxes)
            .map(|(&l, &(lo, hi))| {
                let u = ((l - lo) / (hi - lo)).clamp(1e-6, 1.0 - 1e-6);
                (u / (1.0 - u)).ln()
            })
            .collect()
    }

    /// d(log p)/dz.
    fn jacobian(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.boxes)
            .map(|(&z, &(lo, hi))| {
                let s = sigmoid(z);
                (hi - lo) * s * (1.0 - s)
            })
            .collect()
    }
}

/// Log marginal likelihood and its gradient with respect to
/// `(log σ_k², log ℓ_1.., log σ_n²)`.
pub fn lml_and_gradient(points: &[Vec<f64>], losses: &[f64], hyper: &GpHyperparams) -> Result<(f64, Vec<f64>)> {
    let model = GpModel::fit(points.to_vec(), losses.to_vec(), hyper.clone())?;
    let n = points.len();
    let d = hyper.dim();
    let lml = model.log_marginal_likelihood();
    let l = &model.chol;
    let linv = lower_triangular_inverse(l).ok_or_else(|| CoreError::Numerical("singular factor".into()))?;
    let kinv = linv.tr_mul(&linv);
    let a = &model.alpha;
    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        for j in 0..n {
            let w = a[i] * a[j] - kinv[(i, j)];
            let ks = hyper.eval(&points[i], &points[j]);
            grad[0] += w * ks;
            for k in 0..d {
                let diff = (points[i][k] - points[j][k]) / hyper.length_scales[k];
                grad[1 + k] += w * ks * diff * diff;
            }
        }
        grad[d + 1] += (a[i] * a[i] - kinv[(i, i)]) * hyper.noise_variance;
    }
    for g in &mut grad {
        *g *= 0.5;
    }
    Ok((lml, grad))
}

/// Minimizes `f` with limited-memory BFGS and Armijo backtracking.
/// Returns the best point found and its value.
pub fn lbfgs_minimize<F>(mut f: F, x0: Vec<f64>, max_iterations: usize) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    const MEMORY: usize = 7;
    let Some((mut fx, mut g)) = f(&x0) else {
        return (x0, f64::INFINITY);
    };
    let mut x = x0;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _ in 0..max_iterations {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-6 {
            break;
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push((rho, a));
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(y)) => dot(s, y) / dot(y, y),
            _ => 1.0 / gnorm.max(1.0),
        };
        for v in &mut q {
            *v *= gamma;
        }
        for ((s, y), (rho, a)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fxn, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let improvement = fx - fxn;
        x = xn;
        fx = fxn;
        g = gn;
        if improvement.abs() < 1e-9 * fx.abs().max(1.0) {
            break;
        }
    }
    (x, fx)
}

/// Picks at most `cap` of `n` indices: the `keep_best` lowest losses plus a
/// uniform random sample of the rest, in ascending index order.
pub fn subsample_indices(losses: &[f64], cap: usize, keep_best: usize, rng: &mut Rng) -> Vec<usize> {
    let n = losses.len();
    if n <= cap {
        return (0..n).collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let keep = keep_best.min(cap);
    let mut chosen: Vec<usize> = order[..keep].to_vec();
    let mut rest: Vec<usize> = order[keep..].to_vec();
    rest.sort_unstable();
    rest.shuffle(rng);
    chosen.extend_from_slice(&rest[..cap - keep]);
    chosen.sort_unstable();
    chosen
}

/// Maximizes the log marginal likelihood over the configured boxes. The
/// search starts from the default initialization and, if given, from
/// `warm_start`; the result is never worse than the default.
pub fn fit_hyperparams(
    points: &[Vec<f64>],
    losses: &[f64],
    warm_start: Option<&GpHyperparams>,
    config: &FitConfig,
    rng: &mut Rng,
) -> Result<GpHyperparams> {
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    let default = GpHyperparams::default_for(dim);
    if points.len() < 2 {
        return Ok(default);
    }
    let idx = subsample_indices(losses, config.max_points, config.max_points / 2, rng);
    let pts: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| losses[i]).collect();

    let transform = Transform { boxes: config.boxes(dim) };
    let objective = |z: &[f64]| -> Option<(f64, Vec<f64>)> {
        let h = transform.decode(z);
        let (lml, g) = lml_and_gradient(&pts, &ys, &h).ok()?;
        let jac = transform.jacobian(z);
        Some((-lml, g.iter().zip(&jac).map(|(gi, ji)| -gi * ji).collect()))
    };

    let default_lml = match lml_and_gradient(&pts, &ys, &default) {
        Ok((l, _)) => l,
        Err(e) => {
            warn!("default GP initialization failed to factor: {e}");
            f64::NEG_INFINITY
        }
    };
    let mut best = (default.clone(), default_lml);
    // A warm start replaces the default start; the default still bounds
    // the result from below.
    let starts = match warm_start.filter(|w| w.dim() == dim) {
        Some(w) => vec![transform.encode(w)],
        None => vec![transform.encode(&default)],
    };
    for z0 in starts {
        let (z, neg) = lbfgs_minimize(objective, z0, config.max_iterations);
        if -neg > best.1 && neg.is_finite() {
            best = (transform.decode(&z), -neg);
        }
    }
    if !best.1.is_finite() {
        warn!("hyperparameter optimization diverged; keeping default initialization");
        return Ok(default);
    }
    Ok(best.0)
}

/// Lower-confidence-bound acquisition settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    /// β in `mean − β·std`.
    pub exploration: f64,
    /// Uniform random candidates per acquisition.
    pub candidate_count: usize,
    /// Gaussian perturbations of the best observed point added to the
    /// candidate set.
    pub perturbations: usize,
    pub perturbation_scale: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            exploration: 1.0,
            candidate_count: 256,
            perturbations: 10,
            perturbation_scale: 0.05,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exploration >= 0.0) || self.candidate_count == 0 || !(self.perturbation_scale >= 0.0) {
            return Err(CoreError::Config(format!("invalid acquisition settings: {self:?}")));
        }
        Ok(())
    }
}

/// Candidates considered by [`acquire`]: `candidate_count` uniform points
/// followed by perturbations of the best observed point.
pub fn acquisition_candidates(model: &GpModel, config: &AcquisitionConfig, rng: &mut Rng) -> Vec<Vec<f64>> {
    let dim = model.hyperparams().dim();
    let mut cands: Vec<Vec<f64>> = (0..config.candidate_count)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let best = model
        .losses()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| &model.points()[i]);
    if let Some(best) = best {
        let noise = Normal::new(0.0, config.perturbation_scale).expect("non-negative scale");
        for _ in 0..config.perturbations {
            cands.push(best.iter().map(|&b| (b + noise.sample(rng)).clamp(0.0, 1.0)).collect());
        }
    }
    cands
}

/// Index of the smallest LCB value among `candidates`, first index on ties.
/// Computed in standardized units, so shifting every loss by a constant does
/// not change the choice.
pub fn lcb_argmin(model: &GpModel, candidates: &[Vec<f64>], beta: f64) -> Option<usize> {
    let (means, vars) = model.posterior_batch_standardized(candidates);
    let mut best: Option<(usize, f64)> = None;
    for (i, (m, v)) in means.iter().zip(&vars).enumerate() {
        let lcb = m - beta * v.sqrt();
        if !lcb.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| lcb < b) {
            best = Some((i, lcb));
        }
    }
    best.map(|(i, _)| i)
}

/// Next point to evaluate: the LCB minimizer over a fresh candidate set.
pub fn acquire(model: &GpModel, config: &AcquisitionConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    let cands = acquisition_candidates(model, config, rng);
    lcb_argmin(model, &cands, config.exploration)
        .map(|i| cands[i].clone())
        .ok_or_else(|| CoreError::Numerical("no finite acquisition value".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::seeded_rng;

    fn h1(l: f64, noise: f64) -> GpHyperparams {
        GpHyperparams { signal_variance: 1.0, length_scales: vec![l], noise_variance: noise }
    }

    #[test]
    fn kernel_examples() {
        let h = h1(1.0, 1e-4);
        assert_eq!(kernel(&[0.3], &[0.3], &h).unwrap(), 1.0);
        assert!((kernel(&[0.0], &[1.0], &h).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let h2 = GpHyperparams { length_scales: vec![0.3, 0.7], ..GpHyperparams::default_for(2) };
        assert_eq!(kernel(&[0.1, 0.9], &[0.4, 0.2], &h2).unwrap(), kernel(&[0.4, 0.2], &[0.1, 0.9], &h2).unwrap());
        assert!(kernel(&[0.0], &[1.0], &h1(-1.0, 1e-4)).is_err());
    }

    #[test]
    fn blocked_factorizations_match_reference() {
        let mut rng = seeded_rng(11);
        let n = 300;
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        let k = gram(&pts, &GpHyperparams { noise_variance: 1e-3, ..GpHyperparams::default_for(2) });
        let reference = k.clone().cholesky().unwrap().unpack();
        let blocked = cholesky_blocked(k).unwrap();
        assert!((&blocked - &reference).abs().max() < 1e-10);
        let inv = lower_triangular_inverse(&blocked).unwrap();
        let eye = &blocked * &inv;
        assert!((eye - DMatrix::identity(n, n)).abs().max() < 1e-8);
        assert!(cholesky_blocked(-DMatrix::<f64>::identity(200, 200)).is_none());
    }

    #[test]
    fn prior_has_zero_mean_and_signal_variance() {
        let m = GpModel::prior(GpHyperparams { signal_variance: 2.5, ..GpHyperparams::default_for(3) }).unwrap();
        assert_eq!(m.posterior(&[0.1, 0.2, 0.3]), (0.0, 2.5));
    }

    #[test]
    fn interpolates_training_points() {
        let pts = vec![vec![0.1], vec![0.5], vec![0.8]];
        let ys = vec![3.0, -1.0, 2.0];
        let m = GpModel::fit(pts.clone(), ys.clone(), h1(0.3, 1e-10)).unwrap();
        for (p, y) in pts.iter().zip(&ys) {
            let (mean, var) = m.posterior(p);
            assert!((mean - y).abs() < 1e-4);
            assert!(m.posterior_standardized(p).1 < 1e-6);
            assert!(var >= 0.0);
        }
    }

    #[test]
    fn append_matches_full_fit() {
        let mut rng = seeded_rng(3);
        let pts: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random(), rng.random()]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| (p[0] * 5.0).sin() + p[1]).collect();
        let h = GpHyperparams::default_for(2);
        let mut inc = GpModel::fit(pts[..4].to_vec(), ys[..4].to_vec(), h.clone()).unwrap();
        for i in 4..12 {
            inc.append(pts[i].clone(), ys[i]).unwrap();
        }
        let full = GpModel::fit(pts.clone(), ys.clone(), h.clone()).unwrap();
        let q = [0.33, 0.71];
        let (a, b) = (inc.posterior(&q), full.posterior(&q));
        assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);

        let mut cached = GpModel::fit(pts[..4].to_vec(), ys[..4].to_vec(), h).unwrap();
        cached.cache_inverse_factor();
        for i in 4..12 {
            cached.append(pts[i].clone(), ys[i]).unwrap();
        }
        let qs = vec![q.to_vec(), vec![0.9, 0.1]];
        let (m1, v1) = cached.posterior_batch_standardized(&qs);
        let (m2, v2) = full.posterior_batch_standardized(&qs);
        for k in 0..2 {
            assert!((m1[k] - m2[k]).abs() < 1e-9 && (v1[k] - v2[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn far_queries_revert_to_prior_mean() {
        let pts = vec![vec![0.0, 0.0], vec![0.02, 0.01]];
        let m = GpModel::fit(pts, vec![1.0, 3.0], GpHyperparams {
            length_scales: vec![0.05, 0.05],
            ..GpHyperparams::default_for(2)
        })
        .unwrap();
        let (mean, _) = m.posterior_standardized(&[1.0, 1.0]);
        assert!(mean.abs() < 1e-3);
    }

    #[test]
    fn lml_gradient_matches_finite_differences() {
        let mut rng = seeded_rng(5);
        let pts: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.random(), rng.random()]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| (p[0] * 4.0).cos() * p[1]).collect();
        let h = GpHyperparams { signal_variance: 0.8, length_scales: vec![0.4, 0.9], noise_variance: 1e-2 };
        let (_, g) = lml_and_gradient(&pts, &ys, &h).unwrap();
        let eps = 1e-6;
        let bump = |k: usize, s: f64| {
            let mut hh = h.clone();
            match k {
                0 => hh.signal_variance *= (s * eps).exp(),
                3 => hh.noise_variance *= (s * eps).exp(),
                i => hh.length_scales[i - 1] *= (s * eps).exp(),
            }
            lml_and_gradient(&pts, &ys, &hh).unwrap().0
        };
        for k in 0..4 {
            let fd = (bump(k, 1.0) - bump(k, -1.0)) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-5 * fd.abs().max(1.0), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            Some((v, vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
        };
        let (x, v) = lbfgs_minimize(f, vec![-1.2, 1.0], 200);
        assert!(v < 1e-8, "{x:?} {v}");
    }

    #[test]
    fn constant_losses_shrink_signal() {
        let mut rng = seeded_rng(1);
        let pts: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.random()]).collect();
        let h = fit_hyperparams(&pts, &[2.0; 15], None, &FitConfig::default(), &mut rng).unwrap();
        assert!(h.signal_variance < 1e-2, "{h:?}");
    }

    #[test]
    fn duplicate_points_raise_noise() {
        let mut rng = seeded_rng(2);
        let mut pts = Vec::new();
        let mut ys = Vec::new();
        for i in 0..10 {
            let x = i as f64 / 9.0;
            pts.push(vec![x]);
            pts.push(vec![x]);
            ys.push(x + 0.3);
            ys.push(x - 0.3);
        }
        let h = fit_hyperparams(&pts, &ys, None, &FitConfig::default(), &mut rng).unwrap();
        assert!(h.noise_variance > 1e-4, "{h:?}");
    }

    #[test]
    fn fit_never_worse_than_default() {
        let mut rng = seeded_rng(9);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random(), rng.random()]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| (9.0 * p[0]).sin() + p[1] * p[1]).collect();
        let h = fit_hyperparams(&pts, &ys, None, &FitConfig::default(), &mut rng).unwrap();
        let fitted = lml_and_gradient(&pts, &ys, &h).unwrap().0;
        let default = lml_and_gradient(&pts, &ys, &GpHyperparams::default_for(2)).unwrap().0;
        assert!(fitted >= default);
    }

    #[test]
    fn subsample_keeps_best() {
        let mut rng = seeded_rng(0);
        let losses: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64).collect();
        let idx = subsample_indices(&losses, 20, 10, &mut rng);
        assert_eq!(idx.len(), 20);
        for (i, l) in losses.iter().enumerate() {
            if *l < 10.0 {
                assert!(idx.contains(&i));
            }
        }
    }

    #[test]
    fn zero_beta_picks_lowest_mean() {
        let mut rng = seeded_rng(4);
        let pts = vec![vec![0.2], vec![0.8]];
        let m = GpModel::fit(pts, vec![1.0, 0.0], h1(0.2, 1e-4)).unwrap();
        let cands = acquisition_candidates(&m, &AcquisitionConfig::default(), &mut rng);
        let i = lcb_argmin(&m, &cands, 0.0).unwrap();
        let (means, _) = m.posterior_batch_standardized(&cands);
        assert!(means.iter().all(|&v| v >= means[i]));
    }
}

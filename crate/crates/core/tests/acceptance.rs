//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use boleap::cmaes::{update_distribution, CmaConfig, CmaConstants, PopulationState};
use boleap::descent::{descend, DescentConfig, Termination};
use boleap::gp::{acquire, AcquisitionConfig, GpHyperparams, GpModel};
use boleap::harness::{mann_whitney_u, median};
use boleap::optimizers::{self, OptimizerOptions};
use boleap::problems::{self, Bounce, BounceConfig, Evaluation, Problem, ProblemOptions};
use boleap::{seeded_rng, Bounds, Evaluator, EvaluationRecord, Phase, Rng};
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn central_fd(p: &dyn Problem, x: &[f64], h: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h[i];
            b[i] -= h[i];
            (p.evaluate(&a, false).loss - p.evaluate(&b, false).loss) / (2.0 * h[i])
        })
        .collect()
}

/// True when every FD probe lies in the same smooth piece as `x`.
fn stencil_is_smooth(p: &dyn Problem, x: &[f64], h: &[f64]) -> bool {
    let Some(s0) = p.branch_signature(x) else { return true };
    (0..x.len()).all(|i| {
        [h[i], -h[i]].iter().all(|&dh| {
            let mut y = x.to_vec();
            y[i] += dh;
            p.branch_signature(&y) == Some(s0)
        })
    })
}

fn relative_error(g: &[f64], fd: &[f64]) -> f64 {
    let diff: Vec<f64> = g.iter().zip(fd).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(g).max(norm(fd)).max(1e-12)
}

fn gradient_suite() -> Outcome {
    let specs: [(&str, ProblemOptions, f64, f64); 7] = [
        ("synthetic", ProblemOptions::default(), 1e-6, 1e-4),
        ("cartpole", ProblemOptions::default(), 1e-6, 1e-4),
        ("bounce", ProblemOptions::default(), 5e-8, 1e-4),
        ("pinball-2", ProblemOptions::default(), 1e-6, 1e-3),
        ("pinball-16", ProblemOptions::default(), 1e-6, 1e-3),
        ("swing-stiffness", ProblemOptions::default(), 1e-6, 1e-3),
        ("swing-velocity", ProblemOptions::default(), 1e-6, 1e-3),
    ];
    let mut summary = Vec::new();
    for (name, opts, rel_h, tol) in specs {
        let p = problems::by_name(name, &opts).map_err(|e| e.to_string())?;
        let b = p.bounds().clone();
        let h: Vec<f64> = (0..b.dim()).map(|i| rel_h * b.width(i)).collect();
        let mut rng = seeded_rng(1);
        let (mut accepted, mut rejected, mut worst) = (0, 0, 0.0f64);
        while accepted < 20 {
            ensure!(rejected < 2000, "{name}: could not find 20 smooth points");
            let x: Vec<f64> = (0..b.dim())
                .map(|i| b.lower()[i] + b.width(i) * (0.05 + 0.9 * rng.random::<f64>()))
                .collect();
            if !stencil_is_smooth(p.as_ref(), &x, &h) {
                rejected += 1;
                continue;
            }
            let g = p.evaluate(&x, true).gradient.ok_or(format!("{name}: no gradient"))?;
            let fd = central_fd(p.as_ref(), &x, &h);
            let err = relative_error(&g, &fd);
            ensure!(err < tol, "{name}: relative error {err:.3e} ≥ {tol:e} at {x:?}");
            worst = worst.max(err);
            accepted += 1;
        }
        summary.push(format!("{name} {worst:.1e} ({rejected} rejected)"));
    }
    Ok(format!("worst relative error: {}", summary.join(", ")))
}

/// Gauss-Jordan inverse with partial pivoting.
fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn se_ard(a: &[f64], b: &[f64], h: &GpHyperparams) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(&h.length_scales).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    h.signal_variance * (-0.5 * r2).exp()
}

fn oracle_posterior(x: &[Vec<f64>], y: &[f64], h: &GpHyperparams, diag: f64, q: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mu = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
    let ys: Vec<f64> = y.iter().map(|v| (v - mu) / sd).collect();
    let k: Vec<Vec<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, a)| x.iter().enumerate().map(|(j, b)| se_ard(a, b, h) + if i == j { diag } else { 0.0 }).collect())
        .collect();
    let kinv = dense_inverse(&k);
    let ks: Vec<f64> = x.iter().map(|a| se_ard(a, q, h)).collect();
    let kinv_ks: Vec<f64> = kinv.iter().map(|row| row.iter().zip(&ks).map(|(a, b)| a * b).sum()).collect();
    let mean: f64 = kinv_ks.iter().zip(&ys).map(|(a, b)| a * b).sum();
    let var = h.signal_variance - ks.iter().zip(&kinv_ks).map(|(a, b)| a * b).sum::<f64>();
    (mu + sd * mean, sd * sd * var)
}

fn gp_oracle() -> Outcome {
    let mut rng = seeded_rng(2);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let d = rng.random_range(1..=4);
        let x: Vec<Vec<f64>> = (0..8).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = (0..8).map(|_| 3.0 * normal(&mut rng) + 1.0).collect();
        let h = GpHyperparams {
            signal_variance: rng.random_range(0.5..2.0),
            length_scales: (0..d).map(|_| rng.random_range(0.2..1.0)).collect(),
            noise_variance: 10f64.powf(rng.random_range(-6.0..-2.0)),
        };
        let model = GpModel::fit(x.clone(), y.clone(), h.clone()).map_err(|e| e.to_string())?;
        let diag = h.noise_variance + model.jitter();
        for _ in 0..20 {
            let q: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let (m, v) = model.posterior(&q);
            let (om, ov) = oracle_posterior(&x, &y, &h, diag, &q);
            worst = worst.max((m - om).abs()).max((v - ov).abs());
        }
    }
    ensure!(worst < 1e-8, "posterior differs from dense-inverse oracle by {worst:e}");

    let mut interp = 0.0f64;
    for _ in 0..10 {
        let x: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random(), rng.random()]).collect();
        let y: Vec<f64> = (0..8).map(|_| normal(&mut rng)).collect();
        let h = GpHyperparams { noise_variance: 1e-10, length_scales: vec![0.3, 0.3], ..GpHyperparams::default_for(2) };
        let model = GpModel::fit(x.clone(), y.clone(), h).map_err(|e| e.to_string())?;
        for (p, t) in x.iter().zip(&y) {
            interp = interp.max((model.posterior(p).0 - t).abs());
        }
    }
    ensure!(interp < 1e-4, "interpolation error {interp:e}");
    Ok(format!("max oracle deviation {worst:.1e}, max interpolation error {interp:.1e}"))
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix: returns
/// (eigenvalues, eigenvectors as columns).
fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

struct OracleCma {
    p_sigma: Vec<f64>,
    p_c: Vec<f64>,
    sigma: f64,
    cov: Vec<Vec<f64>>,
}

/// Textbook single-generation CMA-ES update with log-rank weights.
#[allow(clippy::too_many_arguments)]
fn oracle_cma(
    mean: &[f64],
    sigma: f64,
    cov: &[Vec<f64>],
    p_sigma: &[f64],
    p_c: &[f64],
    generation: usize,
    new_mean: &[f64],
    parents: &[Vec<f64>],
) -> OracleCma {
    let n = mean.len() as f64;
    let d = mean.len();
    let mu = parents.len();
    let raw: Vec<f64> = (1..=mu).map(|i| ((mu as f64) + 0.5).ln() - (i as f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let mu_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    let cs = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    let ds = 1.0 + 2.0 * f64::max(0.0, ((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0) + cs;
    let cc = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
    let c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
    let cmu = f64::min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));
    let chi = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    let yw: Vec<f64> = (0..d).map(|i| (new_mean[i] - mean[i]) / sigma).collect();
    let (vals, vecs) = jacobi_eigen(cov);
    // C^{-1/2} = B diag(1/sqrt(λ)) Bᵀ
    let mut white = vec![0.0; d];
    for k in 0..d {
        let proj: f64 = (0..d).map(|i| vecs[i][k] * yw[i]).sum::<f64>() / vals[k].sqrt();
        for i in 0..d {
            white[i] += vecs[i][k] * proj;
        }
    }
    let ps: Vec<f64> = (0..d).map(|i| (1.0 - cs) * p_sigma[i] + (cs * (2.0 - cs) * mu_eff).sqrt() * white[i]).collect();
    let ps_norm = norm(&ps);
    let hs = ps_norm / (1.0 - (1.0 - cs).powi(2 * (generation as i32 + 1))).sqrt() < (1.4 + 2.0 / (n + 1.0)) * chi;
    let hs = if hs { 1.0 } else { 0.0 };
    let pc: Vec<f64> = (0..d).map(|i| (1.0 - cc) * p_c[i] + hs * (cc * (2.0 - cc) * mu_eff).sqrt() * yw[i]).collect();
    let delta = (1.0 - hs) * cc * (2.0 - cc);
    let ys: Vec<Vec<f64>> = parents.iter().map(|x| (0..d).map(|i| (x[i] - mean[i]) / sigma).collect()).collect();
    let mut c = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let rank_mu: f64 = ys.iter().zip(&w).map(|(y, wk)| wk * y[i] * y[j]).sum();
            c[i][j] = (1.0 + c1 * delta - c1 - cmu) * cov[i][j] + c1 * pc[i] * pc[j] + cmu * rank_mu;
        }
    }
    let s = sigma * ((cs / ds) * (ps_norm / chi - 1.0)).exp();
    OracleCma { p_sigma: ps, p_c: pc, sigma: s, cov: c }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn cma_oracle() -> Outcome {
    let mut rng = seeded_rng(3);
    let config = CmaConfig::default();
    let mut h_off = 0;
    let mut worst = 0.0f64;
    for inst in 0..100 {
        let d = [2, 5, 10][inst % 3];
        let mean: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let sigma = rng.random_range(0.05..0.5);
        let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| normal(&mut rng)).collect()).collect();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * a[j][k]).sum::<f64>() / d as f64 + if i == j { 0.1 } else { 0.0 }).collect())
            .collect();
        let path_scale = rng.random_range(0.0..3.0);
        let p_sigma: Vec<f64> = (0..d).map(|_| path_scale * normal(&mut rng)).collect();
        let p_c: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let generation = rng.random_range(0..30);
        let parents: Vec<Vec<f64>> = (0..config.parent_count)
            .map(|_| mean.iter().map(|m| m + sigma * normal(&mut rng)).collect())
            .collect();
        let new_mean: Vec<f64> = mean.iter().map(|m| m + 0.5 * sigma * normal(&mut rng)).collect();

        let state = PopulationState::from_parts(
            mean.clone(),
            sigma,
            DMatrix::from_fn(d, d, |i, j| cov[i][j]),
            p_sigma.clone(),
            p_c.clone(),
            generation,
        );
        let refs: Vec<&[f64]> = parents.iter().map(|p| p.as_slice()).collect();
        let got = update_distribution(&state, &new_mean, &refs, &CmaConstants::new(d, &config));
        let want = oracle_cma(&mean, sigma, &cov, &p_sigma, &p_c, generation, &new_mean, &parents);
        let mut pairs: Vec<(f64, f64)> = vec![(got.sigma, want.sigma)];
        pairs.extend(got.p_sigma.iter().copied().zip(want.p_sigma.iter().copied()));
        pairs.extend(got.p_c.iter().copied().zip(want.p_c.iter().copied()));
        for i in 0..d {
            for j in 0..d {
                pairs.push((got.cov[(i, j)], want.cov[i][j]));
            }
        }
        for (g, w) in pairs {
            ensure!(close(g, w, 1e-10), "instance {inst} (d={d}): {g} vs oracle {w}");
            worst = worst.max((g - w).abs() / w.abs().max(1.0));
        }
        let h_zero = {
            let cs = CmaConstants::new(d, &config);
            let pn = norm(&want.p_sigma);
            pn / (1.0 - (1.0 - cs.c_sigma).powi(2 * (generation as i32 + 1))).sqrt() >= (1.4 + 2.0 / (d as f64 + 1.0)) * cs.chi_n
        };
        if h_zero {
            h_off += 1;
        }
    }
    Ok(format!("100 instances, max deviation {worst:.1e}, {h_off} with h_σ = 0"))
}

fn cma_competence() -> Outcome {
    let p = problems::by_name("sphere", &ProblemOptions { dimension: 10, ..Default::default() }).map_err(|e| e.to_string())?;
    let opt = optimizers::by_name("cma-es", &OptimizerOptions::default()).map_err(|e| e.to_string())?;
    let mut best = Vec::new();
    for seed in 0..10 {
        let r = opt.minimize(p.as_ref(), 5000, &mut seeded_rng(seed)).map_err(|e| e.to_string())?;
        best.push(r.best.loss);
    }
    let m = median(&best);
    ensure!(m < 1e-6, "median best loss {m:e}");
    Ok(format!("median best loss {m:.2e}"))
}

fn ordering() -> Outcome {
    let p = problems::by_name("synthetic", &ProblemOptions { dimension: 10, ..Default::default() }).map_err(|e| e.to_string())?;
    let opts = OptimizerOptions::default();
    let mut results = Vec::new();
    for name in ["bo-leap", "random", "cma-es", "rand-descents", "bo"] {
        let opt = optimizers::by_name(name, &opts).map_err(|e| e.to_string())?;
        let mut best = Vec::new();
        for seed in 0..10 {
            best.push(opt.minimize(p.as_ref(), 1000, &mut seeded_rng(seed)).map_err(|e| e.to_string())?.best.loss);
        }
        results.push((name, best));
    }
    let leap = &results[0].1;
    let leap_median = median(leap);
    let mut notes = vec![format!("bo-leap {leap_median:.3}")];
    for (name, best) in &results[1..] {
        let m = median(best);
        let (_, pval) = mann_whitney_u(leap, best);
        notes.push(format!("{name} {m:.3} (p={pval:.1e})"));
        ensure!(leap_median <= m, "bo-leap median {leap_median} > {name} median {m}");
        if *name == "random" || *name == "rand-descents" {
            ensure!(leap_median < m && pval < 0.05, "bo-leap not significantly better than {name}: p={pval}");
        }
    }
    Ok(format!("medians: {}", notes.join(", ")))
}

fn plateau() -> Outcome {
    let p = problems::by_name("pinball-16", &ProblemOptions::default()).map_err(|e| e.to_string())?;
    let x = vec![1.5; 16];
    let g = p.evaluate(&x, true).gradient.ok_or("no gradient")?;
    ensure!(g.iter().all(|&v| v == 0.0), "gradient not exactly zero: {g:?}");
    let unit: Vec<f64> = x.iter().zip(p.bounds().lower()).zip(p.bounds().upper()).map(|((v, l), u)| (v - l) / (u - l)).collect();
    let mut ev = Evaluator::new(p.as_ref(), 100).map_err(|e| e.to_string())?;
    let t = descend(&mut ev, &unit, &DescentConfig::default(), Phase::Descent { trial: 0, descent: 0 }).map_err(|e| e.to_string())?;
    ensure!(t.termination == Termination::Stagnation, "terminated by {:?}", t.termination);
    ensure!(t.steps.len() == 4 && ev.budget().used() == 4, "{} evaluations", t.steps.len());
    Ok("16 zero gradient components; descent stopped by stagnation after 4 evaluations".into())
}

fn discontinuity() -> Outcome {
    let bounce = Bounce::new(BounceConfig::default()).map_err(|e| e.to_string())?;
    let vx = 1.0;
    let n = 201;
    let (lo, hi) = (bounce.bounds().lower()[1], bounce.bounds().upper()[1]);
    let dv = (hi - lo) / (n - 1) as f64;
    let vys: Vec<f64> = (0..n).map(|k| lo + dv * k as f64).collect();
    let losses: Vec<f64> = vys.iter().map(|&vy| bounce.evaluate(&[vx, vy], false).loss).collect();
    let counts: Vec<usize> = vys.iter().map(|&vy| bounce.outcome(&[vx, vy]).bounces).collect();
    let slopes: Vec<f64> = losses.windows(2).map(|w| (w[1] - w[0]) / dv).collect();
    let jumps: Vec<f64> = slopes.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let med = median(&jumps);
    let hits = (0..jumps.len())
        .filter(|&k| counts[k] != counts[k + 1] || counts[k + 1] != counts[k + 2])
        .filter(|&k| jumps[k] > 10.0 * med)
        .count();
    ensure!(hits >= 1, "no bounce-count change with a jump above 10× median ({med:e})");

    let h = [5e-8 * bounce.bounds().width(0), 5e-8 * bounce.bounds().width(1)];
    let (mut checked, mut worst) = (0, 0.0f64);
    for &vy in vys.iter().step_by(2) {
        let x = [vx, vy.clamp(lo + h[1], hi - h[1])];
        if !stencil_is_smooth(&bounce, &x, &h) {
            continue;
        }
        let g = bounce.evaluate(&x, true).gradient.ok_or("no gradient")?;
        let fd = central_fd(&bounce, &x, &h);
        let err = relative_error(&g, &fd);
        ensure!(err < 1e-4, "within-segment FD mismatch {err:e} at v_y = {vy}");
        worst = worst.max(err);
        checked += 1;
    }
    ensure!(checked >= 20, "only {checked} smooth sweep points");
    let changes = counts.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(format!(
        "{changes} bounce-count changes, {hits} flagged jumps (median jump {med:.2e}); {checked} smooth points, worst FD error {worst:.1e}"
    ))
}

fn same_bits(a: &[EvaluationRecord], b: &[EvaluationRecord]) -> bool {
    let bits = |r: &EvaluationRecord| {
        (
            r.point.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            r.loss.to_bits(),
            r.gradient.as_ref().map(|g| g.iter().map(|v| v.to_bits()).collect::<Vec<_>>()),
            r.step_index,
            r.failed,
        )
    };
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| bits(x) == bits(y))
}

fn budget_and_determinism() -> Outcome {
    let opts = OptimizerOptions::default();
    let mut runs = 0;
    for pname in problems::REGISTRY {
        let p = problems::by_name(pname, &ProblemOptions::default()).map_err(|e| e.to_string())?;
        let budget = match *pname {
            "synthetic" | "sphere" | "bounce" => 150,
            "swing-stiffness" | "swing-velocity" => 12,
            _ => 40,
        };
        for oname in optimizers::REGISTRY {
            if *oname == "rand-descents" && !p.gradient_available() {
                continue;
            }
            let opt = optimizers::by_name(oname, &opts).map_err(|e| e.to_string())?;
            let a = opt.minimize(p.as_ref(), budget, &mut seeded_rng(7)).map_err(|e| e.to_string())?;
            let b = opt.minimize(p.as_ref(), budget, &mut seeded_rng(7)).map_err(|e| e.to_string())?;
            ensure!(a.log.len() == budget, "{oname} on {pname}: {} of {budget} steps", a.log.len());
            ensure!(same_bits(&a.log, &b.log), "{oname} on {pname}: logs differ between identical seeds");
            runs += 1;
        }
    }
    Ok(format!("{runs} optimizer/problem pairs exact and reproducible"))
}

struct Constant(Bounds);

impl Problem for Constant {
    fn name(&self) -> &str {
        "constant"
    }
    fn bounds(&self) -> &Bounds {
        &self.0
    }
    fn gradient_available(&self) -> bool {
        true
    }
    fn evaluate(&self, x: &[f64], _: bool) -> Evaluation {
        Evaluation { loss: 3.0, gradient: Some(vec![0.0; x.len()]) }
    }
}

fn stagnation() -> Outcome {
    let cfg = DescentConfig::default();
    let p = Constant(Bounds::unit(4));
    let mut ev = Evaluator::new(&p, 100).map_err(|e| e.to_string())?;
    let t = descend(&mut ev, &[0.5; 4], &cfg, Phase::Random).map_err(|e| e.to_string())?;
    ensure!(t.steps.len() == cfg.stagnation_window + 1, "constant loss: {} evaluations", t.steps.len());

    let q = problems::Sphere::with_center(Bounds::unit(2), vec![0.9, 0.9]).map_err(|e| e.to_string())?;
    let mut ev = Evaluator::new(&q, 100).map_err(|e| e.to_string())?;
    let t = descend(&mut ev, &[0.0, 0.0], &cfg, Phase::Random).map_err(|e| e.to_string())?;
    ensure!(t.termination == Termination::MaxSteps, "improving quadratic stopped by {:?}", t.termination);
    ensure!(t.steps.windows(2).all(|w| w[1].loss < w[0].loss), "quadratic did not improve every step");
    Ok(format!("constant: {} evaluations; quadratic ran all {} steps", cfg.stagnation_window + 1, cfg.max_steps))
}

fn lcb_invariance() -> Outcome {
    let mut rng = seeded_rng(10);
    let cfg = AcquisitionConfig::default();
    for trial in 0..20 {
        let d = rng.random_range(1..=6);
        let n = rng.random_range(5..40);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = x.iter().map(|p| p.iter().map(|v| (6.0 * v).sin()).sum::<f64>()).collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + 1000.0).collect();
        let h = GpHyperparams { length_scales: vec![0.3; d], ..GpHyperparams::default_for(d) };
        let a = GpModel::fit(x.clone(), y, h.clone()).map_err(|e| e.to_string())?;
        let b = GpModel::fit(x, shifted, h).map_err(|e| e.to_string())?;
        let pa = acquire(&a, &cfg, &mut seeded_rng(trial)).map_err(|e| e.to_string())?;
        let pb = acquire(&b, &cfg, &mut seeded_rng(trial)).map_err(|e| e.to_string())?;
        ensure!(pa == pb, "trial {trial}: selected candidate changed under +1000 shift");
    }
    Ok("20 datasets, same candidate after +1000 shift".into())
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("gradient correctness", Duration::from_secs(180), gradient_suite),
        ("GP oracle equivalence", Duration::from_secs(30), gp_oracle),
        ("CMA-ES update fidelity", Duration::from_secs(30), cma_oracle),
        ("CMA-ES competence", Duration::from_secs(60), cma_competence),
        ("optimizer ordering", Duration::from_secs(600), ordering),
        ("pinball plateau", Duration::from_secs(30), plateau),
        ("bounce discontinuity", Duration::from_secs(60), discontinuity),
        ("budget and determinism", Duration::from_secs(120), budget_and_determinism),
        ("stagnation semantics", Duration::from_secs(30), stagnation),
        ("LCB shift invariance", Duration::from_secs(30), lcb_invariance),
    ];
    let only: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (k, (name, limit, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(e) => Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > *limit => Err(format!("{msg}; took {:.1}s, limit {}s", took.as_secs_f64(), limit.as_secs())),
            other => other,
        };
        match result {
            Ok(msg) => println!("PASS {id:>2} {name}: {msg} [{:.1}s]", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {msg} [{:.1}s]", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

//! Experiment plumbing: TOML configs, multi-seed runs with JSONL logs and CSV
//! summaries, 2D landscape slices, optimizer comparisons and re-verification
//! of written results.

use crate::common::{read_jsonl, seeded_rng, write_jsonl, CoreError, Result};
use crate::optimizers::{self, OptimizerOptions};
use crate::problems::{self, Problem, ProblemOptions};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSection {
    pub name: String,
    #[serde(flatten)]
    pub options: ProblemOptions,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { name: "synthetic".into(), options: ProblemOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerSection {
    pub name: String,
    #[serde(flatten)]
    pub options: OptimizerOptions,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self { name: "bo-leap".into(), options: OptimizerOptions::default() }
    }
}

// `name` sits next to the options in the same table; serde's flatten would
// silently drop misspelled option keys, so the split is done by hand.
fn split_section<'de, D, T>(d: D, default_name: &str) -> std::result::Result<(String, T), D::Error>
where
    D: serde::Deserializer<'de>,
    T: serde::de::DeserializeOwned,
{
    use serde::de::Error;
    let mut table = toml::Table::deserialize(d)?;
    let name = match table.remove("name") {
        None => default_name.to_string(),
        Some(toml::Value::String(s)) => s,
        Some(other) => return Err(D::Error::custom(format!("name must be a string, got {other}"))),
    };
    let options = toml::Value::Table(table).try_into().map_err(D::Error::custom)?;
    Ok((name, options))
}

impl<'de> Deserialize<'de> for ProblemSection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (name, options) = split_section(d, "synthetic")?;
        Ok(Self { name, options })
    }
}

impl<'de> Deserialize<'de> for OptimizerSection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (name, options) = split_section(d, "bo-leap")?;
        Ok(Self { name, options })
    }
}

/// One experiment: a problem, an optimizer, a budget and a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub optimizer: OptimizerSection,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSection::default(),
            optimizer: OptimizerSection::default(),
            budget: 1000,
            seeds: (0..10).collect(),
            out: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CoreError::Config(e.to_string()))
    }

    /// Checks names against the registries and that at least one seed is
    /// given.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(CoreError::Config("seeds must not be empty".into()));
        }
        if self.budget == 0 {
            return Err(CoreError::EmptyBudget);
        }
        problems::by_name(&self.problem.name, &self.problem.options)?;
        optimizers::by_name(&self.optimizer.name, &self.optimizer.options)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub best_loss: f64,
    pub steps_to_best: usize,
    pub wallclock_s: f64,
}

/// Normal-approximation summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    /// Half width of the 95% interval; zero for a single value.
    pub ci95: f64,
    pub median: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ci95 = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            z975() * (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, ci95, median: median(values) }
    }
}

fn z975() -> f64 {
    Normal::standard().inverse_cdf(0.975)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub optimizer: String,
    pub problem: String,
    pub seeds: Vec<SeedResult>,
    pub aggregate: Aggregate,
}

impl RunSummary {
    pub fn best_losses(&self) -> Vec<f64> {
        self.seeds.iter().map(|s| s.best_loss).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRow {
    optimizer: String,
    seed: String,
    best_loss: f64,
    ci95: Option<f64>,
    steps_to_best: Option<usize>,
    wallclock_s: f64,
}

const MEAN_ROW: &str = "mean";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.toml";

pub fn log_file_name(optimizer: &str, seed: u64) -> String {
    format!("{optimizer}-seed{seed}.jsonl")
}

/// Runs every seed of `config` and writes into `config.out`: one JSONL log
/// per seed, `summary.csv` (a row per seed plus a `mean` row with the 95%
/// interval) and the resolved `config.toml`.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let problem = problems::by_name(&config.problem.name, &config.problem.options)?;
    let optimizer = optimizers::by_name(&config.optimizer.name, &config.optimizer.options)?;
    fs::create_dir_all(&config.out)?;
    fs::write(config.out.join(CONFIG_FILE), config.to_toml_string()?)?;

    let mut seeds = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let start = Instant::now();
        let result = optimizer.minimize(problem.as_ref(), config.budget, &mut seeded_rng(seed))?;
        let wallclock_s = start.elapsed().as_secs_f64();
        let path = config.out.join(log_file_name(&config.optimizer.name, seed));
        write_jsonl(BufWriter::new(File::create(&path)?), &result.log)?;
        log::info!(
            "{} seed {seed}: best {:.6e} at step {} ({wallclock_s:.2}s)",
            config.optimizer.name,
            result.best.loss,
            result.steps_to_best()
        );
        seeds.push(SeedResult {
            seed,
            best_loss: result.best.loss,
            steps_to_best: result.steps_to_best(),
            wallclock_s,
        });
    }
    let summary = RunSummary {
        optimizer: config.optimizer.name.clone(),
        problem: config.problem.name.clone(),
        aggregate: Aggregate::of(&seeds.iter().map(|s| s.best_loss).collect::<Vec<_>>()),
        seeds,
    };
    write_summary(&config.out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn csv_error(e: csv::Error) -> CoreError {
    CoreError::Config(format!("csv: {e}"))
}

fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for s in &summary.seeds {
        w.serialize(SummaryRow {
            optimizer: summary.optimizer.clone(),
            seed: s.seed.to_string(),
            best_loss: s.best_loss,
            ci95: None,
            steps_to_best: Some(s.steps_to_best),
            wallclock_s: s.wallclock_s,
        })
        .map_err(csv_error)?;
    }
    w.serialize(SummaryRow {
        optimizer: summary.optimizer.clone(),
        seed: MEAN_ROW.into(),
        best_loss: summary.aggregate.mean,
        ci95: Some(summary.aggregate.ci95),
        steps_to_best: None,
        wallclock_s: summary.seeds.iter().map(|s| s.wallclock_s).sum(),
    })
    .map_err(csv_error)?;
    w.flush()?;
    Ok(())
}

/// Recomputes `summary.csv` in `dir` from the JSONL logs next to it and lists
/// every disagreement (an empty list means the results verify).
pub fn verify(dir: &Path) -> Result<Vec<String>> {
    let config = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    let mut reader = csv::Reader::from_path(dir.join(SUMMARY_FILE)).map_err(csv_error)?;
    let rows: Vec<SummaryRow> = reader.deserialize().collect::<Result<_, _>>().map_err(csv_error)?;
    let mut problems_found = Vec::new();
    let mut best = Vec::new();
    for row in rows.iter().filter(|r| r.seed != MEAN_ROW) {
        let seed: u64 = row
            .seed
            .parse()
            .map_err(|_| CoreError::Config(format!("bad seed '{}' in summary", row.seed)))?;
        let path = dir.join(log_file_name(&row.optimizer, seed));
        let steps = read_jsonl(BufReader::new(File::open(&path)?))?;
        if steps.len() != config.budget {
            problems_found.push(format!("{}: {} steps, budget {}", path.display(), steps.len(), config.budget));
        }
        let Some((idx, loss)) = steps
            .iter()
            .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.step.cmp(&b.step)))
            .map(|s| (s.step, s.loss))
        else {
            problems_found.push(format!("{}: empty log", path.display()));
            continue;
        };
        if loss.to_bits() != row.best_loss.to_bits() {
            problems_found.push(format!("seed {seed}: best loss {} in summary, {loss} in log", row.best_loss));
        }
        if row.steps_to_best != Some(idx) {
            problems_found.push(format!("seed {seed}: steps_to_best {:?} in summary, {idx} in log", row.steps_to_best));
        }
        best.push(loss);
    }
    let expected_seeds = config.seeds.len();
    if best.len() != expected_seeds {
        problems_found.push(format!("{} seed rows, config lists {expected_seeds}", best.len()));
    }
    match rows.iter().find(|r| r.seed == MEAN_ROW) {
        None => problems_found.push("missing aggregate row".into()),
        Some(agg) if !best.is_empty() => {
            let a = Aggregate::of(&best);
            if a.mean.to_bits() != agg.best_loss.to_bits() {
                problems_found.push(format!("mean {} in summary, {} recomputed", agg.best_loss, a.mean));
            }
            if agg.ci95.map(f64::to_bits) != Some(a.ci95.to_bits()) {
                problems_found.push(format!("ci95 {:?} in summary, {} recomputed", agg.ci95, a.ci95));
            }
        }
        Some(_) => {}
    }
    Ok(problems_found)
}

/// Two-sided Mann-Whitney U test, normal approximation with tie and
/// continuity corrections. Returns `(U_x, p)`.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let mut all: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut rank_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_x += mid * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let u = rank_x - n1 * (n1 + 1.0) / 2.0;
    let nt = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    if !(var > 0.0) {
        return (u, 1.0);
    }
    let diff = ((u - n1 * n2 / 2.0).abs() - 0.5).max(0.0);
    let z = diff / var.sqrt();
    let p = 2.0 * (1.0 - Normal::standard().cdf(z));
    (u, p.min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub median: f64,
    pub mean: f64,
    pub ci95: f64,
    /// Against the reference row; `None` for the reference itself.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    /// Label of the row the p-values are computed against: the first
    /// `bo-leap` entry, or the first entry when there is none.
    pub reference: String,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn from_runs(runs: &[RunSummary]) -> Result<Self> {
        let labels = unique_labels(runs.iter().map(|r| r.optimizer.as_str()));
        let reference = runs.iter().position(|r| r.optimizer == "bo-leap").unwrap_or(0);
        let reference_losses = runs.get(reference).ok_or_else(|| CoreError::Config("nothing to compare".into()))?.best_losses();
        let rows = runs
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let losses = r.best_losses();
                let a = Aggregate::of(&losses);
                CompareRow {
                    label: labels[k].clone(),
                    median: a.median,
                    mean: a.mean,
                    ci95: a.ci95,
                    p_value: (k != reference).then(|| mann_whitney_u(&reference_losses, &losses).1),
                }
            })
            .collect();
        Ok(Self { reference: labels[reference].clone(), rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["optimizer", "median", "mean", "ci95", "p_value"]).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.median.to_string(),
                r.mean.to_string(),
                r.ci95.to_string(),
                r.p_value.map(|p| p.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl std::fmt::Display for CompareReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<16} {:>14} {:>14} {:>12} {:>10}", "optimizer", "median", "mean", "±ci95", "p")?;
        for r in &self.rows {
            let p = r.p_value.map(|p| format!("{p:.3e}")).unwrap_or_else(|| "-".into());
            writeln!(f, "{:<16} {:>14.6e} {:>14.6e} {:>12.3e} {:>10}", r.label, r.median, r.mean, r.ci95, p)?;
        }
        Ok(())
    }
}

fn unique_labels<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for name in names {
        let dup = out.iter().filter(|l| l.split('#').next() == Some(name)).count();
        out.push(if dup == 0 { name.to_string() } else { format!("{name}#{}", dup + 1) });
    }
    out
}

/// Runs each config into its own subdirectory of `out` and writes
/// `compare.csv`. All configs must share the problem and the budget.
pub fn compare(configs: &[ExperimentConfig], out: &Path) -> Result<CompareReport> {
    let first = configs.first().ok_or_else(|| CoreError::Config("compare needs at least one config".into()))?;
    for c in configs {
        c.validate()?;
        if c.budget != first.budget {
            return Err(CoreError::Config(format!(
                "budget mismatch: {} has {}, {} has {}",
                c.optimizer.name, c.budget, first.optimizer.name, first.budget
            )));
        }
        if c.problem != first.problem {
            return Err(CoreError::Config(format!(
                "problem mismatch: '{}' vs '{}'",
                c.problem.name, first.problem.name
            )));
        }
    }
    let labels = unique_labels(configs.iter().map(|c| c.optimizer.name.as_str()));
    let mut runs = Vec::new();
    for (c, label) in configs.iter().zip(&labels) {
        let mut c = c.clone();
        c.out = out.join(label);
        runs.push(run(&c)?);
    }
    let report = CompareReport::from_runs(&runs)?;
    report.write_csv(&out.join("compare.csv"))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeCell {
    pub x_i: f64,
    pub x_j: f64,
    pub loss: f64,
    /// Unit direction of the gradient projected on (i, j).
    pub g_i: Option<f64>,
    pub g_j: Option<f64>,
    /// Length of the projected gradient.
    pub g_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeSlice {
    pub dims: (usize, usize),
    pub resolution: usize,
    pub base_point: Vec<f64>,
    /// `resolution²` cells, `x_i` varying slowest.
    pub cells: Vec<LandscapeCell>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
}

/// Evaluates a `resolution × resolution` grid over the full bounds of dims
/// `i` and `j`, holding the others at `base_point` (the box centre when
/// `None`).
pub fn landscape(
    problem: &dyn Problem,
    dims: (usize, usize),
    resolution: usize,
    base_point: Option<&[f64]>,
) -> Result<LandscapeSlice> {
    let (i, j) = dims;
    let d = problem.dimension();
    if i == j || i >= d || j >= d {
        return Err(CoreError::Config(format!("dims ({i}, {j}) must be distinct and below {d}")));
    }
    if resolution < 2 {
        return Err(CoreError::Config("resolution must be at least 2".into()));
    }
    let b = problem.bounds();
    let base = match base_point {
        Some(p) if p.len() != d => return Err(CoreError::Dimension { expected: d, got: p.len() }),
        Some(p) => b.clamp(p),
        None => (0..d).map(|k| 0.5 * (b.lower()[k] + b.upper()[k])).collect(),
    };
    let grad = problem.gradient_available();
    let mut cells = Vec::with_capacity(resolution * resolution);
    for xi in linspace(b.lower()[i], b.upper()[i], resolution) {
        for xj in linspace(b.lower()[j], b.upper()[j], resolution) {
            let mut x = base.clone();
            x[i] = xi;
            x[j] = xj;
            let e = problem.evaluate(&x, grad);
            let (g_i, g_j, g_norm) = match &e.gradient {
                Some(g) => {
                    let n = g[i].hypot(g[j]);
                    let (ui, uj) = if n > 0.0 { (g[i] / n, g[j] / n) } else { (0.0, 0.0) };
                    (Some(ui), Some(uj), Some(n))
                }
                None => (None, None, None),
            };
            cells.push(LandscapeCell { x_i: xi, x_j: xj, loss: e.loss, g_i, g_j, g_norm });
        }
    }
    Ok(LandscapeSlice { dims, resolution, base_point: base, cells })
}

impl LandscapeSlice {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["x_i", "x_j", "loss", "g_i", "g_j", "g_norm"]).map_err(csv_error)?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.x_i.to_string(),
                c.x_j.to_string(),
                c.loss.to_string(),
                opt(c.g_i),
                opt(c.g_j),
                opt(c.g_norm),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path, optimizer: &str) -> ExperimentConfig {
        ExperimentConfig {
            problem: ProblemSection {
                name: "sphere".into(),
                options: ProblemOptions { dimension: 3, ..Default::default() },
            },
            optimizer: OptimizerSection { name: optimizer.into(), ..Default::default() },
            budget: 60,
            seeds: vec![0, 1, 2],
            out: dir.to_path_buf(),
        }
    }

    #[test]
    fn toml_dotted_keys_reach_nested_options() {
        let c = ExperimentConfig::from_toml_str(
            "budget = 200\nseeds = [3]\nproblem.name = \"sphere\"\nproblem.dimension = 4\n\
             optimizer.name = \"bo-leap\"\noptimizer.bo_leap.cma.population_size = 12\n",
        )
        .unwrap();
        assert_eq!(c.budget, 200);
        assert_eq!(c.problem.options.dimension, 4);
        assert_eq!(c.optimizer.options.bo_leap.cma.population_size, 12);
        assert_eq!(c.optimizer.options.bo_leap.local_steps, 100);
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::from_toml_str("seeds = []").is_err());
        assert!(ExperimentConfig::from_toml_str("optimizer.name = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml_str("problem.name = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml_str("budgett = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("optimizer.bo.warmupp = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("optimizer.bo_leapp.local_steps = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("problem.dimensionn = 3").is_err());
    }

    #[test]
    fn default_config_round_trips() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn run_writes_rows_and_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&small(dir.path(), "cma-es")).unwrap();
        assert_eq!(s.seeds.len(), 3);
        let text = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 + 1);
        assert!(verify(dir.path()).unwrap().is_empty());

        // Tampering with a log is caught.
        let log = dir.path().join(log_file_name("cma-es", 1));
        let body = fs::read_to_string(&log).unwrap();
        let cut: String = body.lines().skip(1).map(|l| format!("{l}\n")).collect();
        fs::write(&log, cut).unwrap();
        assert!(!verify(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn rerun_gives_same_summary_apart_from_wallclock() {
        let strip = |p: &Path| -> Vec<String> {
            fs::read_to_string(p.join(SUMMARY_FILE))
                .unwrap()
                .lines()
                .map(|l| l.rsplit_once(',').unwrap().0.to_string())
                .collect()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(&small(a.path(), "bo-leap")).unwrap();
        run(&small(b.path(), "bo-leap")).unwrap();
        assert_eq!(strip(a.path()), strip(b.path()));
    }

    #[test]
    fn mann_whitney_reference_values() {
        let (u, p) = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(u, 4.5);
        assert_eq!(p, 1.0);
        // Complete separation of 10 vs 10: U = 0, z = 49.5 / sqrt(175).
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = (10..20).map(f64::from).collect();
        let (u, p) = mann_whitney_u(&x, &y);
        assert_eq!(u, 0.0);
        let z: f64 = 49.5 / 175f64.sqrt();
        let expected = 2.0 * (1.0 - Normal::standard().cdf(z));
        assert!((p - expected).abs() < 1e-15);
        assert!(p < 1e-3);
    }

    #[test]
    fn compare_rows_and_budget_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let a = small(dir.path(), "random");
        let report = compare(&[a.clone(), a.clone()], dir.path()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[1].label, "random#2");
        assert_eq!(report.rows[1].p_value, Some(1.0));

        let single = compare(&[a.clone()], &dir.path().join("one")).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert_eq!(single.rows[0].p_value, None);

        let mut b = small(dir.path(), "cma-es");
        b.budget = 61;
        assert!(matches!(compare(&[a, b], dir.path()), Err(CoreError::Config(_))));
    }

    #[test]
    fn landscape_grid_and_minimum() {
        let p = problems::Sphere::with_center(crate::common::Bounds::uniform(2, -1.0, 1.0).unwrap(), vec![0.0, 0.0])
            .unwrap();
        let s = landscape(&p, (0, 1), 21, None).unwrap();
        assert_eq!(s.cells.len(), 441);
        let best = s.cells.iter().min_by(|a, b| a.loss.total_cmp(&b.loss)).unwrap();
        assert_eq!((best.x_i, best.x_j), (0.0, 0.0));
        assert_eq!(s.cells.first().unwrap().x_i, -1.0);
        assert_eq!(s.cells.last().unwrap().x_j, 1.0);
        let c = &s.cells[0];
        assert!((c.g_i.unwrap().hypot(c.g_j.unwrap()) - 1.0).abs() < 1e-12);
        assert!(landscape(&p, (1, 1), 5, None).is_err());
        assert!(landscape(&p, (0, 2), 5, None).is_err());
    }
}

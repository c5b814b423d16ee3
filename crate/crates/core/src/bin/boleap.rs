use boleap::harness::{self, ExperimentConfig};
use boleap::{optimizers, problems};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "boleap", version, about = "Run and compare global optimizers on simulation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// TOML experiment config; flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    budget: Option<usize>,
    /// Comma-separated list, or a count `n` meaning 0..n
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer over all seeds
    Run(Overrides),
    /// Export a 2D loss and gradient slice as CSV
    Landscape {
        #[command(flatten)]
        overrides: Overrides,
        /// Two distinct dimension indices, e.g. 0,1
        #[arg(long, default_value = "0,1")]
        dims: String,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        /// Values for the fixed dimensions (comma-separated, full length)
        #[arg(long)]
        base: Option<String>,
    },
    /// Run several optimizers on one problem and report medians and p-values
    Compare {
        #[command(flatten)]
        overrides: Overrides,
        /// Extra config files, one per optimizer
        #[arg(long = "with")]
        with: Vec<PathBuf>,
    },
    /// Recompute a run directory's summary from its logs
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad {what} '{p}'")))
        .collect()
}

fn resolve(o: &Overrides) -> Result<ExperimentConfig, String> {
    let mut c = match &o.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &o.problem {
        c.problem.name = p.clone();
    }
    if let Some(p) = &o.optimizer {
        c.optimizer.name = p.clone();
    }
    if let Some(b) = o.budget {
        c.budget = b;
    }
    if let Some(s) = &o.seeds {
        c.seeds = if s.contains(',') { parse_list(s, "seed")? } else {
            let n: u64 = s.trim().parse().map_err(|_| format!("bad seeds '{s}'"))?;
            (0..n).collect()
        };
    }
    if let Some(out) = &o.out {
        c.out = out.clone();
    }
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run(o) => {
            let c = resolve(&o)?;
            let s = harness::run(&c).map_err(|e| e.to_string())?;
            println!(
                "{} on {}: mean best {:.6e} ± {:.3e} (median {:.6e}) over {} seeds -> {}",
                s.optimizer,
                s.problem,
                s.aggregate.mean,
                s.aggregate.ci95,
                s.aggregate.median,
                s.seeds.len(),
                c.out.display()
            );
        }
        Command::Landscape { overrides, dims, resolution, base } => {
            let c = resolve(&overrides)?;
            let d: Vec<usize> = parse_list(&dims, "dimension")?;
            let [i, j] = d[..] else { return Err(format!("--dims needs two indices, got '{dims}'")) };
            let base = base.map(|b| parse_list::<f64>(&b, "base value")).transpose()?;
            let problem = problems::by_name(&c.problem.name, &c.problem.options).map_err(|e| e.to_string())?;
            let slice = harness::landscape(problem.as_ref(), (i, j), resolution, base.as_deref())
                .map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&c.out).map_err(|e| e.to_string())?;
            let path = c.out.join(format!("landscape-{}-{i}-{j}.csv", c.problem.name));
            slice.write_csv(&path).map_err(|e| e.to_string())?;
            println!("{} cells -> {}", slice.cells.len(), path.display());
        }
        Command::Compare { overrides, with } => {
            let names = overrides.optimizer.clone();
            let base = resolve(&Overrides { optimizer: None, ..overrides })?;
            let mut configs = Vec::new();
            match &names {
                Some(names) if with.is_empty() => {
                    for name in names.split(',') {
                        let mut c = base.clone();
                        c.optimizer.name = name.trim().to_string();
                        c.validate().map_err(|e| e.to_string())?;
                        configs.push(c);
                    }
                }
                _ => configs.push(base.clone()),
            }
            for p in &with {
                configs.push(ExperimentConfig::load(p).map_err(|e| e.to_string())?);
            }
            let report = harness::compare(&configs, &base.out).map_err(|e| e.to_string())?;
            print!("{report}");
        }
        Command::Verify { out } => {
            let issues = harness::verify(&out).map_err(|e| e.to_string())?;
            if !issues.is_empty() {
                return Err(format!("{} mismatches:\n  {}", issues.len(), issues.join("\n  ")));
            }
            println!("{}: summary matches logs", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("problems: {}", problems::REGISTRY.join(", "));
            eprintln!("optimizers: {}", optimizers::REGISTRY.join(", "));
            ExitCode::from(2)
        }
    }
}

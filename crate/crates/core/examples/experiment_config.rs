//! Run a small experiment from a TOML config, then recompute its summary
//! from the JSONL logs.

use boleap::harness::{run, verify, ExperimentConfig};

const CONFIG: &str = r#"
budget = 300
seeds = [0, 1, 2, 3]

problem.name = "pinball-2"

optimizer.name = "bo-leap"
optimizer.bo_leap.local_steps = 60
optimizer.bo_leap.cma.population_size = 8
optimizer.bo_leap.cma.parent_count = 4
optimizer.bo_leap.descent.max_steps = 10
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::from_toml_str(CONFIG)?;
    config.out = std::env::temp_dir().join("boleap-pinball");
    let summary = run(&config)?;
    for s in &summary.seeds {
        println!("seed {}: best {:.4} at step {} ({:.2}s)", s.seed, s.best_loss, s.steps_to_best, s.wallclock_s);
    }
    println!("mean {:.4} ± {:.4}", summary.aggregate.mean, summary.aggregate.ci95);
    let issues = verify(&config.out)?;
    println!("verify: {}", if issues.is_empty() { "ok".to_string() } else { issues.join("; ") });
    Ok(())
}

//! Minimize the rugged 10D test function with BO-Leap and show where the
//! budget went.

use boleap::optimizers::BoLeap;
use boleap::problems::SyntheticRugged;
use boleap::{seeded_rng, Optimizer, Phase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = SyntheticRugged::new(10)?;
    let result = BoLeap::default().minimize(&problem, 1000, &mut seeded_rng(0))?;

    let (mut gen, mut desc, mut other) = (0, 0, 0);
    for p in &result.phases {
        match p {
            Phase::Generation { .. } => gen += 1,
            Phase::Descent { .. } => desc += 1,
            _ => other += 1,
        }
    }
    println!("best loss {:.5} at step {}", result.best.loss, result.steps_to_best());
    println!("point {:.3?}", result.best.point.as_slice());
    println!("evaluations: {gen} population, {desc} descent, {other} other");

    let curve = result.best_so_far();
    for step in [10, 100, 250, 500, 1000] {
        println!("  after {step:>4} steps: {:.5}", curve[step - 1]);
    }
    Ok(())
}

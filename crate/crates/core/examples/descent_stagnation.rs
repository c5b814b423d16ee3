//! Clipped gradient descents on the rugged function: most stop early in a
//! shallow valley once the loss stops improving.

use boleap::descent::{descend, DescentConfig};
use boleap::problems::SyntheticRugged;
use boleap::{seeded_rng, Evaluator, Phase};
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = SyntheticRugged::new(3)?;
    let config = DescentConfig { learning_rate: 0.02, max_steps: 60, ..Default::default() };
    let mut eval = Evaluator::new(&problem, 10_000)?;
    let mut rng = seeded_rng(3);
    for k in 0..8 {
        let start: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        let trace = descend(&mut eval, &start, &config, Phase::Descent { trial: 0, descent: k })?;
        let first = trace.steps.first().map(|s| s.loss).unwrap_or(f64::NAN);
        let best = trace.best().map(|s| s.loss).unwrap_or(f64::NAN);
        println!("descent {k}: {:>2} steps, {first:.4} -> {best:.4}, stopped by {:?}", trace.steps.len(), trace.termination);
    }
    println!("{} evaluations used", eval.budget().used());
    Ok(())
}

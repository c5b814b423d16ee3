//! Median best loss of every optimizer on the rugged 10D function over ten
//! seeds, budget 1000. Pass optimizer names to run a subset.

use boleap::harness::{mann_whitney_u, median};
use boleap::optimizers::{by_name, OptimizerOptions, REGISTRY};
use boleap::problems::SyntheticRugged;
use boleap::seeded_rng;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = SyntheticRugged::new(10)?;
    let mut names: Vec<String> = std::env::args().skip(1).collect();
    if names.is_empty() {
        names = REGISTRY.iter().map(|s| s.to_string()).collect();
    }
    let mut reference: Option<Vec<f64>> = None;
    for name in &names {
        let opt = by_name(name, &OptimizerOptions::default())?;
        let t = Instant::now();
        let best = (0..10)
            .map(|s| opt.minimize(&problem, 1000, &mut seeded_rng(s)).map(|r| r.best.loss))
            .collect::<Result<Vec<_>, _>>()?;
        let p = match &reference {
            Some(r) => format!("p={:.2e}", mann_whitney_u(r, &best).1),
            None => "reference".into(),
        };
        println!("{name:>14}  median {:>9.5}  {p:<12} {:>6.1}s", median(&best), t.elapsed().as_secs_f64());
        reference.get_or_insert(best);
    }
    Ok(())
}

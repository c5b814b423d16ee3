//! Pinball with a 4x4 collider grid: a configuration that misses every
//! collider has exactly zero gradient, and descents from it stall.

use boleap::descent::{descend, DescentConfig};
use boleap::problems::{Pinball, PinballConfig};
use boleap::common::normalize;
use boleap::{Evaluator, Phase, Problem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pinball = Pinball::new(PinballConfig::grid(4, 4))?;
    for (label, angles) in [("miss-all", vec![1.5; 16]), ("flat", vec![0.0; 16])] {
        let out = pinball.outcome(&angles);
        let e = pinball.evaluate(&angles, true);
        let g = e.gradient.unwrap_or_default();
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!(
            "{label:>8}: loss {:.3}  collider contacts {}  final {:.2?}  |grad| {gnorm:.3e}",
            e.loss, out.collider_contacts, out.final_position
        );
    }
    let start = normalize(&[1.5; 16], pinball.bounds())?;
    let mut eval = Evaluator::new(&pinball, 100)?;
    let trace = descend(&mut eval, start.as_slice(), &DescentConfig::default(), Phase::Random)?;
    println!("descent from the plateau: {} evaluations, {:?}", trace.steps.len(), trace.termination);
    Ok(())
}

//! Swing a mass-spring cloth onto a floor target and look at the gradient
//! with respect to the 16 patch stiffnesses.

use boleap::problems::{Swing, SwingConfig, SwingLoss, SwingMode};
use boleap::Problem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let swing = Swing::new(SwingConfig { mode: SwingMode::Stiffness, loss: SwingLoss::Corner, ..Default::default() })?;
    let k = vec![200.0; swing.dimension()];
    let e = swing.evaluate(&k, true);
    println!("corner loss {:.4} m at uniform stiffness", e.loss);
    let g = e.gradient.unwrap_or_default();
    for row in g.chunks(4) {
        println!("  {}", row.iter().map(|v| format!("{v:+.2e}")).collect::<Vec<_>>().join(" "));
    }
    let final_state = swing.final_state(&k);
    let lowest = final_state.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    println!("{} particles, lowest at y = {lowest:.4}", final_state.len());

    let velocity = Swing::new(SwingConfig { mode: SwingMode::Velocity, ..Default::default() })?;
    for v in [[0.0, 0.5, 1.5], [0.0, 1.0, 2.5]] {
        println!("launch {v:?}: loss {:.4}", velocity.evaluate(&v, false).loss);
    }
    Ok(())
}

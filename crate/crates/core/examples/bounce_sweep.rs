//! Sweep the downward launch speed of the bouncing ball and mark where the
//! bounce count changes; the loss slope kinks there.

use boleap::problems::{Bounce, BounceConfig};
use boleap::Problem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bounce = Bounce::new(BounceConfig::default())?;
    let vx = 1.0;
    let mut prev: Option<(usize, f64)> = None;
    for k in 0..=100 {
        let vy = -10.0 + 0.1 * k as f64;
        let eval = bounce.evaluate(&[vx, vy], true);
        let count = bounce.outcome(&[vx, vy]).bounces;
        let g = eval.gradient.unwrap_or_default();
        let mark = match prev {
            Some((c, _)) if c != count => "  <- bounce count changes",
            _ => "",
        };
        if k % 5 == 0 || !mark.is_empty() {
            println!("v_y {vy:6.2}  loss {:.4}  dL/dv_y {:+.4}  bounces {count}{mark}", eval.loss, g[1]);
        }
        prev = Some((count, eval.loss));
    }
    Ok(())
}

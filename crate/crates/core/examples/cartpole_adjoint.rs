//! Cart-pole with one velocity command per step: the discrete adjoint gives
//! all 100 partial derivatives in one backward sweep. Spot-check a few
//! against central differences.

use boleap::problems::{Cartpole, CartpoleConfig};
use boleap::{seeded_rng, Problem};
use rand::Rng;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cartpole = Cartpole::new(CartpoleConfig::default())?;
    let mut rng = seeded_rng(5);
    let u: Vec<f64> = (0..cartpole.dimension()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let t = Instant::now();
    let e = cartpole.evaluate(&u, true);
    let g = e.gradient.unwrap();
    println!("loss {:.5}, {} gradient entries in {:?}", e.loss, g.len(), t.elapsed());
    println!("final tip {:.4?}", cartpole.final_tip(&u));
    let h = 1e-6;
    for i in [0, 37, 99] {
        let mut a = u.clone();
        let mut b = u.clone();
        a[i] += h;
        b[i] -= h;
        let fd = (cartpole.evaluate(&a, false).loss - cartpole.evaluate(&b, false).loss) / (2.0 * h);
        println!("  u[{i:>2}]: adjoint {:+.6e}  fd {fd:+.6e}", g[i]);
    }
    Ok(())
}

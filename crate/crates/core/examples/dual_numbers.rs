//! Forward-mode derivatives with dual numbers, and a small projectile
//! written once over `Real` so it runs on plain floats and on duals.

use boleap::diffsim::{forward_gradient, Dual, Real};

fn projectile<T: Real>(v: &[T]) -> T {
    // Height after 0.8 s for launch velocity (vx, vy), with quadratic drag.
    let (mut x, mut y) = (T::zero(), T::zero());
    let (mut vx, mut vy) = (v[0], v[1]);
    let dt = 1e-3;
    for _ in 0..800 {
        let speed = (vx * vx + vy * vy).sqrt();
        vx = vx - vx * speed * (0.05 * dt);
        vy = vy - vy * speed * (0.05 * dt) - T::cst(9.8 * dt);
        x = x + vx * dt;
        y = y + vy * dt;
    }
    (x - T::cst(3.0)) * (x - T::cst(3.0)) + y * y
}

fn main() {
    let x = Dual::<1>::variable(2.0, 0);
    let y = x * x * x + x.sin();
    println!("d/dx (x^3 + sin x) at 2 = {:.6} (exact {:.6})", y.d[0], 12.0 + 2f64.cos());

    let (loss, grad) = forward_gradient::<2, _>(&[4.0, 4.0], |v| projectile(v));
    println!("projectile loss {loss:.5}, gradient {grad:.5?}");
    println!("plain f64 run {:.5}", projectile(&[4.0f64, 4.0]));
}

//! Fit a Gaussian process to noisy samples of a 1D function, tune its
//! hyperparameters by marginal likelihood and pick the next point by LCB.

use boleap::gp::{acquire, fit_hyperparams, AcquisitionConfig, FitConfig, GpModel};
use boleap::seeded_rng;
use rand::Rng;

fn f(x: f64) -> f64 {
    (6.0 * x).sin() + 0.5 * x
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded_rng(4);
    let points: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random::<f64>()]).collect();
    let losses: Vec<f64> = points.iter().map(|p| f(p[0]) + 0.01 * rng.random::<f64>()).collect();

    let hyper = fit_hyperparams(&points, &losses, None, &FitConfig::default(), &mut rng)?;
    println!(
        "signal {:.3}  length {:.3}  noise {:.2e}",
        hyper.signal_variance, hyper.length_scales[0], hyper.noise_variance
    );
    let model = GpModel::fit(points, losses, hyper)?;
    println!("log marginal likelihood {:.3}", model.log_marginal_likelihood());

    println!("   x    truth     mean      std");
    for k in 0..=10 {
        let x = k as f64 / 10.0;
        let (m, v) = model.posterior(&[x]);
        println!("{x:4.1} {:8.4} {m:8.4} {:8.4}", f(x), v.sqrt());
    }
    let next = acquire(&model, &AcquisitionConfig::default(), &mut rng)?;
    println!("next point by LCB: {:.4}", next[0]);
    Ok(())
}

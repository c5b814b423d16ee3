//! Drive the CMA-ES distribution by hand on a shifted ellipsoid: sample,
//! select, recombine, update.

use boleap::cmaes::{sample_population, select_best, update_distribution, weighted_mean, CmaConfig, CmaConstants, PopulationState};
use boleap::seeded_rng;

fn ellipsoid(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, v)| 10f64.powi(i as i32) * (v - 0.6).powi(2)).sum()
}

fn main() {
    let d = 4;
    let config = CmaConfig { population_size: 12, parent_count: 6 };
    let consts = CmaConstants::new(d, &config);
    let mut state = PopulationState::new(vec![0.2; d], 0.2);
    let mut rng = seeded_rng(1);
    for g in 0..150 {
        let pop = sample_population(&state, config.population_size, &mut rng);
        let losses: Vec<f64> = pop.iter().map(|x| ellipsoid(x)).collect();
        let best: Vec<&[f64]> = select_best(&losses, config.parent_count).into_iter().map(|i| pop[i].as_slice()).collect();
        let mean = weighted_mean(&best, &consts.weights);
        state = update_distribution(&state, &mean, &best, &consts);
        if g % 25 == 0 {
            println!("gen {g:>3}  f(mean) {:.3e}  sigma {:.3e}", ellipsoid(&state.mean), state.sigma);
        }
    }
    let axes: Vec<f64> = (0..d).map(|i| state.cov[(i, i)].sqrt()).collect();
    println!("mean {:.5?}", state.mean);
    println!("sqrt diag C {:.3?}", axes);
}

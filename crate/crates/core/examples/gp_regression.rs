//! Samples a disturbance path from the state-space model, observes it
//! sparsely with noise, and reconstructs it by exact GP regression.
//!
//! cargo run --example gp_regression

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use scenario_lfm::gp_ssm::{discretize_exact, matern_to_sde};
use scenario_lfm::kernels::{gp_posterior, KernelSpec, Smoothness};

fn main() -> scenario_lfm::Result<()> {
    let spec = KernelSpec::new(4.0, 4.0, Smoothness::FiveHalves)?;
    let sde = matern_to_sde(&spec)?;
    let dt = 0.2;
    let disc = discretize_exact(&sde, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let steps = 150;
    let mut z = sde.sample_stationary(&mut rng);
    let mut path = Vec::with_capacity(steps);
    for _ in 0..steps {
        path.push(z[0]);
        z = disc.step(&z, &mut rng);
    }
    let times: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();

    let noise_std = 0.3;
    let noise = Normal::new(0.0, noise_std).expect("valid std");
    let train_t: Vec<f64> = times.iter().step_by(10).copied().collect();
    let train_w: Vec<f64> = path.iter().step_by(10).map(|w| w + noise.sample(&mut rng)).collect();

    let post = gp_posterior(&spec, &train_t, &train_w, noise_std * noise_std, &times)?;
    let mut inside = 0;
    println!("{:>6} {:>9} {:>9} {:>9}", "t", "true w", "mean", "2 sigma");
    for k in 0..steps {
        let band = 2.0 * post.variance[k].sqrt();
        if (path[k] - post.mean[k]).abs() <= band {
            inside += 1;
        }
        if k % 5 == 0 {
            println!("{:>6.1} {:>9.4} {:>9.4} {:>9.4}", times[k], path[k], post.mean[k], band);
        }
    }
    println!("truth inside the 2-sigma band at {inside}/{steps} times");
    Ok(())
}

//! Jointly estimates the vehicle state and the unmeasured acceleration
//! disturbance with the particle filter, driving a fixed gentle turn.
//!
//! cargo run --release --example particle_filter

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scenario_lfm::estimator::{pf_init, pf_step, ResamplePolicy, Resampling};
use scenario_lfm::gp_ssm::discretize_exact;
use scenario_lfm::harness::{build_models, ExperimentConfig};
use scenario_lfm::lfm::NominalDynamics;

fn main() -> scenario_lfm::Result<()> {
    let config = ExperimentConfig::paper();
    let models = build_models(&config)?;
    let dt = config.mpc.dt;
    let latent = discretize_exact(&models.truth_latent, dt)?;
    let resampling = Resampling {
        policy: ResamplePolicy::Always,
        roughening: 0.1,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x = [0.0, 0.0, 3.0, 0.0];
    let mut z = models.truth_latent.sample_stationary(&mut rng);
    let mut cloud = pf_init(&models.model, &x, None, 2000, &mut rng)?;
    let u = [0.0, 0.05];

    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>8}", "step", "v", "v est", "w", "w est", "2 sigma");
    let mut inside = 0;
    let steps = 60;
    for k in 0..steps {
        let mut dx = [0.0; 4];
        models.model.nominal().drift(&x, &u, &[z[0]], &mut dx);
        for i in 0..4 {
            x[i] += dt * dx[i];
        }
        z = latent.step(&z, &mut rng);

        let full: Vec<f64> = x.iter().copied().chain(std::iter::repeat_n(0.0, z.len())).collect();
        let y = models.measurement.measure(&full, &mut rng);
        let (next, est) = pf_step(cloud, &models.model, &models.measurement, &u, &y, dt, &resampling, &mut rng)?;
        cloud = next;

        let band = 2.0 * est.std_dev(4);
        if (est.mean[4] - z[0]).abs() <= band {
            inside += 1;
        }
        if k % 4 == 0 {
            println!(
                "{k:>5} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
                x[2], est.mean[2], z[0], est.mean[4], band
            );
        }
    }
    println!("true disturbance inside the 2-sigma band at {inside}/{steps} steps");
    Ok(())
}

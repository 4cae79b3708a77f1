//! Augmented model and particle filter against independent oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use scenario_lfm::estimator::{pf_init, pf_step, Resampling};
use scenario_lfm::gp_ssm::matern_to_sde;
use scenario_lfm::kernels::{KernelSpec, Smoothness};
use scenario_lfm::lfm::{augment, Bicycle, MeasurementModel, NominalDynamics};

/// No physical state: the augmented state is the latent process alone.
struct LatentOnly;

impl NominalDynamics for LatentOnly {
    fn state_dim(&self) -> usize {
        0
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn disturbance_dim(&self) -> usize {
        1
    }
    fn drift(&self, _x: &[f64], _u: &[f64], _w: &[f64], _out: &mut [f64]) {}
}

#[test]
fn zero_noise_rollout_is_forward_euler() {
    let spec = KernelSpec::new(4.0, 4.0, Smoothness::FiveHalves).unwrap();
    let model = augment(Bicycle::default(), vec![matern_to_sde(&spec).unwrap()]).unwrap();

    // hand-written right-hand side of the augmented ODE
    let lambda = 5f64.sqrt() / 4.0;
    let rhs = |x: &[f64], a: f64, delta: f64| -> [f64; 7] {
        let alpha = (0.5 * delta.tan()).atan();
        let w = x[4];
        [
            x[2] * (x[3] + alpha).cos(),
            x[2] * (x[3] + alpha).sin(),
            a + w,
            x[2] / 0.25 * alpha.sin(),
            x[5],
            x[6],
            -lambda.powi(3) * x[4] - 3.0 * lambda * lambda * x[5] - 3.0 * lambda * x[6],
        ]
    };

    let dt = 0.01;
    let mut ours = vec![0.0, 0.0, 1.0, 0.0, 0.8, -0.1, 0.05];
    let mut oracle = ours.clone();
    for k in 0..1000 {
        let t = k as f64 * dt;
        let (a, delta) = (0.5 * (0.7 * t).sin(), 0.2 * (0.3 * t).cos());
        ours = model.em_step(&ours, &[a, delta], &[0.0], dt).unwrap();
        let d = rhs(&oracle, a, delta);
        for i in 0..7 {
            oracle[i] += dt * d[i];
        }
    }
    for i in 0..7 {
        assert!(
            (ours[i] - oracle[i]).abs() <= 1e-12 * oracle[i].abs().max(1.0),
            "state {i}: {} vs {}",
            ours[i],
            oracle[i]
        );
    }
}

/// Scalar Kalman filter for `z' = (1 − λΔt) z + N(0, qΔt)`, `y = z + N(0, r)`.
struct Kalman {
    mean: f64,
    var: f64,
}

impl Kalman {
    fn step(&mut self, phi: f64, qd: f64, r: f64, y: f64) {
        let m = phi * self.mean;
        let p = phi * phi * self.var + qd;
        let gain = p / (p + r);
        self.mean = m + gain * (y - m);
        self.var = (1.0 - gain) * p;
    }
}

#[test]
fn particle_filter_matches_kalman_filter() {
    let spec = KernelSpec::new(1.0, 1.0, Smoothness::Half).unwrap();
    let sde = matern_to_sde(&spec).unwrap();
    let (lambda, q) = (1.0, sde.q);
    let model = augment(LatentOnly, vec![sde]).unwrap();
    let r: f64 = 0.25;
    let sensor = MeasurementModel::diagonal(vec![0], &[r.sqrt()]).unwrap();
    let dt = 0.2;
    let (phi, qd) = (1.0 - lambda * dt, q * dt);

    let runs = 100;
    let particles = 1000;
    let mut errors = Vec::with_capacity(runs);
    for seed in 0..runs as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z: f64 = rng.sample::<f64, _>(StandardNormal);
        let mut kf = Kalman { mean: 0.0, var: 1.0 };
        let mut cloud = pf_init(&model, &[], None, particles, &mut rng).unwrap();
        let mut pf_mean = 0.0;
        for _ in 0..15 {
            z = phi * z + qd.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let y = z + r.sqrt() * rng.sample::<f64, _>(StandardNormal);
            kf.step(phi, qd, r, y);
            let (next, est) =
                pf_step(cloud, &model, &sensor, &[0.0], &[y], dt, &Resampling::default(), &mut rng).unwrap();
            cloud = next;
            pf_mean = est.mean[0];
        }
        errors.push(pf_mean - kf.mean);
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let sd = (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / n.sqrt(), "bias {mean}, standard error {}", sd / n.sqrt());
    // Monte Carlo spread should be of the order of the posterior std over √N_p
    assert!(sd < 0.1, "spread {sd}");
}

fn paper_model() -> scenario_lfm::lfm::AugmentedModel<Bicycle> {
    let spec = KernelSpec::new(4.0, 4.0, Smoothness::FiveHalves).unwrap();
    augment(Bicycle::default(), vec![matern_to_sde(&spec).unwrap()]).unwrap()
}

#[test]
fn uninformative_measurement_returns_the_prediction() {
    let model = paper_model();
    let sensor = MeasurementModel::diagonal(vec![0, 1, 2, 3], &[0.05 * 1e3, 0.05 * 1e3, 0.05 * 1e3, 0.01 * 1e3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4000;
    let cloud = pf_init(&model, &[0.0, 0.0, 3.0, 0.1], None, n, &mut rng).unwrap();
    let u = [1.0, 0.1];

    // prediction without the measurement: noise-free propagation of each particle
    let mut predicted = vec![vec![0.0; 7]; n];
    for (i, p) in predicted.iter_mut().enumerate() {
        *p = model.em_step(cloud.particle(i), &u, &[0.0], 0.2).unwrap();
    }
    let y = [0.6, 0.1, 3.2, 0.1];
    let (_, est) = pf_step(cloud, &model, &sensor, &u, &y, 0.2, &Resampling::default(), &mut rng).unwrap();
    for j in 0..7 {
        let m = predicted.iter().map(|p| p[j]).sum::<f64>() / n as f64;
        let sd = (predicted.iter().map(|p| (p[j] - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        // the last latent component also carries the fresh noise draw
        let extra = if j == 6 { (model.latents()[0].q * 0.2 / n as f64).sqrt() } else { 0.0 };
        let tol = 3.0 * (sd / (n as f64).sqrt() + extra) + 1e-12;
        assert!((est.mean[j] - m).abs() <= tol, "component {j}: {} vs {m}", est.mean[j]);
    }
}

#[test]
fn sharper_measurements_shrink_the_latent_covariance() {
    let model = paper_model();
    let latent_trace = |std: [f64; 4]| -> f64 {
        let sensor = MeasurementModel::diagonal(vec![0, 1, 2, 3], &std).unwrap();
        let truth_sensor = MeasurementModel::diagonal(vec![0, 1, 2, 3], &[0.05, 0.05, 0.05, 0.01]).unwrap();
        let mut total = 0.0;
        for seed in 0..50u64 {
            let mut truth_rng = ChaCha8Rng::seed_from_u64(seed);
            let mut filter_rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let mut cloud = pf_init(&model, &[0.0, 0.0, 3.0, 0.0], None, 500, &mut filter_rng).unwrap();
            let mut x = cloud.particle(0).to_vec();
            let mut trace = 0.0;
            for _ in 0..10 {
                let db = (model.latents()[0].q * 0.2).sqrt() * truth_rng.sample::<f64, _>(StandardNormal);
                x = model.em_step(&x, &[0.0, 0.0], &[db], 0.2).unwrap();
                let y = truth_sensor.measure(&x, &mut truth_rng);
                let (next, est) =
                    pf_step(cloud, &model, &sensor, &[0.0, 0.0], &y, 0.2, &Resampling::default(), &mut filter_rng)
                        .unwrap();
                cloud = next;
                trace = (4..7).map(|i| est.cov[(i, i)]).sum();
            }
            total += trace;
        }
        total / 50.0
    };
    let sharp = latent_trace([0.05, 0.05, 0.05, 0.01]);
    let blunt = latent_trace([0.5, 0.5, 0.5, 0.1]);
    assert!(sharp <= blunt, "{sharp} > {blunt}");
}

//! Bootstrap particle filter over the augmented state.
//!
//! Particles are proposed from the Euler–Maruyama transition and weighted by
//! the Gaussian measurement likelihood. Every particle draws its noise from
//! its own ChaCha stream keyed by `(step seed, particle index)`, so a run is
//! bit-identical regardless of how many rayon workers propagate it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp_ssm::stationary_factor;
use crate::lfm::{AugmentedModel, MeasurementModel, NominalDynamics, MAX_DISTURBANCES};

/// Below this log-likelihood every weight underflows in linear space.
const LOG_LIKELIHOOD_FLOOR: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplePolicy {
    /// Resample after every update.
    #[default]
    Always,
    /// Resample only when the effective sample size drops below `N_p/2`.
    EssBelowHalf,
}

/// When and how the cloud is resampled after an update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resampling {
    #[serde(default)]
    pub policy: ResamplePolicy,
    /// Roughening constant `K`: after resampling, component `j` receives
    /// Gaussian jitter with standard deviation `K·E_j·N_p^(-1/n_a)`, where
    /// `E_j` is the component's range over the cloud. Zero disables it.
    #[serde(default)]
    pub roughening: f64,
}

impl Resampling {
    pub fn validate(&self) -> Result<()> {
        if !(self.roughening >= 0.0 && self.roughening.is_finite()) {
            return Err(Error::Config(format!(
                "roughening constant must be finite and nonnegative, got {}",
                self.roughening
            )));
        }
        Ok(())
    }
}

/// Weighted particle approximation of the filtering posterior.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    n_a: usize,
    /// Particle-major, `len() × n_a`.
    states: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.n_a
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.states[i * self.n_a..(i + 1) * self.n_a]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `1 / Σ wᵢ²`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn estimate(&self) -> Estimate {
        let n_a = self.n_a;
        let mut mean = DVector::zeros(n_a);
        for (i, w) in self.weights.iter().enumerate() {
            for (m, x) in mean.iter_mut().zip(self.particle(i)) {
                *m += w * x;
            }
        }
        let mut cov = DMatrix::zeros(n_a, n_a);
        let mut d = vec![0.0; n_a];
        for (i, w) in self.weights.iter().enumerate() {
            for (k, x) in self.particle(i).iter().enumerate() {
                d[k] = x - mean[k];
            }
            for r in 0..n_a {
                let wr = w * d[r];
                for c in 0..=r {
                    cov[(r, c)] += wr * d[c];
                }
            }
        }
        for r in 0..n_a {
            for c in 0..r {
                cov[(c, r)] = cov[(r, c)];
            }
        }
        Estimate { mean, cov }
    }
}

/// Posterior mean and covariance of the augmented state.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Estimate {
    pub fn std_dev(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0).sqrt()
    }
}

/// Initial cloud: physical part at `x0_phys` (optionally jittered by the
/// measurement noise), latent parts drawn from their stationary laws.
pub fn pf_init<D: NominalDynamics, R: Rng + ?Sized>(
    model: &AugmentedModel<D>,
    x0_phys: &[f64],
    jitter: Option<&MeasurementModel>,
    n_particles: usize,
    rng: &mut R,
) -> Result<ParticleCloud> {
    if n_particles == 0 {
        return Err(Error::Config("particle count must be at least 1".into()));
    }
    if x0_phys.len() != model.n_x() {
        return Err(Error::Config(format!(
            "initial physical state has {} entries, model expects {}",
            x0_phys.len(),
            model.n_x()
        )));
    }
    let n_a = model.n_a();
    let factors: Vec<DMatrix<f64>> = model
        .latents()
        .iter()
        .map(|sde| stationary_factor(&sde.pinf))
        .collect();
    let mut states = Vec::with_capacity(n_particles * n_a);
    let mut xbar = vec![0.0; n_a];
    for _ in 0..n_particles {
        xbar[..model.n_x()].copy_from_slice(x0_phys);
        if let Some(meas) = jitter {
            let mut full = xbar.clone();
            let noisy = meas.measure(&full, rng);
            for (k, &i) in meas.observed().iter().enumerate() {
                if i < model.n_x() {
                    full[i] = noisy[k];
                }
            }
            xbar[..model.n_x()].copy_from_slice(&full[..model.n_x()]);
        }
        for (j, l) in factors.iter().enumerate() {
            let p = l.nrows();
            let e = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let z = l * e;
            let off = model.latent_offset(j);
            xbar[off..off + p].copy_from_slice(z.as_slice());
        }
        states.extend_from_slice(&xbar);
    }
    Ok(ParticleCloud {
        n_a,
        states,
        weights: vec![1.0 / n_particles as f64; n_particles],
    })
}

/// One predict–update–resample cycle.
///
/// Returns the updated cloud and the weighted estimate computed before
/// resampling.
#[allow(clippy::too_many_arguments)]
pub fn pf_step<D: NominalDynamics, R: Rng + ?Sized>(
    mut cloud: ParticleCloud,
    model: &AugmentedModel<D>,
    measurement: &MeasurementModel,
    u_applied: &[f64],
    y: &[f64],
    dt: f64,
    resampling: &Resampling,
    rng: &mut R,
) -> Result<(ParticleCloud, Estimate)> {
    let n_a = model.n_a();
    if cloud.n_a != n_a {
        return Err(Error::Config("particle dimension does not match the model".into()));
    }
    if y.len() != measurement.dim() {
        return Err(Error::Config(format!(
            "measurement has {} entries, model expects {}",
            y.len(),
            measurement.dim()
        )));
    }
    let step_seed: u64 = rng.random();
    let sd: Vec<f64> = model
        .latents()
        .iter()
        .map(|sde| (sde.q * dt).sqrt())
        .collect();

    let mut log_lik = vec![0.0; cloud.len()];
    cloud
        .states
        .par_chunks_mut(n_a)
        .zip(log_lik.par_iter_mut())
        .enumerate()
        .try_for_each(|(i, (xbar, ll))| -> Result<()> {
            let mut stream = ChaCha8Rng::seed_from_u64(step_seed);
            stream.set_stream(i as u64);
            let mut dbeta = [0.0; MAX_DISTURBANCES];
            for (d, s) in dbeta.iter_mut().zip(&sd) {
                *d = s * stream.sample::<f64, _>(StandardNormal);
            }
            let prev = xbar.to_vec();
            model.em_step_into(&prev, u_applied, &dbeta[..sd.len()], dt, xbar)?;
            *ll = measurement.log_likelihood(y, xbar);
            Ok(())
        })?;

    let max_ll = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max_ll > LOG_LIKELIHOOD_FLOOR) {
        let predicted = measurement.predict(cloud.estimate().mean.as_slice());
        let innovation_norm = y
            .iter()
            .zip(&predicted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        return Err(Error::Degeneracy { innovation_norm });
    }
    let mut total = 0.0;
    for (w, ll) in cloud.weights.iter_mut().zip(&log_lik) {
        *w *= (ll - max_ll).exp();
        total += *w;
    }
    cloud.weights.iter_mut().for_each(|w| *w /= total);

    let estimate = cloud.estimate();
    let resample = match resampling.policy {
        ResamplePolicy::Always => true,
        ResamplePolicy::EssBelowHalf => cloud.ess() < cloud.len() as f64 / 2.0,
    };
    if resample {
        let offset: f64 = rng.random();
        cloud = systematic_resample(&cloud, offset);
        if resampling.roughening > 0.0 {
            roughen(&mut cloud, resampling.roughening, rng.random());
        }
    }
    Ok((cloud, estimate))
}

/// Adds independent Gaussian jitter scaled by each component's spread.
///
/// Particle `i` draws from stream `i` of a generator keyed by `seed`.
pub fn roughen(cloud: &mut ParticleCloud, k: f64, seed: u64) {
    let n_a = cloud.n_a;
    let n = cloud.len();
    if n < 2 {
        return;
    }
    let mut lo = vec![f64::INFINITY; n_a];
    let mut hi = vec![f64::NEG_INFINITY; n_a];
    for p in cloud.states.chunks(n_a) {
        for j in 0..n_a {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let shrink = k * (n as f64).powf(-1.0 / n_a as f64);
    let sd: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| shrink * (h - l)).collect();
    cloud.states.par_chunks_mut(n_a).enumerate().for_each(|(i, p)| {
        let mut stream = ChaCha8Rng::seed_from_u64(seed);
        stream.set_stream(i as u64);
        for (x, s) in p.iter_mut().zip(&sd) {
            *x += s * stream.sample::<f64, _>(StandardNormal);
        }
    });
}

/// Systematic resampling with a single offset `offset ∈ [0, 1)`.
pub fn systematic_resample(cloud: &ParticleCloud, offset: f64) -> ParticleCloud {
    let n = cloud.len();
    let n_a = cloud.n_a;
    let mut states = Vec::with_capacity(cloud.states.len());
    let mut cumulative = cloud.weights[0];
    let mut src = 0;
    for k in 0..n {
        let target = (k as f64 + offset) / n as f64;
        while cumulative < target && src + 1 < n {
            src += 1;
            cumulative += cloud.weights[src];
        }
        states.extend_from_slice(&cloud.states[src * n_a..(src + 1) * n_a]);
    }
    ParticleCloud {
        n_a,
        states,
        weights: vec![1.0 / n as f64; n],
    }
}

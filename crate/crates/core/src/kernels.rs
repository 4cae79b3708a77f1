//! Stationary Matérn covariance functions and exact GP regression.
//!
//! Only the half-integer smoothness values 1/2, 3/2 and 5/2 are supported.
//! Their covariance functions have closed forms and their spectral densities
//! are rational, which is what makes the state-space conversion in
//! [`crate::gp_ssm`] exact.
//!
//! [`gp_posterior`] is not used on the control path. It exists so the
//! state-space representation can be checked against plain GP regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative jitter added to Gram diagonals before factorization.
pub const GRAM_JITTER: f64 = 1e-10;

/// Half-integer Matérn smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "3/2")]
    ThreeHalves,
    #[serde(rename = "5/2")]
    FiveHalves,
}

impl Smoothness {
    pub fn value(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }

    /// Order `p = ν + 1/2` of the equivalent state-space model.
    pub fn order(self) -> usize {
        match self {
            Smoothness::Half => 1,
            Smoothness::ThreeHalves => 2,
            Smoothness::FiveHalves => 3,
        }
    }

    /// Maps a numeric ν onto a supported variant.
    pub fn from_value(nu: f64) -> Result<Self> {
        const ALL: [Smoothness; 3] = [
            Smoothness::Half,
            Smoothness::ThreeHalves,
            Smoothness::FiveHalves,
        ];
        ALL.into_iter()
            .find(|s| (s.value() - nu).abs() < 1e-12)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unsupported Matérn smoothness ν = {nu}; expected 1/2, 3/2 or 5/2"
                ))
            })
    }
}

/// Matérn hyperparameters `(σ², ℓ, ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    /// Variance scale σ².
    pub sigma2: f64,
    /// Length scale ℓ in seconds.
    pub ell: f64,
    pub nu: Smoothness,
}

impl KernelSpec {
    pub fn new(sigma2: f64, ell: f64, nu: Smoothness) -> Result<Self> {
        let spec = Self { sigma2, ell, nu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "kernel variance must be positive, got {}",
                self.sigma2
            )));
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(Error::Config(format!(
                "kernel length scale must be positive, got {}",
                self.ell
            )));
        }
        Ok(())
    }

    /// `λ = √(2ν)/ℓ`, the rate shared by the covariance and its SDE.
    pub fn lambda(&self) -> f64 {
        (2.0 * self.nu.value()).sqrt() / self.ell
    }
}

/// Evaluates `κ(|τ|)` with the closed half-integer forms.
pub fn matern_eval(spec: &KernelSpec, tau: f64) -> f64 {
    let r = spec.lambda() * tau.abs();
    let poly = match spec.nu {
        Smoothness::Half => 1.0,
        Smoothness::ThreeHalves => 1.0 + r,
        Smoothness::FiveHalves => 1.0 + r + r * r / 3.0,
    };
    spec.sigma2 * poly * (-r).exp()
}

/// Covariance matrix `κ(t_i − t_j)` over a set of sample instants.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub times: Vec<f64>,
}

impl GramMatrix {
    pub fn new(spec: &KernelSpec, times: &[f64]) -> Self {
        let entries = cross_covariance(spec, times, times);
        Self {
            entries,
            times: times.to_vec(),
        }
    }
}

/// `K[i, j] = κ(a_i − b_j)`.
pub fn cross_covariance(spec: &KernelSpec, a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| matern_eval(spec, a[i] - b[j]))
}

/// Predictive means and variances of an exact GP posterior.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Exact GP regression with observation noise `noise_var`.
///
/// Training times must be distinct. A jitter of `GRAM_JITTER·σ²` is added to
/// the Gram diagonal on top of `noise_var`.
pub fn gp_posterior(
    spec: &KernelSpec,
    train_times: &[f64],
    train_values: &[f64],
    noise_var: f64,
    test_times: &[f64],
) -> Result<Posterior> {
    spec.validate()?;
    if train_times.len() != train_values.len() {
        return Err(Error::Config(format!(
            "{} training times but {} training values",
            train_times.len(),
            train_values.len()
        )));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::Config(format!(
            "noise variance must be nonnegative, got {noise_var}"
        )));
    }
    if train_times.is_empty() {
        return Ok(Posterior {
            mean: vec![0.0; test_times.len()],
            variance: vec![spec.sigma2; test_times.len()],
        });
    }

    let jitter = GRAM_JITTER * spec.sigma2;
    let mut gram = GramMatrix::new(spec, train_times).entries;
    for i in 0..gram.nrows() {
        gram[(i, i)] += noise_var + jitter;
    }
    let chol = gram.cholesky().ok_or(Error::Conditioning { jitter })?;

    let k_cross = cross_covariance(spec, train_times, test_times);
    let alpha = chol.solve(&DVector::from_column_slice(train_values));
    let mean = k_cross.tr_mul(&alpha);
    // v = L⁻¹ K_N*; variance = κ(0) − colsum(v²)
    let v = chol.l().solve_lower_triangular(&k_cross).ok_or(Error::Conditioning { jitter })?;
    let variance = (0..test_times.len())
        .map(|j| (spec.sigma2 - v.column(j).norm_squared()).max(0.0))
        .collect();

    Ok(Posterior {
        mean: mean.iter().copied().collect(),
        variance,
    })
}

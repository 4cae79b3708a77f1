use serde::Serialize;

use crate::error::Result;
use crate::gp_ssm::{autocovariance, matern_to_sde};
use crate::kernels::{matern_eval, KernelSpec};

/// Worst normalized gap between the state-space autocovariance and the
/// kernel over `τ ∈ {0, 0.1ℓ, …, 5ℓ}`.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub spec: KernelSpec,
    pub max_error: f64,
    pub worst_lag: f64,
    pub stationary_variance_error: f64,
}

impl EquivalenceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_error < tol && self.stationary_variance_error < tol
    }
}

pub fn equivalence_report(spec: &KernelSpec) -> Result<EquivalenceReport> {
    let sde = matern_to_sde(spec)?;
    let mut max_error = 0.0;
    let mut worst_lag = 0.0;
    for i in 0..=50 {
        let tau = i as f64 * 0.1 * spec.ell;
        let err = (autocovariance(&sde, tau) - matern_eval(spec, tau)).abs() / spec.sigma2;
        if err > max_error {
            max_error = err;
            worst_lag = tau;
        }
    }
    Ok(EquivalenceReport {
        spec: *spec,
        max_error,
        worst_lag,
        stationary_variance_error: ((sde.pinf[(0, 0)] - spec.sigma2) / spec.sigma2).abs(),
    })
}

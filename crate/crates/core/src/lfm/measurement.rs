use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Linear selection measurement `y = x̄[observed] + v`, `v ~ N(0, R_v)`.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    observed: Vec<usize>,
    r: DMatrix<f64>,
    chol: DMatrix<f64>,
    /// Row-major `L⁻¹`, used to whiten innovations.
    chol_inv: Vec<f64>,
    log_norm: f64,
}

impl MeasurementModel {
    pub fn new(observed: Vec<usize>, r: DMatrix<f64>) -> Result<Self> {
        let m = observed.len();
        if r.nrows() != m || r.ncols() != m {
            return Err(Error::Config(format!(
                "measurement covariance is {}×{} but {m} states are observed",
                r.nrows(),
                r.ncols()
            )));
        }
        if (&r - r.transpose()).amax() > 1e-12 * r.amax().max(1.0) {
            return Err(Error::Config("measurement covariance is not symmetric".into()));
        }
        let chol = r
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Config("measurement covariance is not positive definite".into()))?
            .l();
        let chol_inv = chol
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("measurement covariance is singular".into()))?;
        let log_det: f64 = chol.diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let log_norm = -0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(Self {
            observed,
            r,
            chol,
            chol_inv: chol_inv.transpose().as_slice().to_vec(),
            log_norm,
        })
    }

    /// Diagonal noise from per-channel standard deviations.
    pub fn diagonal(observed: Vec<usize>, std_devs: &[f64]) -> Result<Self> {
        let r = DMatrix::from_diagonal(&DVector::from_iterator(
            std_devs.len(),
            std_devs.iter().map(|s| s * s),
        ));
        Self::new(observed, r)
    }

    pub fn dim(&self) -> usize {
        self.observed.len()
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Noise-free observation `h(x̄)`.
    pub fn predict(&self, xbar: &[f64]) -> Vec<f64> {
        self.observed.iter().map(|&i| xbar[i]).collect()
    }

    /// `h(x̄) + v` with a fresh noise draw.
    pub fn measure<R: Rng + ?Sized>(&self, xbar: &[f64], rng: &mut R) -> Vec<f64> {
        let e = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = &self.chol * e;
        self.observed
            .iter()
            .zip(noise.iter())
            .map(|(&i, n)| xbar[i] + n)
            .collect()
    }

    /// `log N(y; h(x̄), R_v)`.
    pub fn log_likelihood(&self, y: &[f64], xbar: &[f64]) -> f64 {
        let m = self.dim();
        let mut innov = [0.0; 16];
        let mut heap;
        let innov: &mut [f64] = if m <= innov.len() {
            &mut innov[..m]
        } else {
            heap = vec![0.0; m];
            &mut heap
        };
        for (k, &i) in self.observed.iter().enumerate() {
            innov[k] = y[k] - xbar[i];
        }
        let mut quad = 0.0;
        for r in 0..m {
            let whitened: f64 = (0..=r).map(|c| self.chol_inv[r * m + c] * innov[c]).sum();
            quad += whitened * whitened;
        }
        self.log_norm - 0.5 * quad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_limit_returns_physical_states() {
        let m = MeasurementModel::diagonal(vec![0, 1, 2, 3], &[1e-12; 4]).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0, 9.0, 9.0, 9.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = m.measure(&x, &mut rng);
        for i in 0..4 {
            assert!((y[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn latent_states_never_observed() {
        let m = MeasurementModel::diagonal(vec![0, 1, 2, 3], &[0.05, 0.05, 0.05, 0.01]).unwrap();
        let mut a = [1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ya = m.measure(&a, &mut rng);
        a[4..].copy_from_slice(&[100.0, -50.0, 7.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let yb = m.measure(&a, &mut rng);
        assert_eq!(ya, yb);
        assert_eq!(m.dim(), 4);
    }

    #[test]
    fn empirical_covariance_matches() {
        let r = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        let m = MeasurementModel::new(vec![0, 1], r.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let x = [1.5, -0.5];
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let y = m.measure(&x, &mut rng);
            let d = DVector::from_vec(vec![y[0] - x[0], y[1] - x[1]]);
            acc += &d * d.transpose();
        }
        acc /= n as f64;
        for i in 0..2 {
            for j in 0..2 {
                assert!(((acc[(i, j)] - r[(i, j)]) / r[(i, j)]).abs() < 0.05, "{acc}");
            }
        }
    }

    #[test]
    fn log_likelihood_matches_gaussian_density() {
        let r = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        let m = MeasurementModel::new(vec![1, 0], r.clone()).unwrap();
        let x = [0.3, -0.2];
        let y = [0.1, 0.5];
        let d = DVector::from_vec(vec![y[0] - x[1], y[1] - x[0]]);
        let quad = (d.transpose() * r.clone().try_inverse().unwrap() * &d)[(0, 0)];
        let expected = -0.5 * (quad + r.determinant().ln() + 2.0 * (2.0 * std::f64::consts::PI).ln());
        assert!((m.log_likelihood(&y, &x) - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_covariance() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(MeasurementModel::new(vec![0, 1], bad).is_err());
        assert!(MeasurementModel::new(vec![0], DMatrix::identity(2, 2)).is_err());
    }
}

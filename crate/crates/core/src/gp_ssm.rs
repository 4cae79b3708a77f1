//! State-space form of half-integer Matérn processes.
//!
//! A Matérn GP with smoothness ν = p − 1/2 is the output `w = C z` of the
//! linear SDE `dz = A z dt + B dβ`, where `A` is the companion matrix of
//! `(s + λ)^p` and `dβ` is white noise with spectral density `q`.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Smoothness};

/// `2√π·Γ(ν+1/2)/Γ(ν)` for the supported half-integer ν.
fn spectral_constant(nu: Smoothness) -> f64 {
    match nu {
        Smoothness::Half => 2.0,
        Smoothness::ThreeHalves => 4.0,
        Smoothness::FiveHalves => 16.0 / 3.0,
    }
}

/// Spectral density `S(ω)` of the Matérn covariance.
pub fn spectral_density(spec: &KernelSpec, omega: f64) -> f64 {
    let nu = spec.nu.value();
    let lambda = spec.lambda();
    spec.sigma2
        * spectral_constant(spec.nu)
        * lambda.powf(2.0 * nu)
        * (lambda * lambda + omega * omega).powf(-(nu + 0.5))
}

/// Continuous-time latent SDE `dz = A z dt + B dβ`, `w = C z`.
#[derive(Debug, Clone)]
pub struct LatentSde {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    /// Spectral density of the driving white noise.
    pub q: f64,
    /// Stationary covariance, solving `A P + P Aᵀ + B q Bᵀ = 0`.
    pub pinf: DMatrix<f64>,
}

impl LatentSde {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Row-major JSON with keys `A`, `B`, `C`, `q`, `Pinf`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        serde_json::json!({
            "A": rows(&self.a),
            "B": self.b.iter().copied().collect::<Vec<_>>(),
            "C": self.c.iter().copied().collect::<Vec<_>>(),
            "q": self.q,
            "Pinf": rows(&self.pinf),
        })
    }

    /// Draws `z ~ N(0, P∞)`.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let l = stationary_factor(&self.pinf);
        let e = DVector::from_fn(self.order(), |_, _| rng.sample::<f64, _>(StandardNormal));
        l * e
    }
}

/// Lower Cholesky factor of a PSD covariance, with a tiny diagonal nudge when
/// rounding leaves it marginally indefinite.
pub(crate) fn stationary_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = cov.clone().cholesky() {
        return ch.l();
    }
    let scale = cov.diagonal().max().max(f64::MIN_POSITIVE);
    let mut nudged = cov.clone();
    for i in 0..nudged.nrows() {
        nudged[(i, i)] += 1e-12 * scale;
    }
    nudged
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| DMatrix::from_diagonal(&cov.diagonal().map(|d| d.max(0.0).sqrt())))
}

/// Builds the companion-form SDE of a Matérn kernel.
pub fn matern_to_sde(spec: &KernelSpec) -> Result<LatentSde> {
    spec.validate()?;
    let p = spec.nu.order();
    let lambda = spec.lambda();

    // (s + λ)^p = s^p + Σ_i binom(p, i) λ^(p−i) s^i
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for i in 0..p {
        a[(p - 1, i)] = -(binomial(p, i) as f64) * lambda.powi((p - i) as i32);
    }
    let mut b = DVector::zeros(p);
    b[p - 1] = 1.0;
    let mut c = RowDVector::zeros(p);
    c[0] = 1.0;
    let q = spec.sigma2 * spectral_constant(spec.nu) * lambda.powf(2.0 * spec.nu.value());

    let noise = &b * q * b.transpose();
    let pinf = solve_continuous_lyapunov(&a, &noise)?;
    Ok(LatentSde { a, b, c, q, pinf })
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Solves `A X + X Aᵀ + W = 0` by vectorization.
///
/// Dense Kronecker solve; only meant for the small latent orders used here.
pub fn solve_continuous_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let system = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -DVector::from_column_slice(w.as_slice());
    let vec_x = system.lu().solve(&rhs).ok_or_else(|| {
        Error::Config("Lyapunov operator is singular; drift matrix is not Hurwitz".into())
    })?;
    let x = DMatrix::from_column_slice(n, n, vec_x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// `C exp(Aτ) P∞ Cᵀ` for `τ ≥ 0`.
pub fn autocovariance(sde: &LatentSde, tau: f64) -> f64 {
    let phi = (&sde.a * tau.abs()).exp();
    (&sde.c * phi * &sde.pinf * sde.c.transpose())[(0, 0)]
}

/// Exact zero-order discretization of a latent SDE.
#[derive(Debug, Clone)]
pub struct DiscreteLatent {
    pub ad: DMatrix<f64>,
    pub qd: DMatrix<f64>,
    pub dt: f64,
    qd_factor: DMatrix<f64>,
}

impl DiscreteLatent {
    /// `z ← Ad z + ε`, `ε ~ N(0, Qd)`.
    pub fn step<R: Rng + ?Sized>(&self, z: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let e = DVector::from_fn(z.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.ad * z + &self.qd_factor * e
    }
}

/// Van Loan construction of `(Ad, Qd)`.
pub fn discretize_exact(sde: &LatentSde, dt: f64) -> Result<DiscreteLatent> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let p = sde.order();
    let noise = &sde.b * sde.q * sde.b.transpose();
    let mut m = DMatrix::zeros(2 * p, 2 * p);
    m.view_mut((0, 0), (p, p)).copy_from(&(-&sde.a));
    m.view_mut((0, p), (p, p)).copy_from(&noise);
    m.view_mut((p, p), (p, p)).copy_from(&sde.a.transpose());
    let g = (m * dt).exp();
    let ad = g.view((p, p), (p, p)).transpose();
    let qd = &ad * g.view((0, p), (p, p));
    let qd = (&qd + qd.transpose()) * 0.5;
    let qd_factor = stationary_factor(&qd);
    Ok(DiscreteLatent {
        ad,
        qd,
        dt,
        qd_factor,
    })
}

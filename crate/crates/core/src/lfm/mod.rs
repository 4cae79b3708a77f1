//! Latent force models: a nominal physical model driven by GP disturbances
//! realized as linear SDEs, composed into one augmented state `x̄ = [x; z]`.

mod bicycle;
mod measurement;

pub use bicycle::{bicycle_drift, slip_angle, Bicycle, BicycleState};
pub use measurement::MeasurementModel;

use crate::error::{Error, Result};
use crate::gp_ssm::LatentSde;

/// Upper bound on simultaneous latent disturbance channels.
pub const MAX_DISTURBANCES: usize = 4;

/// Continuous-time physical dynamics `dx/dt = f(x, u, w)`.
///
/// Jacobians are row-major. The default implementation uses central
/// differences; models with cheap analytic derivatives should override it.
pub trait NominalDynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn disturbance_dim(&self) -> usize;

    fn drift(&self, x: &[f64], u: &[f64], w: &[f64], out: &mut [f64]);

    fn state_names(&self) -> Vec<String> {
        (0..self.state_dim()).map(|i| format!("x{i}")).collect()
    }

    /// Rejects inputs outside the model's domain of definition.
    fn check_input(&self, _u: &[f64]) -> Result<()> {
        Ok(())
    }

    fn jacobians(
        &self,
        x: &[f64],
        u: &[f64],
        w: &[f64],
        jx: &mut [f64],
        ju: &mut [f64],
        jw: &mut [f64],
    ) {
        let n = self.state_dim();
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        let mut column = |args: [&[f64]; 3], which: usize, jac: &mut [f64], cols: usize| {
            let mut work: Vec<Vec<f64>> = args.iter().map(|a| a.to_vec()).collect();
            for j in 0..cols {
                let base = work[which][j];
                let h = 1e-6 * base.abs().max(1.0);
                work[which][j] = base + h;
                self.drift(&work[0], &work[1], &work[2], &mut plus);
                work[which][j] = base - h;
                self.drift(&work[0], &work[1], &work[2], &mut minus);
                work[which][j] = base;
                for i in 0..n {
                    jac[i * cols + j] = (plus[i] - minus[i]) / (2.0 * h);
                }
            }
        };
        column([x, u, w], 0, jx, n);
        column([x, u, w], 1, ju, self.input_dim());
        column([x, u, w], 2, jw, self.disturbance_dim());
    }
}

/// Nominal dynamics augmented with latent GP states.
///
/// Latent channel `i` produces `w_i = C_i z_i`, which is fed to the nominal
/// drift as its `i`-th disturbance input.
#[derive(Debug, Clone)]
pub struct AugmentedModel<D> {
    nominal: D,
    latents: Vec<LatentSde>,
    /// Row-major drift matrices of each latent block.
    latent_a: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    n_a: usize,
}

/// Composes a nominal model with its latent disturbance SDEs.
pub fn augment<D: NominalDynamics>(nominal: D, latents: Vec<LatentSde>) -> Result<AugmentedModel<D>> {
    if latents.len() != nominal.disturbance_dim() {
        return Err(Error::Config(format!(
            "nominal model takes {} disturbance inputs but {} latent channels were supplied",
            nominal.disturbance_dim(),
            latents.len()
        )));
    }
    if latents.len() > MAX_DISTURBANCES {
        return Err(Error::Config(format!(
            "at most {MAX_DISTURBANCES} latent channels are supported"
        )));
    }
    let mut offsets = Vec::with_capacity(latents.len());
    let mut n_a = nominal.state_dim();
    for sde in &latents {
        offsets.push(n_a);
        n_a += sde.order();
    }
    let latent_a = latents
        .iter()
        .map(|sde| sde.a.transpose().as_slice().to_vec())
        .collect();
    Ok(AugmentedModel {
        nominal,
        latents,
        latent_a,
        offsets,
        n_a,
    })
}

impl<D: NominalDynamics> AugmentedModel<D> {
    pub fn nominal(&self) -> &D {
        &self.nominal
    }

    pub fn latents(&self) -> &[LatentSde] {
        &self.latents
    }

    /// Offset of latent block `i` inside the augmented state.
    pub fn latent_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn n_x(&self) -> usize {
        self.nominal.state_dim()
    }

    pub fn n_u(&self) -> usize {
        self.nominal.input_dim()
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    /// Number of scalar white-noise inputs (one per latent channel).
    pub fn noise_dim(&self) -> usize {
        self.latents.len()
    }

    pub fn state_names(&self) -> Vec<String> {
        let mut names = self.nominal.state_names();
        for (i, sde) in self.latents.iter().enumerate() {
            for j in 0..sde.order() {
                names.push(format!("z{i}_{j}"));
            }
        }
        names
    }

    /// Latent outputs `w_i = C_i z_i`.
    pub fn disturbances(&self, xbar: &[f64]) -> [f64; MAX_DISTURBANCES] {
        let mut w = [0.0; MAX_DISTURBANCES];
        for (i, sde) in self.latents.iter().enumerate() {
            let z = &xbar[self.offsets[i]..self.offsets[i] + sde.order()];
            w[i] = sde.c.iter().zip(z).map(|(c, z)| c * z).sum();
        }
        w
    }

    /// `f̄([x; z], u) = [f(x, u, Cz); A z]`.
    pub fn drift(&self, xbar: &[f64], u: &[f64], out: &mut [f64]) {
        let n_x = self.n_x();
        let w = self.disturbances(xbar);
        self.nominal
            .drift(&xbar[..n_x], u, &w[..self.noise_dim()], &mut out[..n_x]);
        for (i, sde) in self.latents.iter().enumerate() {
            let p = sde.order();
            let off = self.offsets[i];
            let a = &self.latent_a[i];
            for r in 0..p {
                out[off + r] = (0..p).map(|c| a[r * p + c] * xbar[off + c]).sum();
            }
        }
    }

    /// Row-major Jacobians of `f̄`: `jx` is `n_a × n_a`, `ju` is `n_a × n_u`.
    pub fn drift_jacobians(&self, xbar: &[f64], u: &[f64], jx: &mut [f64], ju: &mut [f64]) {
        let (n_x, n_u, n_a, n_w) = (self.n_x(), self.n_u(), self.n_a, self.noise_dim());
        let w = self.disturbances(xbar);
        let mut fx = [0.0; 64];
        let mut fw = [0.0; 32];
        let mut big_fx;
        let fx: &mut [f64] = if n_x * n_x <= fx.len() {
            &mut fx[..n_x * n_x]
        } else {
            big_fx = vec![0.0; n_x * n_x];
            &mut big_fx
        };
        let mut big_fw;
        let fw: &mut [f64] = if n_x * n_w <= fw.len() {
            &mut fw[..n_x * n_w]
        } else {
            big_fw = vec![0.0; n_x * n_w];
            &mut big_fw
        };
        jx.iter_mut().for_each(|v| *v = 0.0);
        self.nominal
            .jacobians(&xbar[..n_x], u, &w[..n_w], fx, &mut ju[..n_x * n_u], fw);
        ju[n_x * n_u..].iter_mut().for_each(|v| *v = 0.0);
        for r in 0..n_x {
            jx[r * n_a..r * n_a + n_x].copy_from_slice(&fx[r * n_x..(r + 1) * n_x]);
            for (i, sde) in self.latents.iter().enumerate() {
                let dfdw = fw[r * n_w + i];
                if dfdw != 0.0 {
                    for (j, c) in sde.c.iter().enumerate() {
                        jx[r * n_a + self.offsets[i] + j] += dfdw * c;
                    }
                }
            }
        }
        for (i, sde) in self.latents.iter().enumerate() {
            let p = sde.order();
            let off = self.offsets[i];
            for r in 0..p {
                for c in 0..p {
                    jx[(off + r) * n_a + off + c] = self.latent_a[i][r * p + c];
                }
            }
        }
    }

    /// Adds `B̄ dβ` to an augmented state in place.
    pub fn add_noise(&self, xbar: &mut [f64], dbeta: &[f64]) {
        for (i, sde) in self.latents.iter().enumerate() {
            let off = self.offsets[i];
            for (j, b) in sde.b.iter().enumerate() {
                xbar[off + j] += b * dbeta[i];
            }
        }
    }

    /// One Euler–Maruyama step `x̄ + f̄(x̄, u)Δt + B̄ dβ`, written to `out`.
    pub fn em_step_into(
        &self,
        xbar: &[f64],
        u: &[f64],
        dbeta: &[f64],
        dt: f64,
        out: &mut [f64],
    ) -> Result<()> {
        self.nominal.check_input(u)?;
        self.drift(xbar, u, out);
        for (o, x) in out.iter_mut().zip(xbar) {
            *o = x + *o * dt;
        }
        self.add_noise(out, dbeta);
        self.check_finite(out)
    }

    pub fn em_step(&self, xbar: &[f64], u: &[f64], dbeta: &[f64], dt: f64) -> Result<Vec<f64>> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let mut out = vec![0.0; self.n_a];
        self.em_step_into(xbar, u, dbeta, dt, &mut out)?;
        Ok(out)
    }

    pub(crate) fn check_finite(&self, xbar: &[f64]) -> Result<()> {
        match xbar.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(index) => Err(Error::NonFinite {
                state: self.state_names()[index].clone(),
                index,
                value: xbar[index],
            }),
        }
    }
}

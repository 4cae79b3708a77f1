use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::NominalDynamics;
use crate::error::{Error, Result};

pub const PX: usize = 0;
pub const PY: usize = 1;
pub const V: usize = 2;
pub const PSI: usize = 3;

/// Physical state of the kinematic bicycle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BicycleState {
    pub px: f64,
    pub py: f64,
    pub v: f64,
    /// Heading in radians; kept unwrapped internally.
    pub psi: f64,
}

impl BicycleState {
    pub fn to_array(self) -> [f64; 4] {
        [self.px, self.py, self.v, self.psi]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            px: x[PX],
            py: x[PY],
            v: x[V],
            psi: x[PSI],
        }
    }
}

/// Slip angle `α(δ) = atan(0.5·tan δ)`.
pub fn slip_angle(delta: f64) -> f64 {
    (0.5 * delta.tan()).atan()
}

fn slip_angle_derivative(delta: f64) -> f64 {
    let t = delta.tan();
    0.5 * (1.0 + t * t) / (1.0 + 0.25 * t * t)
}

/// Kinematic bicycle model with an additive disturbance on one state equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bicycle {
    /// Vehicle length `l` (m).
    pub length: f64,
    /// State equation receiving the disturbance `w`.
    pub disturbance_state: usize,
}

impl Default for Bicycle {
    fn default() -> Self {
        Self {
            length: 0.5,
            disturbance_state: V,
        }
    }
}

impl Bicycle {
    pub fn new(length: f64, disturbance_state: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("vehicle length must be positive, got {length}")));
        }
        if disturbance_state > PSI {
            return Err(Error::Config(format!(
                "disturbance target index {disturbance_state} is not a bicycle state"
            )));
        }
        Ok(Self {
            length,
            disturbance_state,
        })
    }
}

/// `[v cos(ψ+α), v sin(ψ+α), a + w, v/(l/2)·sin α]` for the default
/// velocity-disturbed bicycle.
pub fn bicycle_drift(
    model: &Bicycle,
    state: &BicycleState,
    accel: f64,
    steer: f64,
    w: f64,
) -> Result<[f64; 4]> {
    model.check_input(&[accel, steer])?;
    let mut out = [0.0; 4];
    model.drift(&state.to_array(), &[accel, steer], &[w], &mut out);
    Ok(out)
}

impl NominalDynamics for Bicycle {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn disturbance_dim(&self) -> usize {
        1
    }

    fn state_names(&self) -> Vec<String> {
        ["px", "py", "v", "psi"].map(String::from).to_vec()
    }

    fn check_input(&self, u: &[f64]) -> Result<()> {
        if u.iter().all(|v| v.is_finite()) && u[1].abs() < FRAC_PI_2 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "bicycle input (a={}, δ={}) outside the model domain |δ| < π/2",
                u[0], u[1]
            )))
        }
    }

    fn drift(&self, x: &[f64], u: &[f64], w: &[f64], out: &mut [f64]) {
        let alpha = slip_angle(u[1]);
        let (s, c) = (x[PSI] + alpha).sin_cos();
        let v = x[V];
        out[PX] = v * c;
        out[PY] = v * s;
        out[V] = u[0];
        out[PSI] = v / (self.length / 2.0) * alpha.sin();
        out[self.disturbance_state] += w[0];
    }

    fn jacobians(
        &self,
        x: &[f64],
        u: &[f64],
        _w: &[f64],
        jx: &mut [f64],
        ju: &mut [f64],
        jw: &mut [f64],
    ) {
        let alpha = slip_angle(u[1]);
        let dalpha = slip_angle_derivative(u[1]);
        let (s, c) = (x[PSI] + alpha).sin_cos();
        let (sa, ca) = alpha.sin_cos();
        let v = x[V];
        let half = self.length / 2.0;
        jx.iter_mut().for_each(|e| *e = 0.0);
        ju.iter_mut().for_each(|e| *e = 0.0);
        jw.iter_mut().for_each(|e| *e = 0.0);

        jx[PX * 4 + V] = c;
        jx[PX * 4 + PSI] = -v * s;
        jx[PY * 4 + V] = s;
        jx[PY * 4 + PSI] = v * c;
        jx[PSI * 4 + V] = sa / half;

        ju[PX * 2 + 1] = -v * s * dalpha;
        ju[PY * 2 + 1] = v * c * dalpha;
        ju[V * 2] = 1.0;
        ju[PSI * 2 + 1] = v / half * ca * dalpha;

        jw[self.disturbance_state] = 1.0;
    }
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario_mpc::StateConstraints;

/// Sinusoidal road: centerline `y_c(x) = A·sin(2πx/P)`, fixed half-width,
/// and simple bounds on `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub amplitude: f64,
    pub period: f64,
    pub half_width: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Inward tightening of the corridor applied inside the controller only.
    #[serde(default)]
    pub controller_margin: f64,
}

impl Default for TrackSpec {
    fn default() -> Self {
        Self {
            amplitude: 4.0,
            period: 30.0,
            half_width: 2.0,
            x_min: 0.0,
            x_max: 60.0,
            controller_margin: 0.2,
        }
    }
}

impl TrackSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.half_width > 0.0 && self.x_min < self.x_max) {
            return Err(Error::Config("track needs positive period and width and x_min < x_max".into()));
        }
        if !(self.controller_margin >= 0.0 && self.controller_margin < self.half_width) {
            return Err(Error::Config("controller margin must lie in [0, half_width)".into()));
        }
        Ok(())
    }

    pub fn centerline(&self, x: f64) -> f64 {
        self.amplitude * (2.0 * PI * x / self.period).sin()
    }

    fn centerline_slope(&self, x: f64) -> f64 {
        let k = 2.0 * PI / self.period;
        self.amplitude * k * (k * x).cos()
    }

    /// Signed lateral excess beyond the road edges (`> 0` means outside).
    ///
    /// Outside `[x_min, x_max]` the road keeps its end cross-section.
    pub fn violation(&self, x: f64, y: f64) -> f64 {
        let (lo, hi) = make_track(self, x.clamp(self.x_min, self.x_max));
        (y - hi).max(lo - y)
    }
}

/// Lower and upper corridor bounds on `y` at position `x`.
pub fn make_track(spec: &TrackSpec, x: f64) -> (f64, f64) {
    let c = spec.centerline(x);
    (c - spec.half_width, c + spec.half_width)
}

/// The road edges as controller-side state constraints on `(px, py)`,
/// each moved inward by `controller_margin`, plus the simple bounds on `px`.
#[derive(Debug, Clone, Copy)]
pub struct CorridorConstraints {
    pub track: TrackSpec,
}

impl StateConstraints for CorridorConstraints {
    fn count(&self) -> usize {
        4
    }

    fn evaluate(&self, x: &[f64], values: &mut [f64], jacobian: Option<&mut [f64]>) {
        let t = &self.track;
        let hw = t.half_width - t.controller_margin;
        let px = x[0].clamp(t.x_min, t.x_max);
        let c = t.centerline(px);
        values[0] = x[1] - c - hw;
        values[1] = c - hw - x[1];
        values[2] = x[0] - t.x_max;
        values[3] = t.x_min - x[0];
        if let Some(j) = jacobian {
            let n = x.len();
            j.iter_mut().for_each(|v| *v = 0.0);
            let slope = if px == x[0] { t.centerline_slope(px) } else { 0.0 };
            j[0] = -slope;
            j[1] = 1.0;
            j[n] = slope;
            j[n + 1] = -1.0;
            j[2 * n] = 1.0;
            j[3 * n] = -1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_at_origin() {
        let t = TrackSpec::default();
        assert_eq!(make_track(&t, 0.0), (-2.0, 2.0));
    }

    #[test]
    fn constant_width() {
        let t = TrackSpec::default();
        for i in 0..600 {
            let (lo, hi) = make_track(&t, i as f64 * 0.1);
            assert!((hi - lo - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_period_peak() {
        let t = TrackSpec::default();
        let x = t.period / 4.0;
        assert!((t.centerline(x) - t.amplitude * (PI / 2.0).sin()).abs() < 1e-15);
        assert!((t.centerline(x) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn violation_sign() {
        let t = TrackSpec::default();
        assert!(t.violation(0.0, 0.0) < 0.0);
        assert!((t.violation(0.0, 2.5) - 0.5).abs() < 1e-12);
        assert!((t.violation(7.5, 5.0) + 1.0).abs() < 1e-12);
        // past the end the road keeps the cross-section at x_max
        assert_eq!(t.violation(61.0, 1.5), t.violation(60.0, 1.5));
    }

    #[test]
    fn corridor_jacobian_matches_differences() {
        let c = CorridorConstraints { track: TrackSpec::default() };
        let x = [7.3, 1.1, 5.0, 0.2];
        assert_eq!(c.count(), 4);
        let mut v = [0.0; 4];
        let mut j = [0.0; 16];
        c.evaluate(&x, &mut v, Some(&mut j));
        let h = 1e-6;
        for col in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[col] += h;
            xm[col] -= h;
            let (mut vp, mut vm) = ([0.0; 4], [0.0; 4]);
            c.evaluate(&xp, &mut vp, None);
            c.evaluate(&xm, &mut vm, None);
            for row in 0..4 {
                let fd = (vp[row] - vm[row]) / (2.0 * h);
                assert!((fd - j[row * 4 + col]).abs() < 1e-6);
            }
        }
    }
}

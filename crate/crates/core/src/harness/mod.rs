//! Closed-loop vehicle experiment: truth simulation, noisy measurements,
//! particle filtering, scenario MPC, logging, and plot output.

mod config;
mod metrics;
mod output;
mod svg;
mod track;
mod validate;

pub use config::{ExperimentConfig, FilterConfig, ModelConfig, RunConfig, StateName};
pub use metrics::{cruise_correlation, latent_coverage, RunSummary};
pub use output::{emit_outputs, read_csv, EmitReport, CSV_COLUMNS};
pub use track::{make_track, CorridorConstraints, TrackSpec};
pub use validate::{equivalence_report, EquivalenceReport};

use std::f64::consts::PI;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::{pf_init, pf_step, Estimate};
use crate::gp_ssm::{discretize_exact, matern_to_sde, DiscreteLatent, LatentSde};
use crate::lfm::{augment, AugmentedModel, Bicycle, MeasurementModel, NominalDynamics};
use crate::scenario_mpc::{derive_seed, PlanStatus, ScenarioMpc};

/// Outcome tag of one logged step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Converged,
    Degraded,
    Softened,
    /// Goal region reached; no input computed.
    Goal,
    /// A component error ended the run at this step.
    Failed,
}

impl StepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StepStatus::Converged => "converged",
            StepStatus::Degraded => "degraded",
            StepStatus::Softened => "softened",
            StepStatus::Goal => "goal",
            StepStatus::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Converged, Self::Degraded, Self::Softened, Self::Goal, Self::Failed]
            .into_iter()
            .find(|v| v.as_str() == s)
    }
}

impl From<PlanStatus> for StepStatus {
    fn from(s: PlanStatus) -> Self {
        match s {
            PlanStatus::Converged => StepStatus::Converged,
            PlanStatus::Degraded => StepStatus::Degraded,
            PlanStatus::Softened => StepStatus::Softened,
        }
    }
}

/// One control period of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// True `(px, py, v, ψ)`, ψ wrapped to (−π, π].
    pub truth: [f64; 4],
    pub true_w: f64,
    /// Filter mean of `(px, py, v, ψ)`, ψ wrapped.
    pub estimate: [f64; 4],
    pub est_w: f64,
    /// Two standard deviations of each estimated physical state.
    pub two_sigma: [f64; 4],
    pub est_w_two_sigma: f64,
    pub measurement: [f64; 4],
    /// Applied `(a, δ)`.
    pub input: [f64; 2],
    pub iterations: usize,
    pub cost: f64,
    pub status: StepStatus,
    /// Largest state-constraint violation over the plan's scenarios.
    pub plan_violation: f64,
    /// True distance outside the road (≤ 0 when inside).
    pub corridor_violation: f64,
    /// True excess beyond the velocity box (0 when inside).
    pub velocity_overshoot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum RunOutcome {
    GoalReached,
    MaxSteps,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub rows: Vec<StepRecord>,
    /// Wall-clock solve time per row; kept apart from `rows` so logs of a
    /// given seed stay byte-identical.
    pub solve_times: Vec<Duration>,
    pub outcome: RunOutcome,
}

impl RunLog {
    pub fn reached_goal(&self) -> bool {
        self.outcome == RunOutcome::GoalReached
    }

    pub fn failed(&self) -> bool {
        matches!(self.outcome, RunOutcome::Failed(_))
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Filter/controller model and truth latent law built from a config.
pub struct ExperimentModels {
    pub model: AugmentedModel<Bicycle>,
    pub measurement: MeasurementModel,
    pub truth_latent: LatentSde,
}

pub fn build_models(config: &ExperimentConfig) -> Result<ExperimentModels> {
    config.validate()?;
    let bicycle = Bicycle::new(config.model.length, config.model.disturbance_map.index())?;
    let latent = matern_to_sde(&config.kernel)?;
    let truth_latent = match &config.truth_kernel {
        Some(k) => matern_to_sde(k)?,
        None => latent.clone(),
    };
    let model = augment(bicycle, vec![latent])?;
    let measurement = MeasurementModel::diagonal(vec![0, 1, 2, 3], &config.model.measurement_std)?;
    Ok(ExperimentModels {
        model,
        measurement,
        truth_latent,
    })
}

struct Truth {
    x: [f64; 4],
    z: nalgebra::DVector<f64>,
    latent: LatentSde,
    disc: DiscreteLatent,
    substeps: usize,
}

impl Truth {
    fn w(&self) -> f64 {
        (&self.latent.c * &self.z)[(0, 0)]
    }

    fn advance(&mut self, bicycle: &Bicycle, u: &[f64], dt: f64, rng: &mut ChaCha8Rng) {
        let h = dt / self.substeps as f64;
        for _ in 0..self.substeps {
            let mut dx = [0.0; 4];
            bicycle.drift(&self.x, u, &[self.w()], &mut dx);
            for i in 0..4 {
                self.x[i] += dx[i] * h;
            }
            self.z = self.disc.step(&self.z, rng);
        }
    }
}

/// Runs the closed loop until the goal region, `max_steps`, or a failure.
///
/// `seed` overrides `config.run.seed`. Independent streams for the truth
/// disturbance, the sensor, the filter and the scenarios are derived from it.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunLog> {
    let models = build_models(config)?;
    let model = &models.model;
    let dt = config.mpc.dt;

    let mut truth_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut sensor_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let mut filter_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
    let control_seed = derive_seed(seed, 4);

    let substeps = config.run.truth_substeps;
    let mut truth = Truth {
        x: config.run.start.to_array(),
        z: models.truth_latent.sample_stationary(&mut truth_rng),
        disc: discretize_exact(&models.truth_latent, dt / substeps as f64)?,
        latent: models.truth_latent.clone(),
        substeps,
    };

    let resampling = config.filter.resampling();
    let jitter = config.filter.init_jitter.then_some(&models.measurement);
    let mut cloud = Some(pf_init(
        model,
        &truth.x,
        jitter,
        config.filter.particles,
        &mut filter_rng,
    )?);
    let corridor = CorridorConstraints { track: config.track };
    let mut controller = ScenarioMpc::new(model, config.mpc.clone(), Some(Box::new(corridor)), control_seed)?;
    let velocity_box = config.mpc.state_bounds.iter().find(|b| b.state == 2).copied();
    let goal = [config.mpc.goal[0], config.mpc.goal[1]];
    let latent_index = model.latent_offset(0);

    let mut rows = Vec::new();
    let mut solve_times = Vec::new();
    let mut last_input = vec![0.0; 2];
    let mut outcome = RunOutcome::MaxSteps;

    for step in 0..config.run.max_steps {
        let time = step as f64 * dt;
        let full_truth: Vec<f64> = truth.x.iter().copied().chain(std::iter::repeat_n(0.0, model.n_a() - 4)).collect();
        let y = models.measurement.measure(&full_truth, &mut sensor_rng);

        let estimate: Estimate = if step == 0 {
            cloud.as_ref().expect("cloud present").estimate()
        } else {
            let c = cloud.take().expect("cloud present");
            match pf_step(c, model, &models.measurement, &last_input, &y, dt, &resampling, &mut filter_rng) {
                Ok((c, e)) => {
                    cloud = Some(c);
                    e
                }
                Err(e) => {
                    outcome = RunOutcome::Failed(e.to_string());
                    break;
                }
            }
        };

        let mut row = StepRecord {
            step,
            time,
            truth: [truth.x[0], truth.x[1], truth.x[2], wrap_angle(truth.x[3])],
            true_w: truth.w(),
            estimate: [
                estimate.mean[0],
                estimate.mean[1],
                estimate.mean[2],
                wrap_angle(estimate.mean[3]),
            ],
            est_w: estimate.mean[latent_index],
            two_sigma: [0, 1, 2, 3].map(|i| 2.0 * estimate.std_dev(i)),
            est_w_two_sigma: 2.0 * estimate.std_dev(latent_index),
            measurement: [y[0], y[1], y[2], y[3]],
            input: [0.0, 0.0],
            iterations: 0,
            cost: 0.0,
            status: StepStatus::Goal,
            plan_violation: 0.0,
            corridor_violation: config.track.violation(truth.x[0], truth.x[1]),
            velocity_overshoot: velocity_box
                .map(|b| (truth.x[2] - b.upper).max(b.lower - truth.x[2]).max(0.0))
                .unwrap_or(0.0),
        };

        let dist = ((estimate.mean[0] - goal[0]).powi(2) + (estimate.mean[1] - goal[1]).powi(2)).sqrt();
        if dist <= config.run.goal_radius {
            rows.push(row);
            solve_times.push(Duration::ZERO);
            outcome = RunOutcome::GoalReached;
            break;
        }

        match controller.receding_horizon_step(estimate.mean.as_slice()) {
            Ok(out) => {
                row.input = [out.input[0], out.input[1]];
                row.iterations = out.plan.stats.iterations;
                row.cost = out.plan.cost;
                row.status = out.plan.status.into();
                row.plan_violation = out.plan.stats.max_violation;
                last_input = out.input;
                rows.push(row);
                solve_times.push(out.solve_time);
            }
            Err(e) => {
                row.status = StepStatus::Failed;
                rows.push(row);
                solve_times.push(Duration::ZERO);
                outcome = RunOutcome::Failed(e.to_string());
                break;
            }
        }

        truth.advance(model.nominal(), &last_input, dt, &mut truth_rng);
    }

    Ok(RunLog {
        rows,
        solve_times,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        for a in [-10.0, -PI, -1.0, 0.0, 1.0, PI, 7.0, 100.0] {
            let w = wrap_angle(a);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((a - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
        assert_eq!(wrap_angle(PI), PI);
    }

    #[test]
    fn status_round_trip() {
        for s in [StepStatus::Converged, StepStatus::Degraded, StepStatus::Softened, StepStatus::Goal, StepStatus::Failed] {
            assert_eq!(StepStatus::parse(s.as_str()), Some(s));
        }
    }
}

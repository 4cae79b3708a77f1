use serde::Serialize;

use super::{ExperimentConfig, RunLog, StepStatus};

/// Fraction of steps whose true disturbance lies inside the estimated
/// two-sigma band.
pub fn latent_coverage(log: &RunLog) -> f64 {
    if log.rows.is_empty() {
        return 0.0;
    }
    let inside = log
        .rows
        .iter()
        .filter(|r| (r.true_w - r.est_w).abs() <= r.est_w_two_sigma)
        .count();
    inside as f64 / log.rows.len() as f64
}

/// Pearson correlation between applied acceleration and estimated
/// disturbance over the cruise phase.
///
/// Cruise steps have a true velocity inside its bounds, lie in the middle
/// half of the track's x-range, and carry a solved input. Returns `None`
/// with fewer than three such steps.
pub fn cruise_correlation(log: &RunLog, config: &ExperimentConfig) -> Option<f64> {
    let t = &config.track;
    let span = t.x_max - t.x_min;
    let (lo, hi) = (t.x_min + 0.25 * span, t.x_min + 0.75 * span);
    let pairs: Vec<(f64, f64)> = log
        .rows
        .iter()
        .filter(|r| r.status != StepStatus::Goal && r.status != StepStatus::Failed)
        .filter(|r| r.velocity_overshoot == 0.0 && r.truth[0] >= lo && r.truth[0] <= hi)
        .map(|r| (r.input[0], r.est_w))
        .collect();
    if pairs.len() < 3 {
        return None;
    }
    let n = pairs.len() as f64;
    let (ma, mw) = pairs.iter().fold((0.0, 0.0), |(a, w), p| (a + p.0 / n, w + p.1 / n));
    let (mut saa, mut sww, mut saw) = (0.0, 0.0, 0.0);
    for (a, w) in &pairs {
        saa += (a - ma) * (a - ma);
        sww += (w - mw) * (w - mw);
        saw += (a - ma) * (w - mw);
    }
    if saa == 0.0 || sww == 0.0 {
        return None;
    }
    Some(saw / (saa * sww).sqrt())
}

/// Headline numbers of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub reached_goal: bool,
    pub corridor_satisfied: bool,
    pub max_corridor_violation: f64,
    pub max_velocity_overshoot: f64,
    pub latent_coverage: f64,
    pub cruise_correlation: Option<f64>,
    pub degraded_steps: usize,
    pub softened_steps: usize,
}

impl RunSummary {
    pub fn new(log: &RunLog, config: &ExperimentConfig) -> Self {
        let max_corridor_violation = log
            .rows
            .iter()
            .map(|r| r.corridor_violation)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            steps: log.rows.len(),
            reached_goal: log.reached_goal(),
            corridor_satisfied: max_corridor_violation <= 0.0,
            max_corridor_violation,
            max_velocity_overshoot: log.rows.iter().map(|r| r.velocity_overshoot).fold(0.0, f64::max),
            latent_coverage: latent_coverage(log),
            cruise_correlation: cruise_correlation(log, config),
            degraded_steps: log.rows.iter().filter(|r| r.status == StepStatus::Degraded).count(),
            softened_steps: log.rows.iter().filter(|r| r.status == StepStatus::Softened).count(),
        }
    }
}

use std::time::{Duration, Instant};

use super::{derive_seed, sample_scenarios, solve, ControlPlan, MpcConfig, StateConstraints};
use crate::error::Result;
use crate::lfm::{AugmentedModel, NominalDynamics};

/// Receding-horizon wrapper around [`solve`].
///
/// Each call samples a fresh scenario set from a seed derived from the
/// controller seed and the step counter, warm-starts from the previous plan
/// shifted by one step (last input repeated), and returns the first input.
pub struct ScenarioMpc<'m, D> {
    model: &'m AugmentedModel<D>,
    cfg: MpcConfig,
    constraints: Option<Box<dyn StateConstraints + 'm>>,
    seed: u64,
    step: u64,
    previous: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub input: Vec<f64>,
    pub plan: ControlPlan,
    pub solve_time: Duration,
    pub scenario_seed: u64,
}

impl<'m, D: NominalDynamics> ScenarioMpc<'m, D> {
    pub fn new(
        model: &'m AugmentedModel<D>,
        cfg: MpcConfig,
        constraints: Option<Box<dyn StateConstraints + 'm>>,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate(model.n_x(), model.n_u())?;
        Ok(Self {
            model,
            cfg,
            constraints,
            seed,
            step: 0,
            previous: None,
        })
    }

    pub fn config(&self) -> &MpcConfig {
        &self.cfg
    }

    /// Forgets the previous plan and rewinds the scenario stream.
    pub fn reset(&mut self) {
        self.step = 0;
        self.previous = None;
    }

    /// Warm start for the next solve: the last plan advanced by one step.
    pub fn shifted_plan(&self) -> Option<Vec<f64>> {
        let prev = self.previous.as_ref()?;
        let n_u = self.model.n_u();
        let mut shifted = prev[n_u..].to_vec();
        shifted.extend_from_slice(&prev[prev.len() - n_u..]);
        Some(shifted)
    }

    pub fn receding_horizon_step(&mut self, estimate: &[f64]) -> Result<StepOutcome> {
        let scenario_seed = derive_seed(self.seed, self.step);
        self.step += 1;
        let scenarios = sample_scenarios(self.model.latents(), &self.cfg, scenario_seed);
        let warm = if self.cfg.warm_start { self.shifted_plan() } else { None };
        let start = Instant::now();
        let plan = solve(
            self.model,
            estimate,
            &self.cfg,
            &scenarios,
            self.constraints.as_deref(),
            warm.as_deref(),
        )?;
        let solve_time = start.elapsed();
        self.previous = Some(plan.inputs.clone());
        Ok(StepOutcome {
            input: plan.first_input(self.model.n_u()).to_vec(),
            plan,
            solve_time,
            scenario_seed,
        })
    }
}

//! Scenario-based stochastic MPC.
//!
//! The chance-constrained problem over the augmented model is replaced by a
//! deterministic one: `Ns` sampled noise sequences are pushed through the
//! Euler–Maruyama dynamics from the shared estimate, the quadratic cost is
//! summed over every scenario, and the state constraints are imposed on
//! every scenario trajectory. Decision variables are the `N` input vectors
//! only (single shooting).

mod controller;
mod problem;

pub use controller::{ScenarioMpc, StepOutcome};
pub use problem::{solve, ControlPlan, PlanStatus, ScenarioProblem, SolverStats};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp_ssm::LatentSde;
use crate::lfm::{AugmentedModel, NominalDynamics};
use crate::nlp::Tolerances;

/// Box constraint on a single physical state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBound {
    pub state: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Inequalities `g(x) ≤ 0` on the physical state.
pub trait StateConstraints: Send + Sync {
    fn count(&self) -> usize;

    /// Writes `g(x)` and, when requested, the row-major `count × n_x` Jacobian.
    fn evaluate(&self, x: &[f64], values: &mut [f64], jacobian: Option<&mut [f64]>);
}

/// State boxes expressed as `x_i − upper ≤ 0` and `lower − x_i ≤ 0`.
#[derive(Debug, Clone, Default)]
pub struct StateBoxes(pub Vec<StateBound>);

impl StateConstraints for StateBoxes {
    fn count(&self) -> usize {
        2 * self.0.len()
    }

    fn evaluate(&self, x: &[f64], values: &mut [f64], jacobian: Option<&mut [f64]>) {
        let n_x = x.len();
        for (k, b) in self.0.iter().enumerate() {
            values[2 * k] = x[b.state] - b.upper;
            values[2 * k + 1] = b.lower - x[b.state];
        }
        if let Some(jac) = jacobian {
            jac.iter_mut().for_each(|v| *v = 0.0);
            for (k, b) in self.0.iter().enumerate() {
                jac[2 * k * n_x + b.state] = 1.0;
                jac[(2 * k + 1) * n_x + b.state] = -1.0;
            }
        }
    }
}

/// Concatenation of several constraint families.
#[derive(Default)]
pub struct ConstraintSet {
    parts: Vec<Box<dyn StateConstraints>>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, part: impl StateConstraints + 'static) -> Self {
        self.parts.push(Box::new(part));
        self
    }
}

impl StateConstraints for ConstraintSet {
    fn count(&self) -> usize {
        self.parts.iter().map(|p| p.count()).sum()
    }

    fn evaluate(&self, x: &[f64], values: &mut [f64], mut jacobian: Option<&mut [f64]>) {
        let n_x = x.len();
        let mut start = 0;
        for p in &self.parts {
            let m = p.count();
            let jac = jacobian
                .as_deref_mut()
                .map(|j| &mut j[start * n_x..(start + m) * n_x]);
            p.evaluate(x, &mut values[start..start + m], jac);
            start += m;
        }
    }
}

/// Controller settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcConfig {
    /// Horizon `N` in steps.
    pub horizon: usize,
    /// Scenario count `Ns`.
    pub scenarios: usize,
    /// Step `Δt` in seconds.
    pub dt: f64,
    /// Diagonal of `Q`.
    pub state_weights: Vec<f64>,
    /// Diagonal of `Q_f`.
    pub terminal_weights: Vec<f64>,
    /// Diagonal of `R`.
    pub input_weights: Vec<f64>,
    /// Goal `x_g` over the physical state.
    pub goal: Vec<f64>,
    pub input_lower: Vec<f64>,
    pub input_upper: Vec<f64>,
    #[serde(default)]
    pub state_bounds: Vec<StateBound>,
    /// Target violation level; reporting only.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Penalty weight on squared soft-constraint violations.
    #[serde(default = "default_penalty")]
    pub penalty_weight: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    /// Evaluate scenarios on the rayon pool.
    #[serde(default = "default_true")]
    pub parallel: bool,
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_penalty() -> f64 {
    1e4
}

fn default_true() -> bool {
    true
}

impl MpcConfig {
    /// Case-study settings: `Δt = 0.2 s`, `N = 7`, `Ns = 150`,
    /// `Q = Q_f = diag(2, 2, 1, 0)`, `R = diag(0.5, 10)`, `|a| ≤ 5`,
    /// `|δ| ≤ 25°`, `0 ≤ v ≤ 8`.
    pub fn case_study(goal: [f64; 4]) -> Self {
        let steer = 25f64.to_radians();
        Self {
            horizon: 7,
            scenarios: 150,
            dt: 0.2,
            state_weights: vec![2.0, 2.0, 1.0, 0.0],
            terminal_weights: vec![2.0, 2.0, 1.0, 0.0],
            input_weights: vec![0.5, 10.0],
            goal: goal.to_vec(),
            input_lower: vec![-5.0, -steer],
            input_upper: vec![5.0, steer],
            state_bounds: vec![StateBound {
                state: 2,
                lower: 0.0,
                upper: 8.0,
            }],
            epsilon: default_epsilon(),
            penalty_weight: default_penalty(),
            tolerances: Tolerances::default(),
            warm_start: true,
            parallel: true,
        }
    }

    pub fn validate(&self, n_x: usize, n_u: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.horizon == 0 || self.scenarios == 0 {
            return fail("horizon and scenario count must be at least 1".into());
        }
        if !(self.dt > 0.0) {
            return fail(format!("time step must be positive, got {}", self.dt));
        }
        for (name, v, n) in [
            ("state_weights", &self.state_weights, n_x),
            ("terminal_weights", &self.terminal_weights, n_x),
            ("goal", &self.goal, n_x),
            ("input_weights", &self.input_weights, n_u),
            ("input_lower", &self.input_lower, n_u),
            ("input_upper", &self.input_upper, n_u),
        ] {
            if v.len() != n {
                return fail(format!("{name} has {} entries, expected {n}", v.len()));
            }
        }
        if self.state_weights.iter().chain(&self.terminal_weights).any(|w| !(*w >= 0.0)) {
            return fail("state weights must be nonnegative".into());
        }
        if self.input_weights.iter().any(|w| !(*w > 0.0)) {
            return fail("input weights must be positive".into());
        }
        if (0..n_u).any(|i| !(self.input_lower[i] <= self.input_upper[i])) {
            return fail("input lower bound exceeds upper bound".into());
        }
        if self.state_bounds.iter().any(|b| b.state >= n_x || !(b.lower <= b.upper)) {
            return fail("invalid state bound".into());
        }
        if !(self.penalty_weight > 0.0) {
            return fail("penalty weight must be positive".into());
        }
        Ok(())
    }
}

/// `Ns` sampled noise sequences over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    /// Scenario-major: `draws[(i·N + k)·n_β + j]`.
    draws: Vec<f64>,
    scenarios: usize,
    horizon: usize,
    noise_dim: usize,
    pub seed: u64,
}

impl ScenarioSet {
    /// Builds a set from explicit draws laid out scenario-major.
    pub fn from_draws(draws: Vec<f64>, scenarios: usize, horizon: usize, noise_dim: usize) -> Result<Self> {
        if draws.len() != scenarios * horizon * noise_dim {
            return Err(Error::Config(format!(
                "{} draws do not fill {scenarios}×{horizon}×{noise_dim}",
                draws.len()
            )));
        }
        Ok(Self {
            draws,
            scenarios,
            horizon,
            noise_dim,
            seed: 0,
        })
    }

    pub fn zeros(scenarios: usize, horizon: usize, noise_dim: usize) -> Self {
        Self {
            draws: vec![0.0; scenarios * horizon * noise_dim],
            scenarios,
            horizon,
            noise_dim,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios == 0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Draws of scenario `i`, step-major.
    pub fn scenario(&self, i: usize) -> &[f64] {
        let stride = self.horizon * self.noise_dim;
        &self.draws[i * stride..(i + 1) * stride]
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }
}

/// Samples `dβ_k^(i) ~ N(0, q·Δt)` for every scenario and step.
pub fn sample_scenarios(latents: &[LatentSde], cfg: &MpcConfig, seed: u64) -> ScenarioSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd: Vec<f64> = latents.iter().map(|l| (l.q * cfg.dt).sqrt()).collect();
    let n = cfg.scenarios * cfg.horizon * sd.len();
    let draws = (0..n)
        .map(|k| sd[k % sd.len()] * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ScenarioSet {
        draws,
        scenarios: cfg.scenarios,
        horizon: cfg.horizon,
        noise_dim: sd.len(),
        seed,
    }
}

/// Trajectory `x̄_0 … x̄_N` (flattened, `(N+1) × n_a`) under `inputs`
/// (`N × n_u`) and one scenario's draws.
pub fn rollout<D: NominalDynamics>(
    model: &AugmentedModel<D>,
    xbar0: &[f64],
    inputs: &[f64],
    draws: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let (n_a, n_u, n_b) = (model.n_a(), model.n_u(), model.noise_dim());
    let horizon = inputs.len() / n_u;
    if inputs.len() != horizon * n_u || draws.len() != horizon * n_b || xbar0.len() != n_a {
        return Err(Error::Config("rollout dimensions do not match the model".into()));
    }
    let mut traj = vec![0.0; (horizon + 1) * n_a];
    traj[..n_a].copy_from_slice(xbar0);
    for k in 0..horizon {
        let (done, rest) = traj.split_at_mut((k + 1) * n_a);
        model.em_step_into(
            &done[k * n_a..],
            &inputs[k * n_u..(k + 1) * n_u],
            &draws[k * n_b..(k + 1) * n_b],
            dt,
            &mut rest[..n_a],
        )?;
    }
    Ok(traj)
}

/// `Σ_i [Σ_k (x−x_g)ᵀQ(x−x_g) + uᵀRu] + (x_N−x_g)ᵀQ_f(x_N−x_g)` over the
/// physical part of each trajectory.
pub fn scenario_objective(trajectories: &[Vec<f64>], inputs: &[f64], n_a: usize, cfg: &MpcConfig) -> f64 {
    trajectories
        .iter()
        .map(|t| trajectory_cost(t, inputs, n_a, cfg))
        .sum()
}

pub(crate) fn trajectory_cost(traj: &[f64], inputs: &[f64], n_a: usize, cfg: &MpcConfig) -> f64 {
    let n_u = cfg.input_weights.len();
    let horizon = cfg.horizon;
    let quad = |x: &[f64], w: &[f64]| -> f64 {
        w.iter()
            .zip(x.iter().zip(&cfg.goal))
            .map(|(w, (x, g))| w * (x - g) * (x - g))
            .sum()
    };
    let mut cost = 0.0;
    for k in 0..horizon {
        cost += quad(&traj[k * n_a..], &cfg.state_weights);
        cost += inputs[k * n_u..(k + 1) * n_u]
            .iter()
            .zip(&cfg.input_weights)
            .map(|(u, r)| r * u * u)
            .sum::<f64>();
    }
    cost + quad(&traj[horizon * n_a..], &cfg.terminal_weights)
}

/// Mixes a run seed with a counter into an independent 64-bit seed.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    let mut z = seed ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

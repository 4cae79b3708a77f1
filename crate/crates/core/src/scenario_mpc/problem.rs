use rayon::prelude::*;
use serde::Serialize;

use super::{MpcConfig, ScenarioSet, StateBoxes, StateConstraints};
use crate::error::{Error, Result};
use crate::lfm::{AugmentedModel, NominalDynamics};
use crate::nlp::{self, BoxBounds, Evaluation, Problem, Termination};

/// The deterministic scenario program as an [`nlp::Problem`] over the
/// stacked inputs `u_0 … u_{N−1}`.
///
/// Objective and penalty are averaged over scenarios, which leaves the
/// minimizer unchanged and keeps the merit scale independent of `Ns`.
/// Gradients come from a reverse sweep through each scenario rollout.
pub struct ScenarioProblem<'a, D> {
    model: &'a AugmentedModel<D>,
    xbar0: &'a [f64],
    cfg: &'a MpcConfig,
    scenarios: &'a ScenarioSet,
    constraints: Combined<'a>,
    bounds: BoxBounds,
}

/// Config state boxes followed by any caller-supplied constraints.
struct Combined<'a> {
    boxes: StateBoxes,
    extra: Option<&'a dyn StateConstraints>,
}

impl StateConstraints for Combined<'_> {
    fn count(&self) -> usize {
        self.boxes.count() + self.extra.map_or(0, |e| e.count())
    }

    fn evaluate(&self, x: &[f64], values: &mut [f64], jacobian: Option<&mut [f64]>) {
        let m = self.boxes.count();
        let n_x = x.len();
        let (head, tail) = values.split_at_mut(m);
        match jacobian {
            Some(jac) => {
                let (jh, jt) = jac.split_at_mut(m * n_x);
                self.boxes.evaluate(x, head, Some(jh));
                if let Some(e) = self.extra {
                    e.evaluate(x, tail, Some(jt));
                }
            }
            None => {
                self.boxes.evaluate(x, head, None);
                if let Some(e) = self.extra {
                    e.evaluate(x, tail, None);
                }
            }
        }
    }
}

/// Per-scenario contribution before averaging.
#[derive(Debug, Clone, Default)]
struct ScenarioTerms {
    cost: f64,
    penalty: f64,
    max_violation: f64,
}

impl<'a, D: NominalDynamics> ScenarioProblem<'a, D> {
    /// `extra` adds constraints beyond the config's state boxes.
    pub fn new(
        model: &'a AugmentedModel<D>,
        xbar0: &'a [f64],
        cfg: &'a MpcConfig,
        scenarios: &'a ScenarioSet,
        extra: Option<&'a dyn StateConstraints>,
    ) -> Result<Self> {
        cfg.validate(model.n_x(), model.n_u())?;
        if xbar0.len() != model.n_a() || xbar0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial augmented state must be finite and n_a long".into()));
        }
        if scenarios.horizon() != cfg.horizon || scenarios.noise_dim() != model.noise_dim() || scenarios.is_empty() {
            return Err(Error::Config("scenario set does not match horizon or noise dimension".into()));
        }
        let constraints = Combined {
            boxes: StateBoxes(cfg.state_bounds.clone()),
            extra,
        };
        let lower = cfg.input_lower.iter().copied().cycle().take(cfg.horizon * model.n_u()).collect();
        let upper = cfg.input_upper.iter().copied().cycle().take(cfg.horizon * model.n_u()).collect();
        Ok(Self {
            model,
            xbar0,
            cfg,
            scenarios,
            constraints,
            bounds: BoxBounds::new(lower, upper)?,
        })
    }

    /// Largest constraint violation along each scenario trajectory.
    pub fn scenario_violations(&self, inputs: &[f64]) -> Vec<f64> {
        (0..self.scenarios.len())
            .map(|i| self.scenario_terms(i, inputs, 1.0, None).max_violation)
            .collect()
    }

    fn scenario_terms(&self, i: usize, inputs: &[f64], scale: f64, grad: Option<&mut [f64]>) -> ScenarioTerms {
        let model = self.model;
        let cfg = self.cfg;
        let (n_a, n_x, n_u, n_b) = (model.n_a(), model.n_x(), model.n_u(), model.noise_dim());
        let horizon = cfg.horizon;
        let dt = cfg.dt;
        let draws = self.scenarios.scenario(i);
        let constraints = &self.constraints;
        let n_c = constraints.count();

        let mut traj = vec![0.0; (horizon + 1) * n_a];
        traj[..n_a].copy_from_slice(self.xbar0);
        for k in 0..horizon {
            let (done, rest) = traj.split_at_mut((k + 1) * n_a);
            let x = &done[k * n_a..];
            let next = &mut rest[..n_a];
            model.drift(x, &inputs[k * n_u..(k + 1) * n_u], next);
            for (o, x) in next.iter_mut().zip(x) {
                *o = x + *o * dt;
            }
            model.add_noise(next, &draws[k * n_b..(k + 1) * n_b]);
        }
        if traj.iter().any(|v| !v.is_finite()) {
            return ScenarioTerms {
                cost: f64::INFINITY,
                penalty: 0.0,
                max_violation: f64::INFINITY,
            };
        }

        let cost = super::trajectory_cost(&traj, inputs, n_a, cfg);
        let mut penalty = 0.0;
        let mut max_violation: f64 = 0.0;
        let mut g = vec![0.0; n_c];
        let mut gj = vec![0.0; n_c * n_x];
        let want_grad = grad.is_some();

        // λ_k = ∂J/∂x̄_k, built backwards; `dphi` holds the direct terms at k
        let mut lambda = vec![0.0; n_a];
        let mut dphi = vec![0.0; n_a];
        let mut jx = vec![0.0; n_a * n_a];
        let mut ju = vec![0.0; n_a * n_u];
        let mut grad = grad;

        let direct_terms = |k: usize, dphi: &mut [f64], g: &mut [f64], gj: &mut [f64], pen: &mut f64, mv: &mut f64| {
            let x = &traj[k * n_a..k * n_a + n_x];
            let weights = if k == horizon { &cfg.terminal_weights } else { &cfg.state_weights };
            dphi.iter_mut().for_each(|v| *v = 0.0);
            if want_grad {
                for j in 0..n_x {
                    dphi[j] = 2.0 * weights[j] * (x[j] - cfg.goal[j]);
                }
            }
            if k == 0 || n_c == 0 {
                return;
            }
            constraints.evaluate(x, g, want_grad.then_some(&mut *gj));
            for c in 0..n_c {
                if g[c] > 0.0 {
                    *pen += cfg.penalty_weight * g[c] * g[c];
                    *mv = mv.max(g[c]);
                    if want_grad {
                        let coef = scale * 2.0 * cfg.penalty_weight * g[c];
                        for j in 0..n_x {
                            dphi[j] += coef * gj[c * n_x + j];
                        }
                    }
                }
            }
        };

        direct_terms(horizon, &mut lambda, &mut g, &mut gj, &mut penalty, &mut max_violation);
        for k in (0..horizon).rev() {
            let u = &inputs[k * n_u..(k + 1) * n_u];
            if let Some(grad) = grad.as_deref_mut() {
                model.drift_jacobians(&traj[k * n_a..(k + 1) * n_a], u, &mut jx, &mut ju);
                for j in 0..n_u {
                    let adj: f64 = (0..n_a).map(|r| ju[r * n_u + j] * lambda[r]).sum();
                    grad[k * n_u + j] = 2.0 * cfg.input_weights[j] * u[j] + dt * adj;
                }
            }
            if k == 0 {
                break;
            }
            direct_terms(k, &mut dphi, &mut g, &mut gj, &mut penalty, &mut max_violation);
            if want_grad {
                let next: Vec<f64> = (0..n_a)
                    .map(|c| {
                        let back: f64 = (0..n_a).map(|r| jx[r * n_a + c] * lambda[r]).sum();
                        dphi[c] + lambda[c] + dt * back
                    })
                    .collect();
                lambda.copy_from_slice(&next);
            }
        }
        ScenarioTerms {
            cost,
            penalty,
            max_violation,
        }
    }
}

impl<D: NominalDynamics> Problem for ScenarioProblem<'_, D> {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64], penalty_scale: f64, grad: Option<&mut [f64]>) -> Evaluation {
        let ns = self.scenarios.len();
        let dim = x.len();
        let want = grad.is_some();
        let work = |i: usize| {
            let mut g = if want { vec![0.0; dim] } else { Vec::new() };
            let t = self.scenario_terms(i, x, penalty_scale, want.then_some(&mut g[..]));
            (t, g)
        };
        let parts: Vec<(ScenarioTerms, Vec<f64>)> = if self.cfg.parallel && ns > 1 {
            (0..ns).into_par_iter().map(work).collect()
        } else {
            (0..ns).map(work).collect()
        };
        // fixed index order keeps the reduction bit-reproducible
        let inv = 1.0 / ns as f64;
        let mut eval = Evaluation::default();
        if let Some(grad) = grad {
            grad.iter_mut().for_each(|v| *v = 0.0);
            for (_, g) in &parts {
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            grad.iter_mut().for_each(|v| *v *= inv);
        }
        for (t, _) in &parts {
            eval.objective += t.cost;
            eval.penalty += t.penalty;
            eval.max_violation = eval.max_violation.max(t.max_violation);
        }
        eval.objective *= inv;
        eval.penalty *= inv;
        eval
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Converged,
    /// Optimizer stopped without meeting its tolerances; the plan is the best
    /// point found and still satisfies the input bounds.
    Degraded,
    /// State constraints could not be met; the plan carries residual violation.
    Softened,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub residual: f64,
    pub termination: Termination,
    pub restorations: usize,
    /// Largest state-constraint violation over all scenarios and steps.
    pub max_violation: f64,
    pub scenario_violations: Vec<f64>,
    /// Averaged merit at the start point.
    pub start_merit: f64,
    /// Averaged merit at the returned plan.
    pub merit: f64,
}

/// Optimal input sequence for one receding-horizon solve.
#[derive(Debug, Clone, Serialize)]
pub struct ControlPlan {
    /// `N × n_u`, step-major.
    pub inputs: Vec<f64>,
    /// Summed scenario cost (not averaged).
    pub cost: f64,
    pub status: PlanStatus,
    pub stats: SolverStats,
}

impl ControlPlan {
    pub fn first_input(&self, n_u: usize) -> &[f64] {
        &self.inputs[..n_u]
    }
}

/// Solves the scenario program from `warm_start` (zeros when absent).
pub fn solve<D: NominalDynamics>(
    model: &AugmentedModel<D>,
    xbar_hat0: &[f64],
    cfg: &MpcConfig,
    scenarios: &ScenarioSet,
    extra_constraints: Option<&dyn StateConstraints>,
    warm_start: Option<&[f64]>,
) -> Result<ControlPlan> {
    let problem = ScenarioProblem::new(model, xbar_hat0, cfg, scenarios, extra_constraints)?;
    let dim = problem.dim();
    let mut x0 = match warm_start {
        Some(w) if w.len() == dim => w.to_vec(),
        Some(w) => {
            return Err(Error::Config(format!(
                "warm start has {} entries, expected {dim}",
                w.len()
            )))
        }
        None => vec![0.0; dim],
    };
    problem.bounds().project(&mut x0);
    let report = nlp::minimize(&problem, &x0, &cfg.tolerances)?;
    let mut inputs = report.solution;
    problem.bounds().project(&mut inputs);

    let status = if report.evaluation.max_violation > cfg.tolerances.violation {
        PlanStatus::Softened
    } else if report.termination.converged() {
        PlanStatus::Converged
    } else {
        PlanStatus::Degraded
    };
    let scenario_violations = problem.scenario_violations(&inputs);
    Ok(ControlPlan {
        cost: report.evaluation.objective * scenarios.len() as f64,
        status,
        stats: SolverStats {
            iterations: report.iterations,
            residual: report.residual,
            termination: report.termination,
            restorations: report.restorations,
            max_violation: report.evaluation.max_violation,
            scenario_violations,
            start_merit: report.merit_history[0],
            merit: report.merit,
        },
        inputs,
    })
}

//! Small dense nonlinear programs: smooth objective, box bounds on every
//! variable, and inequality constraints handled by a quadratic penalty.
//!
//! The solver is a projected quasi-Newton method with a damped BFGS Hessian
//! approximation. Variables close to a bound with the gradient pushing
//! outward form the active set; the free block takes a step from the reduced
//! quasi-Newton system, and a projected Armijo backtracking search keeps
//! every iterate inside the box. The merit
//! `f(x) + s·Σ wⱼ·max(0, gⱼ(x))²` never increases across accepted steps.
//!
//! If the final point still violates a soft constraint by more than the
//! tolerance, the penalty scale `s` is raised and the solve restarted from
//! the incumbent. A restored point replaces the incumbent only when it
//! reduces the violation and its unit-scale merit is no worse than that of
//! the start point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-variable bounds `lower ≤ x ≤ upper`; infinite entries are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Config("bound vectors differ in length".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::Config(format!(
                "bound {i}: lower {} exceeds upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, lo), hi)| *lo <= *v && *v <= *hi)
    }
}

/// Objective and penalty values at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Evaluation {
    pub objective: f64,
    /// `Σ wⱼ·max(0, gⱼ)²` at unit penalty scale.
    pub penalty: f64,
    pub max_violation: f64,
}

impl Evaluation {
    pub fn merit(&self, penalty_scale: f64) -> f64 {
        self.objective + penalty_scale * self.penalty
    }
}

/// A box-constrained problem with penalized soft constraints.
pub trait Problem: Sync {
    fn dim(&self) -> usize;

    fn bounds(&self) -> &BoxBounds;

    /// Evaluates at `x`; when `grad` is given it receives the gradient of
    /// `objective + penalty_scale·penalty`.
    fn evaluate(&self, x: &[f64], penalty_scale: f64, grad: Option<&mut [f64]>) -> Evaluation;
}

type ScalarFn = Box<dyn Fn(&[f64], Option<&mut [f64]>) -> f64 + Send + Sync>;

/// Soft inequality `g(x) ≤ 0` with penalty weight `w > 0`.
pub struct SoftConstraint {
    g: ScalarFn,
    weight: f64,
}

impl SoftConstraint {
    /// `g` returns its value and, when asked, writes its gradient.
    pub fn new(
        weight: f64,
        g: impl Fn(&[f64], Option<&mut [f64]>) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::Config(format!("penalty weight must be positive, got {weight}")));
        }
        Ok(Self {
            g: Box::new(g),
            weight,
        })
    }
}

/// Closure-backed [`Problem`].
pub struct NlpProblem {
    bounds: BoxBounds,
    objective: ScalarFn,
    soft_constraints: Vec<SoftConstraint>,
}

impl NlpProblem {
    pub fn new(
        bounds: BoxBounds,
        objective: impl Fn(&[f64], Option<&mut [f64]>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            bounds,
            objective: Box::new(objective),
            soft_constraints: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, c: SoftConstraint) -> Self {
        self.soft_constraints.push(c);
        self
    }
}

impl Problem for NlpProblem {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64], penalty_scale: f64, mut grad: Option<&mut [f64]>) -> Evaluation {
        let objective = (self.objective)(x, grad.as_deref_mut());
        let mut penalty = 0.0;
        let mut max_violation: f64 = 0.0;
        let mut cg = vec![0.0; x.len()];
        for c in &self.soft_constraints {
            let g = (c.g)(x, grad.is_some().then_some(&mut cg[..]));
            if g > 0.0 {
                penalty += c.weight * g * g;
                max_violation = max_violation.max(g);
                if let Some(grad) = grad.as_deref_mut() {
                    for (gi, ci) in grad.iter_mut().zip(&cg) {
                        *gi += penalty_scale * 2.0 * c.weight * g * ci;
                    }
                }
            }
        }
        Evaluation {
            objective,
            penalty,
            max_violation,
        }
    }
}

/// Stopping rules and restoration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Infinity norm of the projected gradient.
    pub gradient: f64,
    /// Infinity norm of an accepted step.
    pub step: f64,
    pub max_iters: usize,
    /// Soft-constraint violation that triggers penalty escalation.
    pub violation: f64,
    pub max_restorations: usize,
    pub penalty_growth: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-6,
            step: 1e-9,
            max_iters: 200,
            violation: 1e-3,
            max_restorations: 2,
            penalty_growth: 10.0,
        }
    }
}

/// Merit evaluation noise in units of `ε·|merit|`. Accepted merits never
/// rise by more than this; below it steps are judged from gradients.
pub const MERIT_RESOLUTION: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gradient,
    Step,
    /// Further decrease is below floating-point resolution.
    Stalled,
    MaxIterations,
    LineSearchFailure,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Self::Gradient | Self::Step | Self::Stalled)
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub evaluation: Evaluation,
    /// Merit at unit penalty scale.
    pub merit: f64,
    pub iterations: usize,
    /// Projected-gradient infinity norm at the solution.
    pub residual: f64,
    pub termination: Termination,
    pub restorations: usize,
    /// Accepted merit values of the first pass, starting with `x0`.
    pub merit_history: Vec<f64>,
}

impl SolveReport {
    pub fn degraded(&self) -> bool {
        !self.termination.converged()
    }

    pub fn max_violation(&self) -> f64 {
        self.evaluation.max_violation
    }
}

/// Minimizes `problem` from `x0` (projected into the box first).
pub fn minimize<P: Problem + ?Sized>(problem: &P, x0: &[f64], tol: &Tolerances) -> Result<SolveReport> {
    if x0.len() != problem.dim() {
        return Err(Error::Config(format!(
            "start point has {} entries, problem has {}",
            x0.len(),
            problem.dim()
        )));
    }
    let mut report = descend(problem, x0, 1.0, tol)?;
    let start_merit = report.merit_history[0];
    let mut scale = 1.0;
    while report.evaluation.max_violation > tol.violation && report.restorations < tol.max_restorations {
        scale *= tol.penalty_growth;
        let restored = descend(problem, &report.solution, scale, tol)?;
        let next_restorations = report.restorations + 1;
        let base = problem.evaluate(&restored.solution, 1.0, None);
        if base.max_violation < report.evaluation.max_violation && base.merit(1.0) <= start_merit {
            report = SolveReport {
                evaluation: base,
                merit: base.merit(1.0),
                iterations: report.iterations + restored.iterations,
                residual: restored.residual,
                termination: restored.termination,
                solution: restored.solution,
                restorations: next_restorations,
                merit_history: report.merit_history,
            };
        } else {
            report.iterations += restored.iterations;
            report.restorations = next_restorations;
        }
    }
    Ok(report)
}

fn projected_residual(x: &[f64], g: &[f64], bounds: &BoxBounds) -> f64 {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (xi, gi))| {
            let moved = (xi - gi).clamp(bounds.lower[i], bounds.upper[i]);
            (xi - moved).abs()
        })
        .fold(0.0, f64::max)
}

fn descend<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    scale: f64,
    tol: &Tolerances,
) -> Result<SolveReport> {
    const ARMIJO: f64 = 1e-4;
    const MAX_BACKTRACKS: usize = 50;

    let n = problem.dim();
    let bounds = problem.bounds();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; n];
    let mut eval = problem.evaluate(&x, scale, Some(&mut g));
    let mut f = eval.merit(scale);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteStart);
    }

    // Hessian approximation, row-major
    let mut b = identity(n);
    let mut scaled = false;
    let mut history = vec![f];
    let mut iterations = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut active = vec![false; n];

    let termination = loop {
        let residual = projected_residual(&x, &g, bounds);
        if residual <= tol.gradient {
            break Termination::Gradient;
        }
        if iterations >= tol.max_iters {
            break Termination::MaxIterations;
        }
        iterations += 1;

        // variables within `eps` of a bound that the gradient pushes into it
        let eps = residual.min(1e-3);
        for i in 0..n {
            let near_lower = x[i] - bounds.lower[i] <= eps && g[i] > 0.0;
            let near_upper = bounds.upper[i] - x[i] <= eps && g[i] < 0.0;
            active[i] = near_lower || near_upper;
        }

        let mut fresh = !scaled;
        let mut accepted = false;
        let mut stalled = false;
        let mut trial_eval = eval;
        for attempt in 0..2 {
            if attempt == 1 {
                // the curvature model failed to produce descent; retry as steepest descent
                if fresh {
                    break;
                }
                b = identity(n);
                scaled = false;
                fresh = true;
            }
            if !reduced_newton(&b, &g, &active, &mut d) {
                b = identity(n);
                scaled = false;
                fresh = true;
                reduced_newton(&b, &g, &active, &mut d);
            }
            if !scaled {
                // first step has unit infinity norm so the method is invariant
                // to objective scaling
                let norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                d.iter_mut().for_each(|v| *v /= norm);
            }

            let mut alpha = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                for i in 0..n {
                    x_new[i] = x[i] + alpha * d[i];
                }
                bounds.project(&mut x_new);
                trial_eval = problem.evaluate(&x_new, scale, Some(&mut g_new));
                let f_new = trial_eval.merit(scale);
                let decrease: f64 = g.iter().zip(x_new.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
                if f_new.is_finite() && f_new <= f + ARMIJO * decrease && f_new <= f {
                    accepted = true;
                    break;
                }
                // below the merit's evaluation resolution the sufficient-decrease
                // test is noise; estimate the change from the gradients instead
                let resolution = MERIT_RESOLUTION * f64::EPSILON * f.abs().max(1.0);
                if f_new.is_finite() && f_new <= f + resolution && -decrease <= resolution {
                    let trapezoid: f64 = g
                        .iter()
                        .zip(&g_new)
                        .zip(x_new.iter().zip(&x))
                        .map(|((a, b), (p, q))| 0.5 * (a + b) * (p - q))
                        .sum();
                    if trapezoid <= ARMIJO * decrease {
                        accepted = true;
                        break;
                    }
                }
                if f_new.is_finite() && (f_new - f).abs() <= 4.0 * f64::EPSILON * f.abs().max(1.0) {
                    stalled = true;
                }
                alpha *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            break if stalled {
                Termination::Stalled
            } else {
                Termination::LineSearchFailure
            };
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let step_norm = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if !scaled && sy > 0.0 {
            let gamma = yy / sy;
            b.iter_mut().for_each(|v| *v *= gamma);
            scaled = true;
        }
        if scaled {
            damped_bfgs_update(&mut b, &s, &y);
        }

        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        eval = trial_eval;
        f = eval.merit(scale);
        history.push(f);
        if step_norm <= tol.step {
            break Termination::Step;
        }
    };

    let base = if scale == 1.0 { eval } else { problem.evaluate(&x, 1.0, None) };
    Ok(SolveReport {
        residual: projected_residual(&x, &g, bounds),
        solution: x,
        evaluation: base,
        merit: base.merit(1.0),
        iterations,
        termination,
        restorations: 0,
        merit_history: history,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// Direction from the reduced system `B_FF d_F = −g_F` on the free set and a
/// diagonally scaled gradient step on the active set. Returns false if
/// `B_FF` is not numerically positive definite.
fn reduced_newton(b: &[f64], g: &[f64], active: &[bool], d: &mut [f64]) -> bool {
    let n = g.len();
    let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
    let m = free.len();
    let mut l = vec![0.0; m * m];
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate().take(r + 1) {
            let mut v = b[i * n + j];
            for k in 0..c {
                v -= l[r * m + k] * l[c * m + k];
            }
            if r == c {
                if !(v > 1e-14 * b[i * n + i].abs().max(f64::MIN_POSITIVE)) {
                    return false;
                }
                l[r * m + r] = v.sqrt();
            } else {
                l[r * m + c] = v / l[c * m + c];
            }
        }
    }
    let mut z: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
    for r in 0..m {
        for k in 0..r {
            z[r] -= l[r * m + k] * z[k];
        }
        z[r] /= l[r * m + r];
    }
    for r in (0..m).rev() {
        for k in r + 1..m {
            z[r] -= l[k * m + r] * z[k];
        }
        z[r] /= l[r * m + r];
    }
    d.iter_mut().for_each(|v| *v = 0.0);
    for (r, &i) in free.iter().enumerate() {
        d[i] = z[r];
    }
    for i in (0..n).filter(|&i| active[i]) {
        d[i] = -g[i] / b[i * n + i].max(f64::MIN_POSITIVE);
    }
    true
}

/// BFGS update of the Hessian approximation with Powell's damping, which
/// keeps `B` positive definite when the curvature condition fails.
fn damped_bfgs_update(b: &mut [f64], s: &[f64], y: &[f64]) {
    let n = s.len();
    let bs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| b[i * n + j] * s[j]).sum()).collect();
    let sbs: f64 = s.iter().zip(&bs).map(|(a, b)| a * b).sum();
    if !(sbs > 0.0) {
        return;
    }
    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r: Vec<f64> = (0..n).map(|i| theta * y[i] + (1.0 - theta) * bs[i]).collect();
    let sr: f64 = s.iter().zip(&r).map(|(a, b)| a * b).sum();
    if !(sr > 0.0) {
        return;
    }
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] += r[i] * r[j] / sr - bs[i] * bs[j] / sbs;
        }
    }
}

/// Largest relative discrepancy between the problem's gradient and central
/// differences with step `h`, at unit penalty scale.
pub fn grad_check<P: Problem + ?Sized>(problem: &P, x: &[f64], h: f64) -> f64 {
    let n = problem.dim();
    let mut analytic = vec![0.0; n];
    problem.evaluate(x, 1.0, Some(&mut analytic));
    let mut probe = x.to_vec();
    let numeric: Vec<f64> = (0..n)
        .map(|i| {
            probe[i] = x[i] + h;
            let fp = problem.evaluate(&probe, 1.0, None).merit(1.0);
            probe[i] = x[i] - h;
            let fm = problem.evaluate(&probe, 1.0, None).merit(1.0);
            probe[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect();
    let scale = analytic
        .iter()
        .chain(&numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(&numeric)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bowl(center: Vec<f64>, bounds: BoxBounds) -> NlpProblem {
        NlpProblem::new(bounds, move |x, g| {
            if let Some(g) = g {
                for i in 0..x.len() {
                    g[i] = 2.0 * (i + 1) as f64 * (x[i] - center[i]);
                }
            }
            x.iter()
                .zip(&center)
                .enumerate()
                .map(|(i, (a, c))| (i + 1) as f64 * (a - c) * (a - c))
                .sum()
        })
    }

    fn rosenbrock() -> NlpProblem {
        NlpProblem::new(BoxBounds::unbounded(2), |x, g| {
            let (a, b) = (x[0], x[1]);
            if let Some(g) = g {
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
            }
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        })
    }

    #[test]
    fn interior_quadratic_minimum() {
        let p = bowl(vec![0.3, -1.2, 2.5], BoxBounds::unbounded(3));
        let tol = Tolerances {
            gradient: 1e-10,
            ..Tolerances::default()
        };
        let r = minimize(&p, &[0.0; 3], &tol).unwrap();
        for (a, b) in r.solution.iter().zip([0.3, -1.2, 2.5]) {
            assert!((a - b).abs() < 1e-8, "{:?} {:?}", r.solution, r.termination);
        }
        assert!(r.termination.converged());
    }

    #[test]
    fn clipped_at_box_face() {
        let bounds = BoxBounds::new(vec![-1.0, -1.0], vec![1.0, 0.5]).unwrap();
        let p = bowl(vec![3.0, 0.2], bounds);
        let r = minimize(&p, &[0.0, 0.0], &Tolerances::default()).unwrap();
        assert_eq!(r.solution[0], 1.0);
        assert!((r.solution[1] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let tol = Tolerances {
            max_iters: 2000,
            ..Default::default()
        };
        let r = minimize(&rosenbrock(), &[-1.2, 1.0], &tol).unwrap();
        assert!(r.iterations <= 2000);
        assert!((r.solution[0] - 1.0).abs() < 1e-4 && (r.solution[1] - 1.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn merit_never_increases() {
        let r = minimize(&rosenbrock(), &[-1.2, 1.0], &Tolerances::default()).unwrap();
        let slack = |f: f64| MERIT_RESOLUTION * f64::EPSILON * f.abs().max(1.0);
        assert!(r.merit_history.windows(2).all(|w| w[1] <= w[0] + slack(w[0])));
    }

    #[test]
    fn repeated_solves_bit_identical() {
        let a = minimize(&rosenbrock(), &[-1.2, 1.0], &Tolerances::default()).unwrap();
        let b = minimize(&rosenbrock(), &[-1.2, 1.0], &Tolerances::default()).unwrap();
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.merit_history, b.merit_history);
    }

    #[test]
    fn start_outside_box_is_projected() {
        let bounds = BoxBounds::new(vec![0.0], vec![1.0]).unwrap();
        let p = bowl(vec![0.5], bounds);
        let r = minimize(&p, &[7.0], &Tolerances::default()).unwrap();
        assert!((r.solution[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn non_finite_start_rejected() {
        let p = NlpProblem::new(BoxBounds::unbounded(1), |x, _| 1.0 / x[0]);
        assert!(matches!(
            minimize(&p, &[0.0], &Tolerances::default()),
            Err(Error::NonFiniteStart)
        ));
    }

    #[test]
    fn soft_constraint_pulls_toward_feasibility() {
        // minimize (x−2)² subject to x ≤ 1
        let p = bowl(vec![2.0], BoxBounds::unbounded(1))
            .with_constraint(SoftConstraint::new(1e4, |x, g| {
                if let Some(g) = g {
                    g[0] = 1.0;
                }
                x[0] - 1.0
            })
            .unwrap());
        let r = minimize(&p, &[0.0], &Tolerances::default()).unwrap();
        assert!(r.max_violation() < 1e-3, "{r:?}");
        assert!((r.solution[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn restoration_escalates_penalty() {
        let p = bowl(vec![2.0], BoxBounds::unbounded(1))
            .with_constraint(SoftConstraint::new(1.0, |x, g| {
                if let Some(g) = g {
                    g[0] = 1.0;
                }
                x[0] - 1.0
            })
            .unwrap());
        let tol = Tolerances {
            violation: 1e-2,
            max_restorations: 3,
            ..Default::default()
        };
        let r = minimize(&p, &[0.0], &tol).unwrap();
        // unit-weight optimum is x = 1.5; escalation drives it toward x = 1
        assert!(r.restorations >= 1);
        assert!(r.max_violation() < 1e-2, "{r:?}");
        assert!(r.merit <= 4.0);
    }

    #[test]
    fn penalty_doubling_never_increases_violation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let center: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let normal: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let offset: f64 = rng.random_range(-1.0..1.0);
            let weight: f64 = rng.random_range(0.5..50.0);
            let solve = |w: f64| {
                let n = normal.clone();
                let p = bowl(center.clone(), BoxBounds::unbounded(3)).with_constraint(
                    SoftConstraint::new(w, move |x, g| {
                        if let Some(g) = g {
                            g.copy_from_slice(&n);
                        }
                        x.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>() - offset
                    })
                    .unwrap(),
                );
                let tol = Tolerances {
                    max_restorations: 0,
                    ..Default::default()
                };
                minimize(&p, &[0.0; 3], &tol).unwrap().max_violation()
            };
            assert!(solve(2.0 * weight) <= solve(weight) + 1e-12);
        }
    }

    #[test]
    fn grad_check_quadratic_and_constant() {
        let p = bowl(vec![0.3, -1.0], BoxBounds::unbounded(2));
        assert!(grad_check(&p, &[1.0, 2.0], 1e-5) < 1e-9);
        let c = NlpProblem::new(BoxBounds::unbounded(2), |_, g| {
            if let Some(g) = g {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            3.0
        });
        assert_eq!(grad_check(&c, &[1.0, 2.0], 1e-5), 0.0);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(BoxBounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(SoftConstraint::new(0.0, |_, _| 0.0).is_err());
    }
}

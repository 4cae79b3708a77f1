//! Box-constrained Rosenbrock with one soft constraint, solved by the
//! projected quasi-Newton method used inside the controller.
//!
//! cargo run --example nlp_minimize

use scenario_lfm::nlp::{grad_check, minimize, BoxBounds, NlpProblem, Problem, SoftConstraint, Tolerances};

fn main() -> scenario_lfm::Result<()> {
    let bounds = BoxBounds::new(vec![-2.0, -2.0], vec![2.0, 2.0])?;
    // keep the point inside the disc x² + y² ≤ 1.5
    let disc = SoftConstraint::new(1.0, |x, g| {
        if let Some(g) = g {
            g[0] = 2.0 * x[0];
            g[1] = 2.0 * x[1];
        }
        x[0] * x[0] + x[1] * x[1] - 1.5
    })?;
    let problem = NlpProblem::new(bounds, |x, g| {
        let (a, b) = (x[0], x[1]);
        if let Some(g) = g {
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
        }
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    })
    .with_constraint(disc);

    let start = [-1.2, 1.0];
    println!("gradient check at start: {:.2e}", grad_check(&problem, &start, 1e-6));

    let tol = Tolerances {
        max_iters: 2000,
        ..Tolerances::default()
    };
    let report = minimize(&problem, &start, &tol)?;
    let x = &report.solution;
    println!("solution      ({:.6}, {:.6})", x[0], x[1]);
    println!("objective     {:.6e}", report.evaluation.objective);
    println!("violation     {:.3e}", report.max_violation());
    println!("iterations    {}", report.iterations);
    println!("restorations  {}", report.restorations);
    println!("termination   {:?}", report.termination);
    println!("final merit   {:.6e}", problem.evaluate(x, 1.0, None).merit(1.0));
    Ok(())
}

//! A single scenario-MPC solve for the vehicle at the start of the road,
//! with the road corridor as extra state constraints.
//!
//! cargo run --release --example scenario_mpc_solve

use scenario_lfm::harness::{build_models, CorridorConstraints, ExperimentConfig};
use scenario_lfm::scenario_mpc::{rollout, sample_scenarios, solve};

fn main() -> scenario_lfm::Result<()> {
    let config = ExperimentConfig::paper();
    let models = build_models(&config)?;
    let model = &models.model;
    let cfg = &config.mpc;

    // start at rest, with a headwind-like disturbance of -1 m/s²
    let mut xbar0 = vec![0.0; model.n_a()];
    xbar0[model.latent_offset(0)] = -1.0;

    let scenarios = sample_scenarios(model.latents(), cfg, 11);
    let corridor = CorridorConstraints { track: config.track };
    let plan = solve(model, &xbar0, cfg, &scenarios, Some(&corridor), None)?;

    println!("status {:?}, {} iterations, cost {:.2}", plan.status, plan.stats.iterations, plan.cost);
    println!("max scenario violation {:.3e}", plan.stats.max_violation);
    println!("{:>4} {:>8} {:>8}", "k", "a", "delta");
    for (k, u) in plan.inputs.chunks(model.n_u()).enumerate() {
        println!("{k:>4} {:>8.3} {:>8.4}", u[0], u[1]);
    }

    let nominal = rollout(model, &xbar0, &plan.inputs, &vec![0.0; cfg.horizon * model.noise_dim()], cfg.dt)?;
    println!("nominal predicted (px, py, v):");
    for x in nominal.chunks(model.n_a()) {
        println!("  ({:.3}, {:.3}, {:.3})", x[0], x[1], x[2]);
    }
    Ok(())
}

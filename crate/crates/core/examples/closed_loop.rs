//! The full case study: simulate the vehicle on the sinusoidal road, filter,
//! plan with scenario MPC, then write the CSV log and SVG plots.
//!
//! cargo run --release --example closed_loop -- [seed] [out_dir]

use std::path::PathBuf;

use scenario_lfm::harness::{emit_outputs, run_experiment, ExperimentConfig, RunSummary};

fn main() -> scenario_lfm::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "closed-loop-out".into()));

    let mut config = ExperimentConfig::paper();
    // desk-scale filter; the case-study config uses 7000 particles
    config.filter.particles = 2000;

    let log = run_experiment(&config, seed)?;
    let report = emit_outputs(&log, &config, &out)?;
    let summary = RunSummary::new(&log, &config);

    println!("outcome: {:?} after {} steps", log.outcome, summary.steps);
    println!("corridor kept at every step: {}", summary.corridor_satisfied);
    println!("max velocity overshoot: {:.3} m/s", summary.max_velocity_overshoot);
    println!("latent 2-sigma coverage: {:.1}%", 100.0 * summary.latent_coverage);
    if let Some(r) = summary.cruise_correlation {
        println!("corr(a, w estimate) while cruising: {r:.3}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scenario_lfm::gp_ssm::matern_to_sde;
use scenario_lfm::harness::{emit_outputs, equivalence_report, run_experiment, ExperimentConfig, RunSummary};
use scenario_lfm::kernels::{KernelSpec, Smoothness};

/// Scenario-based stochastic MPC for nonlinear latent force models.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment and write logs and plots.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the latent SDE matrices (A, B, C, q, Pinf) as JSON.
    DumpSsm {
        #[command(flatten)]
        common: Common,
    },
    /// Check kernel and state-space autocovariances agree.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; the built-in case study when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    scenarios: Option<usize>,
}

impl Common {
    fn load(&self) -> scenario_lfm::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::paper(),
        };
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        if let Some(n) = self.particles {
            config.filter.particles = n;
        }
        if let Some(n) = self.scenarios {
            config.mpc.scenarios = n;
        }
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> scenario_lfm::Result<ExitCode> {
    match cli.command {
        Command::Run { common, out } => {
            let config = common.load()?;
            let log = run_experiment(&config, config.run.seed)?;
            let report = emit_outputs(&log, &config, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let summary = RunSummary::new(&log, &config);
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if log.failed() {
                eprintln!("run failed: {:?}", log.outcome);
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpSsm { common } => {
            let config = common.load()?;
            let sde = matern_to_sde(&config.kernel)?;
            println!("{}", serde_json::to_string_pretty(&sde.to_json())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { common } => {
            let config = common.load()?;
            let mut specs = vec![config.kernel];
            for nu in [Smoothness::Half, Smoothness::ThreeHalves, Smoothness::FiveHalves] {
                if nu != config.kernel.nu {
                    specs.push(KernelSpec::new(config.kernel.sigma2, config.kernel.ell, nu)?);
                }
            }
            let mut ok = true;
            for spec in &specs {
                let report = equivalence_report(spec)?;
                let pass = report.passes(1e-8);
                ok &= pass;
                println!(
                    "{} nu={} sigma2={} ell={} max_error={:.3e} at tau={:.3}",
                    if pass { "PASS" } else { "FAIL" },
                    spec.nu.value(),
                    spec.sigma2,
                    spec.ell,
                    report.max_error,
                    report.worst_lag
                );
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

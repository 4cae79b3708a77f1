use std::path::Path;

use serde::{Deserialize, Serialize};

use super::track::TrackSpec;
use crate::error::{Error, Result};
use crate::estimator::{ResamplePolicy, Resampling};
use crate::kernels::{KernelSpec, Smoothness};
use crate::lfm::BicycleState;
use crate::scenario_mpc::MpcConfig;

/// Bicycle state equation names used in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateName {
    Px,
    Py,
    V,
    Psi,
}

impl StateName {
    pub fn index(self) -> usize {
        match self {
            StateName::Px => 0,
            StateName::Py => 1,
            StateName::V => 2,
            StateName::Psi => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Vehicle length `l` (m).
    pub length: f64,
    /// State equation that receives the latent disturbance.
    pub disturbance_map: StateName,
    /// Standard deviations of the `(px, py, v, ψ)` measurements.
    pub measurement_std: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub particles: usize,
    #[serde(default)]
    pub resample: ResamplePolicy,
    /// Post-resampling jitter constant; zero keeps the plain bootstrap filter.
    #[serde(default)]
    pub roughening: f64,
    /// Jitter the initial physical particles with measurement noise.
    #[serde(default)]
    pub init_jitter: bool,
}

impl FilterConfig {
    pub fn resampling(&self) -> Resampling {
        Resampling {
            policy: self.resample,
            roughening: self.roughening,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub max_steps: usize,
    pub start: BicycleState,
    /// Stop once the estimated position is this close to the goal (m).
    pub goal_radius: f64,
    /// Euler substeps per control period in the truth simulator.
    #[serde(default = "one")]
    pub truth_substeps: usize,
}

fn one() -> usize {
    1
}

/// Everything needed to reproduce one closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Disturbance prior given to the filter and controller.
    pub kernel: KernelSpec,
    /// Disturbance law of the simulated truth when it differs from `kernel`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_kernel: Option<KernelSpec>,
    pub model: ModelConfig,
    pub mpc: MpcConfig,
    pub track: TrackSpec,
    pub filter: FilterConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    /// The vehicle case study with the documented track defaults.
    pub fn paper() -> Self {
        let track = TrackSpec::default();
        let goal = [track.x_max, 0.0, 0.0, 0.0];
        Self {
            kernel: KernelSpec {
                sigma2: 4.0,
                ell: 4.0,
                nu: Smoothness::FiveHalves,
            },
            truth_kernel: None,
            model: ModelConfig {
                length: 0.5,
                disturbance_map: StateName::V,
                measurement_std: [0.05, 0.05, 0.05, 0.01],
            },
            mpc: MpcConfig::case_study(goal),
            track,
            filter: FilterConfig {
                particles: 7000,
                resample: ResamplePolicy::Always,
                roughening: 0.1,
                init_jitter: false,
            },
            run: RunConfig {
                seed: 0,
                max_steps: 300,
                start: BicycleState::default(),
                goal_radius: 0.3,
                truth_substeps: 1,
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if let Some(k) = &self.truth_kernel {
            k.validate()?;
        }
        if !(self.model.length > 0.0) {
            return Err(Error::Config("vehicle length must be positive".into()));
        }
        if self.model.measurement_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("measurement standard deviations must be positive".into()));
        }
        self.mpc.validate(4, 2)?;
        self.track.validate()?;
        if self.filter.particles == 0 {
            return Err(Error::Config("particle count must be at least 1".into()));
        }
        if self.run.max_steps == 0 || self.run.truth_substeps == 0 {
            return Err(Error::Config("max_steps and truth_substeps must be at least 1".into()));
        }
        if !(self.run.goal_radius > 0.0) {
            return Err(Error::Config("goal radius must be positive".into()));
        }
        self.filter.resampling().validate()
    }
}

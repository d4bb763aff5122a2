//! TOML experiment configuration.
//!
//! Every section is optional; omitted values fall back to the desk-scale
//! scenario in [`crate::scenario`]. Sub-seeds are derived from the master
//! seed by label (`profiles`, `learning`, `workload`, `sample/<policy>`), so
//! adding a policy never changes another policy's random streams.
//!
//! ```toml
//! seed = 7
//! out_dir = "out"
//! weight_grid = [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]
//!
//! [profiles]
//! csv = "profiles.csv"        # or omit to generate
//! image_count = 2000
//!
//! [learning]
//! k_max = 8
//! ci_level = 0.9
//!
//! [simulation]
//! workers = 1
//! t_wait = 0.25
//!
//! [workload]
//! process = "poisson"
//! max_requests = 5000
//! segments = [{ duration = 20.0, rate = 1.0 }, { duration = 3.0, rate = 28.0 }]
//!
//! [utility]
//! r_max = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{DegradationConfig, NaivePolicyConfig};
use crate::learning::LearningParams;
use crate::metrics::{UtilityParams, WeightPair, DEFAULT_WEIGHT_GRID};
use crate::profiles::{self, ModelProfile, ModelSpec, ProfileFamilySpec};
use crate::scenario;
use crate::seed;
use crate::simulator::workload::{ArrivalProcess, RateSegment, WorkloadSpec};
use crate::simulator::{PolicySpec, SimConfig};
use crate::stats::CiMethod;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilesConfig {
    /// Load profiles from this CSV instead of generating them. Relative
    /// paths resolve against the config file's directory.
    pub csv: Option<PathBuf>,
    pub image_count: usize,
    /// Generated family; the desk-scale family when unset.
    pub models: Option<Vec<ModelSpec>>,
}

impl Default for ProfilesConfig {
    fn default() -> Self {
        ProfilesConfig {
            csv: None,
            image_count: scenario::DEFAULT_IMAGE_COUNT,
            models: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub workers: usize,
    pub switch_latency: f64,
    pub window: usize,
    pub t_wait: f64,
    pub tick_interval: f64,
    pub network_delay: f64,
    pub initial_model: Option<String>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            workers: 1,
            switch_latency: crate::controller::DEFAULT_SWITCH_LATENCY,
            window: crate::controller::monitor::DEFAULT_WINDOW,
            t_wait: crate::controller::analyzer::DEFAULT_T_WAIT,
            tick_interval: 0.1,
            network_delay: 0.0,
            initial_model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub segments: Vec<RateSegment>,
    pub process: ArrivalProcess,
    pub max_requests: usize,
    /// Repeat the segment list until the request cap is reachable.
    pub cycle: bool,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            segments: scenario::bursty_segments(),
            process: ArrivalProcess::Poisson,
            max_requests: scenario::DEFAULT_REQUESTS,
            cycle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub profiles: ProfilesConfig,
    pub learning: LearningParams,
    pub simulation: SimulationConfig,
    pub workload: WorkloadConfig,
    /// Naive thresholds; derived from mean model capacities when unset.
    pub naive: Option<NaivePolicyConfig>,
    pub utility: UtilityParams,
    pub weight_grid: Vec<[f64; 2]>,
    pub degradation: Option<DegradationConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from("out"),
            profiles: ProfilesConfig::default(),
            learning: LearningParams::default(),
            simulation: SimulationConfig::default(),
            workload: WorkloadConfig::default(),
            naive: None,
            utility: UtilityParams::default(),
            weight_grid: DEFAULT_WEIGHT_GRID.iter().map(|w| [w.w_e, w.w_d]).collect(),
            degradation: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; relative profile CSV paths are resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(csv), Some(dir)) = (cfg.profiles.csv.as_mut(), path.parent()) {
            if csv.is_relative() {
                *csv = dir.join(&*csv);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.utility.validate()?;
        if self.learning.k_max < 2 {
            return Err(Error::Config("learning.k_max must be at least 2".into()));
        }
        if !(self.learning.ci_level > 0.0 && self.learning.ci_level < 1.0) {
            return Err(Error::Config("learning.ci_level must lie in (0, 1)".into()));
        }
        if self.learning.restarts == 0 {
            return Err(Error::Config("learning.restarts must be at least 1".into()));
        }
        if self.weight_grid.is_empty() {
            return Err(Error::Config("weight grid is empty".into()));
        }
        if self.weight_grid.iter().flatten().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("weights must be finite and >= 0".into()));
        }
        if let Some(naive) = &self.naive {
            naive.validate()?;
        }
        if let Some(d) = &self.degradation {
            if !(d.margin.is_finite() && d.margin >= 0.0) || d.consecutive == 0 {
                return Err(Error::Config(
                    "degradation needs margin >= 0 and consecutive >= 1".into(),
                ));
            }
        }
        self.sim_config(PolicySpec::Adamls).validate()
    }

    pub fn weight_pairs(&self) -> Vec<WeightPair> {
        self.weight_grid.iter().map(|&[e, d]| WeightPair::new(e, d)).collect()
    }

    pub fn family_spec(&self) -> ProfileFamilySpec {
        let mut spec = scenario::desk_family(seed::derive(self.seed, "profiles"));
        spec.image_count = self.profiles.image_count;
        if let Some(models) = &self.profiles.models {
            spec.models = models.clone();
        }
        spec
    }

    /// Loads the configured CSV, or generates the family.
    pub fn resolve_profiles(&self) -> Result<Vec<ModelProfile>> {
        match &self.profiles.csv {
            Some(path) => profiles::load_profiles(path),
            None => profiles::generate_profiles(&self.family_spec()),
        }
    }

    pub fn learning_seed(&self) -> u64 {
        seed::derive(self.seed, "learning")
    }

    pub fn workload_spec(&self) -> WorkloadSpec {
        let spec = WorkloadSpec {
            segments: self.workload.segments.clone(),
            process: self.workload.process,
            max_requests: self.workload.max_requests,
            seed: seed::derive(self.seed, "workload"),
        };
        if self.workload.cycle {
            spec.cycled_to_cap()
        } else {
            spec
        }
    }

    pub fn naive_config(&self, profiles: &[ModelProfile]) -> Result<NaivePolicyConfig> {
        match &self.naive {
            Some(n) => Ok(n.clone()),
            None => NaivePolicyConfig::from_capacities(profiles),
        }
    }

    /// Parses `adamls`, `naive` or `static:<model>`.
    pub fn policy_spec(&self, name: &str, profiles: &[ModelProfile]) -> Result<PolicySpec> {
        match name {
            "adamls" => Ok(PolicySpec::Adamls),
            "naive" => Ok(PolicySpec::Naive(self.naive_config(profiles)?)),
            other => match other.strip_prefix("static:") {
                Some(model) if profiles.iter().any(|p| p.model_id() == model) => {
                    Ok(PolicySpec::Static { model: model.into() })
                }
                Some(model) if !model.is_empty() => Err(Error::Config(format!("no profile for model `{model}`"))),
                _ => Err(Error::Config(format!(
                    "unknown policy `{other}` (expected adamls, naive or static:<model>)"
                ))),
            },
        }
    }

    pub fn sim_config(&self, policy: PolicySpec) -> SimConfig {
        let sim = &self.simulation;
        let sample_seed = seed::derive(self.seed, &format!("sample/{}", policy.name()));
        SimConfig {
            workload: self.workload_spec(),
            policy,
            workers: sim.workers,
            switch_latency: sim.switch_latency,
            window: sim.window,
            t_wait: sim.t_wait,
            tick_interval: sim.tick_interval,
            network_delay: sim.network_delay,
            sample_seed,
            ci_level: self.learning.ci_level,
            ci_method: self.learning.ci_method,
            degradation: self.degradation,
            initial_model: sim.initial_model.clone(),
            trace_boundaries: false,
        }
    }

    pub fn ci_method(&self) -> CiMethod {
        self.learning.ci_method
    }
}

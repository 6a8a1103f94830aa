//! TOML run configuration.
//!
//! Only `n`, `m` and `T` are required. Every other key has a default: the
//! coefficients default to `f = sin`, `σ = 1 + ½ sin`, `u₀ = sin`, the seed to
//! 0, and each study section to the acceptance configuration. Unknown keys
//! are rejected.
//!
//! ```toml
//! n = 32
//! m = 64
//! T = 0.1
//! seed = 7
//! record = { stride = 8 }
//!
//! [drift]
//! kind = "cubic_cutoff"
//! a0 = 1.0
//! a1 = 0.0
//! a2 = -1.0
//! a3 = 0.0
//! r = 2.0
//!
//! [rates_space]
//! samples = 100
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    DensityPlan, HolderPlan, KernelErrorPlan, MalliavinRatePlan, Model, NondegeneracyPlan, SpatialRatePlan,
    TemporalRatePlan,
};
use crate::models::{Diffusion, Drift, InitialData};
use crate::solver::{RecordPolicy, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub record: RecordPolicy,
    #[serde(default)]
    pub drift: Drift,
    #[serde(default)]
    pub diffusion: Diffusion,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub rates_space: SpatialRatePlan,
    #[serde(default)]
    pub rates_time: TemporalRatePlan,
    #[serde(default)]
    pub kernel_errors: KernelErrorPlan,
    #[serde(default)]
    pub holder: HolderPlan,
    #[serde(default)]
    pub density: DensityPlan,
    #[serde(default)]
    pub malliavin: MalliavinRatePlan,
    #[serde(default)]
    pub nondegeneracy: NondegeneracyPlan,
}

impl Default for Config {
    /// Built-in configuration used when no file is given.
    fn default() -> Self {
        Self::minimal(32, 64, 0.1)
    }
}

impl Config {
    pub fn minimal(n: usize, m: usize, t_final: f64) -> Self {
        Self {
            n,
            m,
            t_final,
            seed: 0,
            record: RecordPolicy::default(),
            drift: Drift::default(),
            diffusion: Diffusion::default(),
            initial: InitialData::default(),
            rates_space: SpatialRatePlan::default(),
            rates_time: TemporalRatePlan::default(),
            kernel_errors: KernelErrorPlan::default(),
            holder: HolderPlan::default(),
            density: DensityPlan::default(),
            malliavin: MalliavinRatePlan::default(),
            nondegeneracy: NondegeneracyPlan::default(),
        }
    }

    /// Parses and validates `text`; `path` only labels error messages.
    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let config: Config =
            toml::from_str(text).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })?;
        config
            .solver_config()
            .validate()
            .map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { path: PathBuf::from(path), message: format!("cannot read config: {e}") })?;
        Self::parse_str(&text, path)
    }

    /// The effective configuration as TOML; parsing it back yields `self`.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot serialize config: {e}")))
    }

    pub fn model(&self) -> Model {
        Model { drift: self.drift, diffusion: self.diffusion, initial: self.initial.clone() }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            n: self.n,
            m: self.m,
            t_final: self.t_final,
            drift: self.drift,
            diffusion: self.diffusion,
            initial: self.initial.clone(),
            record: self.record,
        }
    }

    /// Replaces the Monte Carlo sample count of every study.
    pub fn override_samples(&mut self, samples: usize) {
        self.rates_space.samples = samples;
        self.rates_time.samples = samples;
        self.holder.samples = samples;
        self.density.samples = samples;
        self.malliavin.samples = samples;
        self.nondegeneracy.samples = samples;
    }
}

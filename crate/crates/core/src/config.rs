//! Run configuration: one TOML file with every model default filled in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::code::CrosstalkSpec;
use crate::experiment::EngineOptions;
use crate::noise::NoiseParameters;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("writing config: {0}")]
    Write(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
    /// Write the per-syndrome binary dump (needs `engine.per_syndrome`).
    pub syndrome_dump: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { directory: PathBuf::from("zzsim-out"), formats: vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Text], syndrome_dump: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub k_values: Vec<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { k_values: default_k_grid() }
    }
}

/// Default crosstalk strengths for sweeps: 0, 0.03, 0.23/7 to 0.33/7 in steps of 0.02/7, and 0.05.
pub fn default_k_grid() -> Vec<f64> {
    vec![0.0, 0.03, 0.23 / 7.0, 0.25 / 7.0, 0.27 / 7.0, 0.29 / 7.0, 0.31 / 7.0, 0.33 / 7.0, 0.05]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MovingOptions {
    pub pair: ((i32, i32), (i32, i32)),
    /// One run pair per T1 value (ns); empty means the configured T1 only.
    pub t1_grid: Vec<f64>,
}

impl Default for MovingOptions {
    fn default() -> Self {
        Self { pair: ((3, 3), (2, 4)), t1_grid: vec![30_000.0, 10_000.0, 3_000.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub rounds: usize,
    pub noise: NoiseParameters,
    pub crosstalk: CrosstalkSpec,
    pub engine: EngineOptions,
    pub output: OutputOptions,
    pub sweep: SweepOptions,
    pub moving: MovingOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rounds: 1,
            noise: NoiseParameters::default(),
            crosstalk: CrosstalkSpec::default(),
            engine: EngineOptions::default(),
            output: OutputOptions::default(),
            sweep: SweepOptions::default(),
            moving: MovingOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.rounds < 1 {
            return bad(format!("rounds must be at least 1, got {}", self.rounds));
        }
        self.noise.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !self.crosstalk.kt_region.is_finite() {
            return bad("crosstalk.kt_region must be finite".into());
        }
        if self.engine.workers == 0 {
            return bad("engine.workers must be positive".into());
        }
        if !(self.engine.memory_cap_gib > 0.0) {
            return bad("engine.memory_cap_gib must be positive".into());
        }
        if self.engine.width_cap() < 4 {
            return bad(format!("width cap {} is too small", self.engine.width_cap()));
        }
        if self.sweep.k_values.iter().any(|k| !k.is_finite()) {
            return bad("sweep.k_values must be finite".into());
        }
        if self.moving.t1_grid.iter().any(|t| !(*t > 0.0)) {
            return bad("moving.t1_grid entries must be positive".into());
        }
        if self.output.syndrome_dump && !self.engine.per_syndrome {
            return bad("output.syndrome_dump needs engine.per_syndrome".into());
        }
        Ok(())
    }
}

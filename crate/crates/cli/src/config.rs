//! Config file loading and flag/file merging.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use higs::{FracMemory, HigsError};
use serde::{Deserialize, Serialize};

use crate::commands::{df::DfArgs, harmonics::HarmonicsArgs, simulate::SimulateArgs, step::StepArgs};

/// Invalid or inconsistent user configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn is_parameter_error(err: &HigsError) -> bool {
    match err {
        HigsError::InvalidParameter { .. } | HigsError::InvalidTimeStep(_) | HigsError::DegenerateBand { .. } => true,
        HigsError::AtSample { source, .. } => is_parameter_error(source),
        _ => false,
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub parallel: Option<usize>,
    pub df: Option<DfArgs>,
    pub simulate: Option<SimulateArgs>,
    pub harmonics: Option<HarmonicsArgs>,
    pub step: Option<StepArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_error(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Globals {
    pub out: PathBuf,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub parallel: usize,
}

impl Globals {
    pub fn resolve(
        out: Option<PathBuf>,
        dt: Option<f64>,
        duration: Option<f64>,
        parallel: Option<usize>,
        file: &FileConfig,
    ) -> anyhow::Result<Self> {
        let dt = dt.or(file.dt);
        let duration = duration.or(file.duration);
        if let Some(dt) = dt {
            positive("dt", dt)?;
        }
        if let Some(d) = duration {
            positive("duration", d)?;
        }
        Ok(Self {
            out: out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
            dt,
            duration,
            parallel: parallel.or(file.parallel).unwrap_or(0),
        })
    }
}

pub fn positive(name: &str, value: f64) -> anyhow::Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(config_error(format!("{name} must be positive and finite, got {value}")))
    }
}

pub fn unit_interval(name: &str, value: f64) -> anyhow::Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(config_error(format!("{name} must lie in [0, 1], got {value}")))
    }
}

/// Field-wise `flag.or(file)` for an argument struct whose fields are all
/// `Option`s.
macro_rules! overlay {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl $ty {
            pub fn overlay(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}
pub(crate) use overlay;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    #[default]
    Full,
    SinceSwitch,
}

impl From<MemoryMode> for FracMemory {
    fn from(m: MemoryMode) -> Self {
        match m {
            MemoryMode::Full => FracMemory::Full,
            MemoryMode::SinceSwitch => FracMemory::SinceSwitch,
        }
    }
}

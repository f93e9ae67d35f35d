use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::LedgerConfig;
use crate::dynamics::StepperConfig;
use crate::ensemble::{CapMode, ModelParams, DEFAULT_MU};
use crate::error::{Error, Result};
use crate::setup::{ForcingPattern, PerturbationSpec};
use crate::spectral::GridSpec;

/// Environment variable that overrides the output root.
pub const OUTPUT_ROOT_ENV: &str = "EEV_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnits {
    #[default]
    Absolute,
    /// Multiples of `T* = L / run.u_reference`.
    TStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    #[serde(default)]
    pub t_end_units: TimeUnits,
    /// Velocity scale used to convert `t_star` units.
    #[serde(default)]
    pub u_reference: Option<f64>,
    /// Diagnostics are sampled every this many steps.
    #[serde(default = "one")]
    pub sample_every: u64,
    /// Checkpoints every this many steps; 0 writes only the final one.
    #[serde(default)]
    pub checkpoint_every: u64,
    #[serde(default)]
    pub write_checkpoints: bool,
    /// Checkpoint sidecar (`.json`) whose members replace the generated
    /// initial condition; time restarts at zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_checkpoint: Option<PathBuf>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Run directory, relative to the output root unless absolute.
    pub dir: PathBuf,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelParams,
    pub perturbation: PerturbationSpec,
    pub stepper: StepperConfig,
    pub run: RunSection,
    #[serde(default)]
    pub ledger: LedgerConfig,
    pub output: OutputSection,
}

impl Default for RunConfig {
    /// The 2D desk configuration: `n = 128`, `J = 4`, `δ = 0.2`.
    fn default() -> Self {
        let mut model = ModelParams::new(1e-3, 0.01, 4);
        model.mu = DEFAULT_MU;
        model.cap_mode = CapMode::Uncapped;
        let mut perturbation = PerturbationSpec::new(20240101, 0.2, 2, 4, 1.0);
        perturbation.pattern = ForcingPattern::RandomBand;
        perturbation.ic_amplitude = 0.5;
        Self {
            grid: GridSpec::new(2, 128, 2.0 * PI),
            model,
            perturbation,
            stepper: StepperConfig::new(1e-2),
            run: RunSection {
                t_end: 10.0,
                t_end_units: TimeUnits::Absolute,
                u_reference: None,
                sample_every: 1,
                checkpoint_every: 0,
                write_checkpoints: false,
                initial_checkpoint: None,
            },
            ledger: LedgerConfig::default(),
            output: OutputSection { dir: PathBuf::from("runs/default") },
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.model.validate()?;
        self.stepper.validate()?;
        self.ledger.validate()?;
        if self.model.ensemble_size == 0 {
            return Err(Error::config("model.ensemble_size must be >= 1"));
        }
        let grid = crate::spectral::Grid::new(self.grid)?;
        self.perturbation.validate(&grid)?;
        if !(self.run.t_end > 0.0 && self.run.t_end.is_finite()) {
            return Err(Error::config(format!("run.t_end must be > 0, got {}", self.run.t_end)));
        }
        if self.run.t_end_units == TimeUnits::TStar && !matches!(self.run.u_reference, Some(u) if u > 0.0) {
            return Err(Error::config("run.t_end_units = \"t_star\" needs run.u_reference > 0"));
        }
        if self.run.sample_every == 0 {
            return Err(Error::config("run.sample_every must be >= 1"));
        }
        Ok(())
    }

    /// Absolute end time given the large length scale `l` of the forcing.
    pub fn absolute_t_end(&self, l: f64) -> f64 {
        match self.run.t_end_units {
            TimeUnits::Absolute => self.run.t_end,
            TimeUnits::TStar => self.run.t_end * l / self.run.u_reference.unwrap_or(1.0),
        }
    }

    /// Run directory with the output root applied: `root` wins over the
    /// environment variable, which wins over the current directory.
    pub fn resolved_output_dir(&self, root: Option<&Path>) -> PathBuf {
        if self.output.dir.is_absolute() {
            return self.output.dir.clone();
        }
        let root = root.map(Path::to_path_buf).or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from));
        match root {
            Some(r) => r.join(&self.output.dir),
            None => self.output.dir.clone(),
        }
    }
}

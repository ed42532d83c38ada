//! Run configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticsConfig;
use crate::error::{Result, SimError};
use crate::evolution::SchemeConfig;
use crate::grid::GridSpec;
use crate::initial_data::{BumpShape, InitialDataSpec};
use crate::modulation::LambdaSource;

pub const SCHEMA_ID: &str = "nematic-blowup/run/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub grid: GridSpec,
    pub scheme: SchemeConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub tracking: TrackingConfig,
    pub stop: StopConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialConfig {
    /// Rescaled profile plus small bumps, scale `eps^-4`.
    Focusing(InitialDataSpec),
    /// `I_mu` plus optional bumps, with `v = 0`.
    Profile(ProfileDataSpec),
}

impl InitialConfig {
    pub fn k(&self) -> u32 {
        match self {
            InitialConfig::Focusing(s) => s.k,
            InitialConfig::Profile(s) => s.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDataSpec {
    pub k: u32,
    pub mu: f64,
    /// Added to `phi`; its component along `J_mu` is removed.
    #[serde(default = "zero_bump")]
    pub phi_bump: BumpShape,
    #[serde(default = "zero_bump")]
    pub phi_t_bump: BumpShape,
    #[serde(default)]
    pub seed: u64,
}

fn zero_bump() -> BumpShape {
    BumpShape::Zero
}

impl ProfileDataSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(SimError::UnsupportedIndex {
                k: self.k,
                reason: "the modulation constants need k >= 3",
            });
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(SimError::Config(format!("mu must be positive, got {}", self.mu)));
        }
        self.phi_bump.validate("phi_bump")?;
        self.phi_t_bump.validate("phi_t_bump")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// A CSV row every this many steps.
    #[serde(default = "default_report")]
    pub steps_per_report: u64,
    /// Field snapshot cadence in steps; 0 disables.
    #[serde(default)]
    pub snapshot_every: u64,
    /// Checkpoint cadence in steps; 0 disables.
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: u64,
}

fn default_report() -> u64 {
    10
}
fn default_checkpoint() -> u64 {
    1000
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            steps_per_report: default_report(),
            snapshot_every: 0,
            checkpoint_every: default_checkpoint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingMode {
    Rootfind,
    Ode63,
}

impl From<TrackingMode> for LambdaSource {
    fn from(m: TrackingMode) -> Self {
        match m {
            TrackingMode::Rootfind => LambdaSource::OrthogonalityRootfind,
            TrackingMode::Ode63 => LambdaSource::Ode63,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Evolve `(phi, v)`.
    Velocity,
    /// Evolve `(phi, h)` and reconstruct `v`.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingConfig {
    #[serde(default = "default_mode")]
    pub mode: TrackingMode,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
}

fn default_mode() -> TrackingMode {
    TrackingMode::Rootfind
}
fn default_formulation() -> Formulation {
    Formulation::Velocity
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            formulation: default_formulation(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    pub t_end: f64,
    /// Stop once `lambda` exceeds this multiple of its initial value.
    #[serde(default = "default_lambda_stop")]
    pub lambda_stop_factor: f64,
    /// Stop once fewer than this many local spacings fit inside `1/lambda`.
    #[serde(default = "default_resolution_nodes")]
    pub resolution_nodes: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
}

fn default_lambda_stop() -> f64 {
    1e3
}
fn default_resolution_nodes() -> f64 {
    4.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub k: Vec<u32>,
    /// Amplitude of both default bumps.
    #[serde(default)]
    pub amplitude: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_ID {
            return Err(SimError::Config(format!(
                "schema: expected \"{SCHEMA_ID}\", got \"{}\"",
                self.schema
            )));
        }
        let grid = self.grid.build()?;
        self.scheme.validate(&grid)?;
        match &self.initial {
            InitialConfig::Focusing(s) => s.validate()?,
            InitialConfig::Profile(s) => s.validate()?,
        }
        self.diagnostics.validate()?;
        if self.output.steps_per_report == 0 {
            return Err(SimError::Config("output.steps_per_report must be at least 1".into()));
        }
        let s = &self.stop;
        if !(s.t_end > 0.0) || !s.t_end.is_finite() {
            return Err(SimError::Config(format!("stop.t_end must be positive, got {}", s.t_end)));
        }
        if !(s.lambda_stop_factor > 1.0) {
            return Err(SimError::Config(format!(
                "stop.lambda_stop_factor must exceed 1, got {}",
                s.lambda_stop_factor
            )));
        }
        if !(s.resolution_nodes > 0.0) {
            return Err(SimError::Config("stop.resolution_nodes must be positive".into()));
        }
        if let Some(sw) = &self.sweep {
            if sw.epsilon.iter().any(|e| !(*e > 0.0)) {
                return Err(SimError::Config("sweep.epsilon entries must be positive".into()));
            }
            if sw.k.iter().any(|&k| k < 4) {
                return Err(SimError::Config("sweep.k entries must be at least 4".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, so formatting of the TOML source
    /// does not matter.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PROFILE_TOML: &str = r#"
schema = "nematic-blowup/run/1"

[grid]
r_max = 10.0
n = 200
grading = { kind = "uniform" }

[scheme]
dt = 0.02

[initial]
family = "profile"
k = 4
mu = 1.0

[stop]
t_end = 0.1
"#;

    #[test]
    fn parses_minimal_profile_config() {
        let c = RunConfig::from_toml_str(PROFILE_TOML).unwrap();
        assert_eq!(c.initial.k(), 4);
        assert_eq!(c.output.steps_per_report, 10);
        assert_eq!(c.tracking.mode, TrackingMode::Rootfind);
    }

    #[test]
    fn missing_dt_names_the_key() {
        let text = PROFILE_TOML.replace("dt = 0.02", "theta = 0.5");
        let err = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("dt"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = PROFILE_TOML.replace("mu = 1.0", "mu = 1.0\nnu = 2.0");
        let err = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("nu"), "{err}");
        let text = PROFILE_TOML.replace("t_end = 0.1", "t_end = 0.1\nt_begin = 0.0");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn module_invariants_revalidated() {
        let cfl = PROFILE_TOML.replace("dt = 0.02", "dt = 0.2");
        assert!(matches!(RunConfig::from_toml_str(&cfl), Err(SimError::Cfl { .. })));
        let schema = PROFILE_TOML.replace("run/1", "run/0");
        assert!(RunConfig::from_toml_str(&schema).is_err());
        let delta = format!("{PROFILE_TOML}\n[diagnostics]\ndelta = 1.5\n");
        assert!(RunConfig::from_toml_str(&delta).is_err());
    }

    #[test]
    fn focusing_family_round_trips() {
        let text = r#"
schema = "nematic-blowup/run/1"
[grid]
r_max = 50.0
n = 4096
grading = { kind = "geometric", ratio = 1.002 }
[scheme]
dt = 2.5e-5
[initial]
family = "focusing"
epsilon = 0.5
c_small = 0.7071067811865476
k = 4
u0 = { kind = "rational", amplitude = 1e-3, power = 3.0, decay = 3.0 }
g0 = { kind = "rational", amplitude = 1e-3, power = 2.0, decay = 3.5 }
[stop]
t_end = 1.0
[sweep]
epsilon = [0.5, 0.6]
"#;
        let c = RunConfig::from_toml_str(text).unwrap();
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
    }
}

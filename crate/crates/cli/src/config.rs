//! Scenario configuration files (TOML with one table per section).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub grid: GridSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub gauge: GaugeSection,
    #[serde(default)]
    pub potential: PotentialSection,
    pub evolver: EvolverSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
}

fn default_output_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: Vec<usize>,
    pub lengths: Vec<f64>,
    #[serde(default = "default_boundary")]
    pub boundary: String,
}

fn default_boundary() -> String {
    "periodic".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub c: f64,
    /// One entry per dimension, or a single value broadcast to all.
    #[serde(default)]
    pub masses: Vec<f64>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_scale: Option<f64>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            c: 1.0,
            masses: Vec::new(),
            betas: Vec::new(),
            info_scale: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Gaussian,
    Uniform,
    PlaneWave,
    HoGround,
    RingWinding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub preset: Preset,
    /// Packet centre; defaults to the middle of the box.
    #[serde(default)]
    pub centre: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub wavenumber: Vec<f64>,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "default_nu")]
    pub nu: i64,
    /// Relative density modulation of the ring state.
    #[serde(default)]
    pub modulation: f64,
}

fn default_sigma() -> f64 {
    0.5
}

fn default_nu() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSection {
    /// Uniform connection, one entry per dimension.
    #[serde(default)]
    pub connection: Vec<f64>,
    /// Winding of the angle chi along dimension 0.
    #[serde(default)]
    pub chi_winding: i64,
    #[serde(default)]
    pub seam_twist: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    None,
    Harmonic,
    Barrier,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub kind: PotentialKind,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub centre: Vec<f64>,
    #[serde(default)]
    pub height: f64,
    #[serde(default)]
    pub width: f64,
    #[serde(default)]
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    CrankNicolson,
    SplitStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolverSection {
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub scheme: SchemeName,
}

/// Which velocity moves the walkers. `current` drops the osmotic part and
/// exists as a control: it should not reproduce |psi|^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkerVelocity {
    #[default]
    Drift,
    Current,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default)]
    pub size: usize,
    #[serde(default)]
    pub velocity: WalkerVelocity,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The configuration as written back out, with all defaults filled in.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

//! Run configuration: one JSON document with a `model` block and optional
//! task blocks. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subradiance::dynamics::CorrelationKind;
use subradiance::fitting::FitParams;
use subradiance::sweep::{Observable, SweepSpec};
use subradiance::{SpaceDescriptor, SystemParams};

use crate::error::{invalid, CliError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub steady: Option<SteadyConfig>,
    #[serde(default)]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub g2: Option<G2Config>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
}

/// System parameters, rates in units of the coupling `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_emitters: usize,
    #[serde(default = "default_cutoff")]
    pub fock_cutoff: usize,
    #[serde(default = "one")]
    pub coupling: f64,
    pub kappa: f64,
    pub pump: f64,
    #[serde(default)]
    pub dephasing: f64,
    #[serde(default)]
    pub gamma_r: f64,
    /// Defaults to all zero.
    #[serde(default)]
    pub detunings: Option<Vec<f64>>,
}

fn default_cutoff() -> usize {
    3
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn space(&self) -> Result<SpaceDescriptor, CliError> {
        SpaceDescriptor::new(self.n_emitters, self.fock_cutoff).map_err(|e| invalid(format!("model: {e}")))
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            coupling: self.coupling,
            kappa: self.kappa,
            pump: self.pump,
            dephasing: self.dephasing,
            gamma_r: self.gamma_r,
            detunings: self.detunings.clone().unwrap_or_else(|| vec![0.0; self.n_emitters]),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.space()?;
        self.params().validate(self.n_emitters).map_err(|e| invalid(format!("model: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyConfig {
    pub observables: Vec<Observable>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    Ground,
    FullyExcited,
    /// Populations over the full product basis, index `bits·(n_max+1) + n`.
    CustomDiagonal(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub initial_state: InitialState,
}

fn default_points() -> usize {
    101
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Config {
    pub tau_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "collective")]
    pub kind: CorrelationKind,
}

fn collective() -> CorrelationKind {
    CorrelationKind::Collective
}

/// Starting point for the fit; times in ps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitStart {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "T_a_ps")]
    pub t_a: f64,
    #[serde(rename = "T_b_ps")]
    pub t_b: f64,
}

impl FitStart {
    pub fn params(&self) -> FitParams {
        FitParams::new(self.a, self.b, self.t_a, self.t_b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Two-column CSV (delay_ps, counts); relative paths resolve against the
    /// config file's directory.
    pub data: PathBuf,
    #[serde(default)]
    pub irf_sigma: Option<f64>,
    /// `τ_norm` in ps: counts are divided by their mean over `|τ| ≥ τ_norm`.
    /// Omit when the file already holds normalized `g²(τ)` values.
    #[serde(default)]
    pub normalization_window: Option<f64>,
    #[serde(default)]
    pub init: Option<FitStart>,
}

/// Parse a configuration document without touching the file system.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        let m = self.model.as_ref().ok_or_else(|| invalid("config has no `model` block"))?;
        m.validate()?;
        Ok(m)
    }
}

/// Evenly spaced grid from 0 to `end`; a zero span gives the single point 0.
pub fn time_grid(end: f64, points: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if !(end >= 0.0) || !end.is_finite() {
        return Err(invalid(format!("{what} must be finite and >= 0, got {end}")));
    }
    if end == 0.0 {
        return Ok(vec![0.0]);
    }
    if points < 2 {
        return Err(invalid(format!("{what}: at least 2 points are needed, got {points}")));
    }
    Ok((0..points).map(|k| if k + 1 == points { end } else { end * k as f64 / (points - 1) as f64 }).collect())
}

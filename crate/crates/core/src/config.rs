//! Experiment configuration: one TOML file per experiment, nested blocks.

use serde::{Deserialize, Serialize};

use crate::burgers::SmoothingConfig;
use crate::diagnostics::BoundsConfig;
use crate::error::{Error, Result};
use crate::gas::GasModel;
use crate::riemann::EndStates;
use crate::solver::{PerturbationSpec, SolverConfig};

/// End states as written in a config file: each temperature may be given
/// directly or derived from a shared entropy `s_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndsConfig {
    pub v_minus: f64,
    pub u_minus: f64,
    pub theta_minus: Option<f64>,
    pub v_plus: f64,
    pub u_plus: f64,
    pub theta_plus: Option<f64>,
    pub s_bar: Option<f64>,
}

impl EndsConfig {
    pub fn resolve(&self, gas: &GasModel) -> Result<EndStates> {
        let (th_m, th_p) = match (self.theta_minus, self.theta_plus, self.s_bar) {
            (_, _, Some(s)) => {
                let derived = (gas.theta_from_vs(self.v_minus, s)?, gas.theta_from_vs(self.v_plus, s)?);
                for (given, d) in [(self.theta_minus, derived.0), (self.theta_plus, derived.1)] {
                    if let Some(g) = given {
                        if (g - d).abs() > 1e-10 * d {
                            return Err(Error::Config(format!(
                                "temperature {g} contradicts s_bar = {s} (expected {d})"
                            )));
                        }
                    }
                }
                derived
            }
            (Some(m), None, None) => {
                let e = EndStates::isentropic(gas, self.v_minus, self.u_minus, m, self.v_plus, self.u_plus)?;
                (m, e.theta_plus)
            }
            (None, Some(p), None) => {
                let e = EndStates::isentropic(gas, self.v_plus, self.u_plus, p, self.v_minus, self.u_minus)?;
                (e.theta_plus, p)
            }
            (Some(m), Some(p), None) => (m, p),
            (None, None, None) => {
                return Err(Error::Config("end states need a temperature or s_bar".into()));
            }
        };
        let ends = EndStates {
            v_minus: self.v_minus,
            u_minus: self.u_minus,
            theta_minus: th_m,
            v_plus: self.v_plus,
            u_plus: self.u_plus,
            theta_plus: th_p,
        };
        ends.validate(gas)?;
        Ok(ends)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_cells: usize,
    /// Half width of `[-L, L]`; chosen from the far-field tolerance when absent.
    pub half_width: Option<f64>,
    #[serde(default = "default_far_field_tol")]
    pub far_field_tol: f64,
}

fn default_far_field_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Jiang probe locations; empty disables the check.
    #[serde(default)]
    pub probes: Vec<f64>,
    /// Write a fields snapshot every this many ticks (0: first and last only).
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub bounds: BoundsConfig,
    /// Wave-interaction values below this are reported as excursions.
    #[serde(default = "default_wave_floor")]
    pub wave_interaction_floor: f64,
}

fn default_wave_floor() -> f64 {
    -1e-6
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            probes: Vec::new(),
            snapshot_every: 0,
            bounds: BoundsConfig::default(),
            wave_interaction_floor: default_wave_floor(),
        }
    }
}

/// Sampling for the `profile` and `riemann` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_points")]
    pub n_points: usize,
    /// Spatial window for profile tables, in units of `max_speed * (t + t0)`.
    #[serde(default = "default_reach")]
    pub reach: f64,
}

fn default_times() -> Vec<f64> {
    vec![0.0, 10.0, 100.0]
}

fn default_points() -> usize {
    201
}

fn default_reach() -> f64 {
    1.5
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            times: default_times(),
            n_points: default_points(),
            reach: default_reach(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub gas: GasModel,
    pub ends: EndsConfig,
    #[serde(default)]
    pub smoothing: SmoothingConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
}

impl ExperimentConfig {
    /// Parses TOML, applies `key.path=value` overrides, then validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        // a resolved config carries its derived values along; they are outputs
        table.remove("derived");
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(Error::Config(format!("experiment name {:?} is not a plain directory name", self.name)));
        }
        self.gas.validate()?;
        self.ends.resolve(&self.gas)?;
        crate::burgers::Smoothing::new(self.smoothing)?;
        self.solver.validate()?;
        self.perturbation.validate()?;
        if self.grid.n_cells < crate::solver::Grid::MIN_CELLS {
            return Err(Error::Config(format!("grid.n_cells = {} is too small", self.grid.n_cells)));
        }
        if let Some(l) = self.grid.half_width {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("grid.half_width = {l} must be positive")));
            }
        }
        if !(self.grid.far_field_tol > 0.0) {
            return Err(Error::Config("grid.far_field_tol must be positive".into()));
        }
        if self.sampling.n_points < 2 || self.sampling.times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("sampling needs n_points >= 2 and nonnegative times".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Sets `a.b.c = value` in a TOML table; numeric segments index arrays
/// (`perturbation.bump.0.amplitude`). The value is read as TOML and falls back
/// to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let bad = || Error::Config(format!("override path {key:?} does not fit the config structure"));
    let mut node = table
        .entry(path[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for part in &path[1..] {
        node = match node {
            toml::Value::Table(t) => t
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new())),
            toml::Value::Array(a) => {
                let i: usize = part.parse().map_err(|_| bad())?;
                a.get_mut(i).ok_or_else(bad)?
            }
            _ => return Err(bad()),
        };
    }
    *node = parse_value(raw.trim());
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

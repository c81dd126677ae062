//! JSON run configuration in laboratory units (Hz, s, K) and its
//! resolution into angular-frequency model types.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{Engine, PhaseSweepParams, ProcessMultipliers, SpectrumParams};
use crate::dynamics::{DecoherenceParams, PropagationConfig};
use crate::error::{Error, Result};
use crate::model::{qubit_frequency, CouplingParams, DriveSpec, QubitParams, ResonatorParams};
use crate::rwa::Process;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    /// Axis specs; subcommands fall back to their own defaults when empty.
    #[serde(default)]
    pub sweep: Vec<AxisSpec>,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<PropagationSection>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub calibrate: CalibrateConfig,
}

fn default_engine() -> Engine {
    Engine::Analytic
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            drive: DriveConfig::default(),
            sweep: Vec::new(),
            engine: Engine::Analytic,
            propagation: None,
            output: OutputConfig::default(),
            spectrum: SpectrumConfig::default(),
            calibrate: CalibrateConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub qubit: QubitConfig,
    #[serde(default)]
    pub resonator: ResonatorConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub decoherence: DecoherenceConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            qubit: QubitConfig {
                gap_hz: 8.2e9,
                bias_hz: 0.0,
            },
            resonator: ResonatorConfig::default(),
            coupling: CouplingConfig::default(),
            decoherence: DecoherenceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub gap_hz: f64,
    #[serde(default)]
    pub bias_hz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonatorConfig {
    pub frequency_hz: f64,
    pub kappa_ext_hz: f64,
    pub kappa_int_hz: f64,
    pub n_max: usize,
}

impl Default for ResonatorConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 3.88e9,
            kappa_ext_hz: 2.43e6,
            kappa_int_hz: 70e3,
            n_max: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    pub transverse_hz: f64,
    pub longitudinal_hz: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            transverse_hz: 40e6,
            longitudinal_hz: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoherenceConfig {
    pub t1_s: f64,
    pub t2_s: f64,
}

impl Default for DecoherenceConfig {
    fn default() -> Self {
        Self {
            t1_s: 2.6e-6,
            t2_s: 0.1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    /// Drive frequency; `None` means resonant with the qubit.
    pub frequency_hz: Option<f64>,
    pub phase_rad: f64,
    pub max_amplitude_hz: f64,
    pub imbalance_db: f64,
    pub effective_temperature_k: f64,
    pub residual_leakage_db: Option<f64>,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            frequency_hz: None,
            phase_rad: PI / 2.0,
            max_amplitude_hz: 5e6,
            imbalance_db: 0.0,
            effective_temperature_k: 0.125,
            residual_leakage_db: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    ThetaPi,
    FrequencyHz,
    PhiRad,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn new(name: AxisName, start: f64, stop: f64, points: usize) -> Self {
        Self {
            name,
            start,
            stop,
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(config_error("sweep.points", "axis needs at least 2 points"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start == self.stop {
            return Err(config_error(
                "sweep.start",
                "start and stop must be finite and distinct",
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        crate::analysis::linspace(self.start, self.stop, self.points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub t_final_s: f64,
    /// Fixed step; `None` uses the stability bound.
    #[serde(default)]
    pub dt_s: Option<f64>,
    #[serde(default = "default_window")]
    pub steady_window: f64,
}

fn default_window() -> f64 {
    0.2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("fluxparity-out"),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub process: Process,
    pub linewidth_prefactor: f64,
    /// Growth of the linewidth away from the degeneracy point, per radian.
    pub dephasing_slope_hz: f64,
    pub multipliers: ProcessMultipliers,
    /// Resonator photons seeded for oracle sideband cells.
    pub readout_photons: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            process: Process::OnePhoton,
            linewidth_prefactor: 1.0,
            dephasing_slope_hz: 20e6,
            multipliers: ProcessMultipliers::default(),
            readout_photons: 1.0,
        }
    }
}

/// Inputs of the calibration relations, quoted as `γ/2π` in Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub drive_photons: f64,
    pub gamma1_hz: f64,
    pub gamma2_hz: f64,
    pub coupling_hz: f64,
    pub readout_photons: f64,
    pub probe_points: usize,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            drive_photons: 0.16,
            gamma1_hz: 385e3,
            gamma2_hz: 9.7e6,
            coupling_hz: 40e6,
            readout_photons: 33.0,
            probe_points: 801,
        }
    }
}

/// Model types resolved from a [`RunConfig`], angular frequencies throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub qubit: QubitParams,
    pub resonator: ResonatorParams,
    pub coupling: CouplingParams,
    pub decoherence: DecoherenceParams,
    pub drive: DriveSpec,
    /// Whether the drive frequency was given rather than defaulted to `ω_q`.
    pub drive_frequency_set: bool,
    pub propagation: Option<PropagationSection>,
}

pub(crate) fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_owned(),
        message: message.into(),
    }
}

fn at(path: &'static str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => config_error(path, format!("{name}: {reason}")),
        other => other,
    }
}

impl RunConfig {
    /// Parses a JSON document, rejecting unknown keys and reporting the path
    /// of the offending field.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)
            .map_err(|e| config_error("", format!("invalid JSON: {e}")))?;
        apply_overrides(&mut value, overrides)?;
        Self::from_value(value)
    }

    /// Built-in defaults with `overrides` applied.
    pub fn defaults_with(overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::default()).expect("defaults serialize");
        apply_overrides(&mut value, overrides)?;
        Self::from_value(value)
    }

    fn from_value(value: Value) -> Result<Self> {
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let mut path = e.path().to_string();
            let message = e.inner().to_string();
            if let Some(field) = missing_field(&message) {
                path = if path.is_empty() || path == "." {
                    field.to_owned()
                } else {
                    format!("{path}.{field}")
                };
            }
            config_error(&path, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for axis in &self.sweep {
            axis.validate()?;
        }
        if self.engine == Engine::Oracle && self.propagation.is_none() {
            return Err(config_error(
                "propagation",
                "engine=oracle requires a propagation block",
            ));
        }
        self.resolve().map(|_| ())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let s = &self.system;
        let qubit = QubitParams::new(TAU * s.qubit.gap_hz, TAU * s.qubit.bias_hz)
            .map_err(|e| at("system.qubit.gap_hz", e))?;
        let resonator = ResonatorParams::new(
            TAU * s.resonator.frequency_hz,
            TAU * s.resonator.kappa_ext_hz,
            TAU * s.resonator.kappa_int_hz,
            s.resonator.n_max,
        )
        .map_err(|e| at("system.resonator", e))?;
        let coupling = CouplingParams::new(
            TAU * s.coupling.transverse_hz,
            TAU * s.coupling.longitudinal_hz,
        )
        .map_err(|e| at("system.coupling", e))?;
        let decoherence = DecoherenceParams::from_times(s.decoherence.t1_s, s.decoherence.t2_s)
            .map_err(|e| at("system.decoherence", e))?;
        let d = &self.drive;
        if !(d.effective_temperature_k >= 0.0) {
            return Err(config_error(
                "drive.effective_temperature_k",
                "must be non-negative",
            ));
        }
        let frequency = d
            .frequency_hz
            .map(|f| TAU * f)
            .unwrap_or_else(|| qubit_frequency(&qubit));
        let drive = DriveSpec::new(frequency, d.phase_rad, TAU * d.max_amplitude_hz)
            .map_err(|e| at("drive", e))?
            .with_temperature(d.effective_temperature_k)
            .with_imbalance_db(d.imbalance_db)
            .with_residual_leakage_db(d.residual_leakage_db);
        if let Some(p) = &self.propagation {
            if !(p.t_final_s > 0.0) {
                return Err(config_error("propagation.t_final_s", "must be positive"));
            }
            if let Some(dt) = p.dt_s {
                if !(dt > 0.0) {
                    return Err(config_error("propagation.dt_s", "must be positive"));
                }
            }
        }
        Ok(Resolved {
            qubit,
            resonator,
            coupling,
            decoherence,
            drive,
            drive_frequency_set: d.frequency_hz.is_some(),
            propagation: self.propagation.clone(),
        })
    }

    /// Sweep axis `name`, or `fallback` when the config does not define it.
    pub fn axis(&self, name: AxisName, fallback: AxisSpec) -> AxisSpec {
        self.sweep
            .iter()
            .find(|a| a.name == name)
            .cloned()
            .unwrap_or(fallback)
    }
}

impl Resolved {
    pub fn spectrum_params(&self, cfg: &SpectrumConfig) -> SpectrumParams {
        let amps = crate::model::drive_amplitudes(&self.drive, qubit_frequency(&self.qubit));
        SpectrumParams {
            gap: self.qubit.gap,
            resonator_frequency: self.resonator.frequency,
            g_t: self.coupling.transverse,
            longitudinal: amps.longitudinal,
            transversal: amps.coherent_transversal(),
            gamma2: self.decoherence.gamma2,
            gamma_phi: TAU * cfg.dephasing_slope_hz,
            linewidth_prefactor: cfg.linewidth_prefactor,
            n_max: self.resonator.n_max,
        }
    }

    /// The phase sweep runs at the degeneracy point, resonant unless a
    /// drive frequency was given.
    pub fn phase_sweep_params(&self) -> PhaseSweepParams {
        let mut drive = self.drive;
        if !self.drive_frequency_set {
            drive.frequency = self.qubit.gap;
        }
        PhaseSweepParams {
            gap: self.qubit.gap,
            drive,
            decoherence: self.decoherence,
        }
    }

    /// Propagation settings for a Hamiltonian whose step bound is `max_dt`.
    pub fn propagation_config(&self, max_dt: f64) -> Result<PropagationConfig> {
        let p = self.propagation.as_ref().ok_or_else(|| {
            config_error("propagation", "engine=oracle requires a propagation block")
        })?;
        let dt = p.dt_s.unwrap_or(max_dt);
        Ok(PropagationConfig::new(dt, p.t_final_s)?.with_window(p.steady_window))
    }
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

/// Applies `a.b.c=value` overrides; values parse as JSON and fall back to strings.
pub fn apply_overrides(value: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| config_error(item, "override must look like path=value"))?;
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        let mut cursor = &mut *value;
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(config_error(path, "empty path segment"));
        }
        for key in &keys[..keys.len() - 1] {
            let obj = cursor
                .as_object_mut()
                .ok_or_else(|| config_error(path, "cannot descend into a non-object"))?;
            cursor = obj
                .entry(key.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
        let obj = cursor
            .as_object_mut()
            .ok_or_else(|| config_error(path, "cannot set a field on a non-object"))?;
        obj.insert(keys[keys.len() - 1].to_owned(), parsed);
    }
    Ok(())
}

//! Figure-level products and calibration formulas: selection-rule tables,
//! spectrum maps, phase sweeps, and the readout/linewidth relations.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::dynamics::{
    max_step, qubit_drive_hamiltonian, saturation_pe, sideband_hamiltonian, steady_state_pe,
    with_thermal_floor, DecoherenceParams, DensityMatrix, PropagationConfig, Sideband, SidebandRun,
};
use crate::error::{Error, Result};
use crate::model::{
    drive_amplitudes, CouplingParams, DriveSpec, QubitParams, ResonatorParams, BOLTZMANN, HBAR,
};
use crate::operators::{
    on_qubit, parity_classify_matrix, parity_ops, pauli, HilbertSpace, ParityClass, PauliKind,
};
use crate::rwa::{
    blue_two_photon_amplitude, one_photon_amplitude, sideband_amplitudes, two_photon_amplitude,
    Process,
};

/// Relative threshold below which an amplitude counts as forbidden.
pub const FORBIDDEN_RELATIVE: f64 = 1e-12;

/// `p_str = exp(−ħω_q/(k_B T_e))`, zero at `T_e = 0`.
pub fn stray_excitation(omega_q: f64, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::invalid("temperature", "must be non-negative"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok((-HBAR * omega_q / (BOLTZMANN * temperature)).exp())
}

/// `γ_q = √(γ2² + n̄_d (2g)² γ2/γ1)`.
pub fn power_broadening(drive_photons: f64, dec: &DecoherenceParams, g: f64) -> Result<f64> {
    if !(dec.gamma1 > 0.0) {
        return Err(Error::invalid(
            "gamma1",
            "power broadening requires gamma1 > 0",
        ));
    }
    let (g1, g2) = (dec.gamma1, dec.gamma2);
    Ok((g2 * g2 + drive_photons * 4.0 * g * g * g2 / g1).sqrt())
}

/// Inverse of [`power_broadening`]: the drive photon number giving `linewidth`.
pub fn drive_photons_for_linewidth(linewidth: f64, dec: &DecoherenceParams, g: f64) -> Result<f64> {
    if !(dec.gamma1 > 0.0) || g == 0.0 || dec.gamma2 == 0.0 {
        return Err(Error::invalid(
            "power_broadening",
            "requires gamma1, gamma2, g > 0",
        ));
    }
    Ok((linewidth * linewidth - dec.gamma2 * dec.gamma2) * dec.gamma1 / (4.0 * g * g * dec.gamma2))
}

/// Either side of the AC Stark relation `δω_q = 2n̄g_t²/δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarkQuantity {
    Photons(f64),
    Shift(f64),
}

pub fn ac_stark_and_photons(
    g_t: f64,
    detuning: f64,
    known: StarkQuantity,
) -> Result<StarkQuantity> {
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(Error::invalid("detuning", "must be nonzero"));
    }
    let per_photon = 2.0 * g_t * g_t / detuning;
    match known {
        StarkQuantity::Photons(n) => Ok(StarkQuantity::Shift(per_photon * n)),
        StarkQuantity::Shift(s) if per_photon != 0.0 => Ok(StarkQuantity::Photons(s / per_photon)),
        StarkQuantity::Shift(_) => Err(Error::invalid("g_t", "must be nonzero to invert")),
    }
}

/// `n_crit = δ²/(2g_t)²`.
pub fn critical_photon_number(g_t: f64, detuning: f64) -> Result<f64> {
    if !(g_t > 0.0) {
        return Err(Error::invalid("g_t", "must be positive"));
    }
    let ratio = detuning / (2.0 * g_t);
    Ok(ratio * ratio)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitState {
    Ground,
    Excited,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCurve {
    pub values: Vec<f64>,
    pub center: f64,
    pub width: f64,
    /// `|g_t/δ|`; above 0.1 the dispersive picture is unreliable.
    pub dispersive_ratio: f64,
}

impl TransmissionCurve {
    pub fn outside_dispersive_regime(&self) -> bool {
        self.dispersive_ratio > 0.1
    }
}

/// Lorentzian transmission pulled to `ω_r ± g_t²/δ` (+ for |e⟩) with full
/// width `κ_x + κ_i` and peak `κ_x/(κ_x + κ_i)`.
pub fn resonator_transmission(
    r: &ResonatorParams,
    state: QubitState,
    g_t: f64,
    detuning: f64,
    probe: &[f64],
) -> Result<TransmissionCurve> {
    if detuning == 0.0 {
        return Err(Error::invalid("detuning", "must be nonzero"));
    }
    let pull = g_t * g_t / detuning;
    let center = match state {
        QubitState::Excited => r.frequency + pull,
        QubitState::Ground => r.frequency - pull,
    };
    let width = r.kappa_total();
    let peak = r.kappa_ext / width;
    let hw2 = (width / 2.0).powi(2);
    let values = probe
        .iter()
        .map(|w| peak * hw2 / ((w - center).powi(2) + hw2))
        .collect();
    Ok(TransmissionCurve {
        values,
        center,
        width,
        dispersive_ratio: (g_t / detuning).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub center: f64,
    /// Full width at half maximum.
    pub width: f64,
    pub peak: f64,
}

/// Fits `T(ω) = P (w/2)² / ((ω − ω_c)² + (w/2)²)` through the linear model
/// `1/T = Aω² + Bω + C`, solved by least squares.
pub fn fit_lorentzian(freqs: &[f64], values: &[f64]) -> Result<LorentzianFit> {
    if freqs.len() != values.len() || freqs.len() < 3 {
        return Err(Error::invalid(
            "fit",
            "need at least three matching samples",
        ));
    }
    let mean = freqs.iter().sum::<f64>() / freqs.len() as f64;
    let scale = freqs
        .iter()
        .map(|f| (f - mean).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for (&f, &v) in freqs.iter().zip(values) {
        if !(v > 0.0) {
            return Err(Error::invalid(
                "fit",
                "transmission samples must be positive",
            ));
        }
        let x = (f - mean) / scale;
        let row = nalgebra::Vector3::new(x * x, x, 1.0);
        // Weight by T² so that the tails do not dominate the reciprocal fit.
        let w = v * v;
        ata += row * row.transpose() * w;
        atb += row * (w / v);
    }
    let sol = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::invalid("fit", "singular normal equations"))?;
    let (a, b, c) = (sol[0], sol[1], sol[2]);
    if !(a > 0.0) {
        return Err(Error::invalid("fit", "data is not peaked"));
    }
    let x0 = -b / (2.0 * a);
    let min_recip = c - b * b / (4.0 * a);
    if !(min_recip > 0.0) {
        return Err(Error::invalid("fit", "non-positive peak"));
    }
    let half_width = (min_recip / a).sqrt();
    Ok(LorentzianFit {
        center: mean + x0 * scale,
        width: 2.0 * half_width * scale,
        peak: 1.0 / min_recip,
    })
}

/// Two-dimensional result grid, `values[ix * |y| + iy]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_label: String,
    pub x_values: Vec<f64>,
    pub y_label: String,
    pub y_values: Vec<f64>,
    pub value_label: String,
    pub values: Vec<f64>,
    pub metadata: serde_json::Value,
}

impl SweepGrid {
    pub fn new(
        x_label: impl Into<String>,
        x_values: Vec<f64>,
        y_label: impl Into<String>,
        y_values: Vec<f64>,
        value_label: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != x_values.len() * y_values.len() {
            return Err(Error::DimensionMismatch {
                expected: x_values.len() * y_values.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            x_label: x_label.into(),
            x_values,
            y_label: y_label.into(),
            y_values,
            value_label: value_label.into(),
            values,
            metadata: serde_json::Value::Null,
        })
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.y_values.len() + iy]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `x_label,y_label,value_label`, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.values.len());
        let _ = writeln!(
            out,
            "{},{},{}",
            self.x_label, self.y_label, self.value_label
        );
        for (ix, x) in self.x_values.iter().enumerate() {
            for (iy, y) in self.y_values.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    fmt_f64(*x),
                    fmt_f64(*y),
                    fmt_f64(self.get(ix, iy))
                );
            }
        }
        out
    }

    /// JSON document with the grid and its metadata; numbers use the same
    /// 17-significant-digit formatting as the CSV.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            x_label: &'a str,
            x_values: Vec<Box<RawValue>>,
            y_label: &'a str,
            y_values: Vec<Box<RawValue>>,
            value_label: &'a str,
            values: Vec<Box<RawValue>>,
            metadata: &'a serde_json::Value,
        }
        let raw = |v: &[f64]| v.iter().map(|&x| json_number(x)).collect::<Vec<_>>();
        let doc = Doc {
            x_label: &self.x_label,
            x_values: raw(&self.x_values),
            y_label: &self.y_label,
            y_values: raw(&self.y_values),
            value_label: &self.value_label,
            values: raw(&self.values),
            metadata: &self.metadata,
        };
        serde_json::to_string_pretty(&doc).expect("grid serializes")
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_number(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".to_owned()
    };
    RawValue::from_string(text).expect("valid JSON number")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    Transversal,
    Longitudinal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitPoint {
    Degeneracy,
    Detuned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Allowed,
    Forbidden,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRuleRow {
    pub process: Process,
    pub drive: DriveKind,
    pub drive_parity: ParityClass,
    pub qubit_point: QubitPoint,
    pub verdict: Verdict,
    /// Transition amplitude at θ = π/2 in units of the drive amplitude.
    pub relative_amplitude: f64,
    /// Whether the amplitude agrees with the parity verdict.
    pub confirmed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRuleTable {
    pub rows: Vec<SelectionRuleRow>,
}

impl SelectionRuleTable {
    pub fn find(&self, process: Process, drive: DriveKind) -> Option<&SelectionRuleRow> {
        self.rows
            .iter()
            .find(|r| r.process == process && r.drive == drive)
    }

    pub fn all_confirmed(&self) -> bool {
        self.rows.iter().all(|r| r.confirmed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:<13} {:<7} {:<11} {:<10} {:>12}  confirmed",
            "process", "drive", "parity", "point", "verdict", "|A|/Omega"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<16} {:<13} {:<7} {:<11} {:<10} {:>12.3e}  {}",
                r.process.label().replace('_', " "),
                label(&r.drive),
                label(&r.drive_parity),
                label(&r.qubit_point),
                label(&r.verdict),
                r.relative_amplitude,
                r.confirmed
            );
        }
        out
    }
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Parameters used to confirm selection-rule verdicts with RWA amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleCheckParams {
    pub gap: f64,
    pub resonator_frequency: f64,
    pub g_t: f64,
    pub drive_amplitude: f64,
}

impl Default for RuleCheckParams {
    fn default() -> Self {
        Self {
            gap: TAU * 8.2e9,
            resonator_frequency: TAU * 3.88e9,
            g_t: TAU * 40e6,
            drive_amplitude: TAU * 5e6,
        }
    }
}

/// Enumerates every process under both pure drives at the degeneracy point.
///
/// The verdict follows from the composite parities: the transition
/// `|g,n⟩ → |e,n+Δn⟩` with `k` drive photons is allowed iff
/// `P_f · P_op^k · P_i = +1`. Each verdict is then checked against the
/// corresponding RWA amplitude.
pub fn selection_rule_table(n_max: usize) -> Result<SelectionRuleTable> {
    selection_rule_table_with(n_max, &RuleCheckParams::default())
}

pub fn selection_rule_table_with(n_max: usize, p: &RuleCheckParams) -> Result<SelectionRuleTable> {
    if n_max < 2 {
        return Err(Error::invalid("n_max", "selection rules need n_max >= 2"));
    }
    let parity = parity_ops(n_max)?.composite;
    let space = HilbertSpace::qubit_resonator(n_max);
    let state_parity = |q: usize, n: usize| -> f64 {
        let k = space.index(q, n);
        parity.matrix()[(k, k)].re
    };
    let qubit = QubitParams::new(p.gap, 0.0)?;
    let coupling = CouplingParams::new(p.g_t, 0.0)?;
    let omega_q = p.gap;
    let mut rows = Vec::new();
    for process in Process::ALL {
        for drive in [DriveKind::Transversal, DriveKind::Longitudinal] {
            let op = match drive {
                DriveKind::Transversal => pauli(PauliKind::X),
                DriveKind::Longitudinal => pauli(PauliKind::Z),
            };
            let drive_parity =
                parity_classify_matrix(&on_qubit(op.matrix(), n_max), parity.matrix())?;
            let n_i = 1usize;
            let n_f = (n_i as i32 + process.photon_change()) as usize;
            let total = drive_parity.sign().map(|s| {
                state_parity(0, n_f)
                    * (s as f64).powi(process.photons() as i32)
                    * state_parity(1, n_i)
            });
            let verdict = match total {
                Some(t) if t < 0.0 => Verdict::Forbidden,
                _ => Verdict::Allowed,
            };
            let (l, t) = match drive {
                DriveKind::Transversal => (0.0, p.drive_amplitude),
                DriveKind::Longitudinal => (p.drive_amplitude, 0.0),
            };
            let amp = match process {
                Process::OnePhoton => one_photon_amplitude(l, t, FRAC_PI_2, omega_q)?.value,
                Process::TwoPhoton => two_photon_amplitude(l, t, FRAC_PI_2, omega_q / 2.0)?.value,
                Process::RedSideband | Process::BlueSideband => {
                    let s =
                        sideband_amplitudes(l, t, FRAC_PI_2, p.g_t, p.gap, p.resonator_frequency)?;
                    if process == Process::RedSideband {
                        s.red.value
                    } else {
                        s.blue.value
                    }
                }
                Process::BlueTwoPhoton => {
                    blue_two_photon_amplitude(
                        l,
                        t,
                        &qubit,
                        p.resonator_frequency,
                        &coupling,
                        n_max,
                    )?
                    .value
                }
            };
            let relative = amp.abs() / p.drive_amplitude;
            let forbidden_by_amplitude = relative < FORBIDDEN_RELATIVE;
            rows.push(SelectionRuleRow {
                process,
                drive,
                drive_parity,
                qubit_point: QubitPoint::Degeneracy,
                verdict,
                relative_amplitude: relative,
                confirmed: forbidden_by_amplitude == (verdict == Verdict::Forbidden),
            });
        }
    }
    Ok(SelectionRuleTable { rows })
}

/// Inputs shared by spectrum maps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub gap: f64,
    pub resonator_frequency: f64,
    pub g_t: f64,
    pub longitudinal: f64,
    pub transversal: f64,
    pub gamma2: f64,
    pub gamma_phi: f64,
    pub linewidth_prefactor: f64,
    /// Fock cutoff for the dressed two-photon sideband amplitude.
    pub n_max: usize,
}

/// Per-process drive amplitude multipliers for overlays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessMultipliers {
    pub one_photon: f64,
    pub two_photon: f64,
    pub sideband: f64,
}

impl Default for ProcessMultipliers {
    fn default() -> Self {
        Self {
            one_photon: 1.0,
            two_photon: 10.0,
            sideband: 10.0,
        }
    }
}

impl ProcessMultipliers {
    pub fn for_process(&self, p: Process) -> f64 {
        match p {
            Process::OnePhoton => self.one_photon,
            Process::TwoPhoton => self.two_photon,
            _ => self.sideband,
        }
    }
}

/// Resonance frequency of `process` at qubit frequency `omega_q`.
pub fn process_frequency(process: Process, omega_q: f64, omega_r: f64) -> f64 {
    match process {
        Process::OnePhoton => omega_q,
        Process::TwoPhoton => omega_q / 2.0,
        Process::RedSideband => omega_q - omega_r,
        Process::BlueSideband => omega_q + omega_r,
        Process::BlueTwoPhoton => (omega_q + omega_r) / 2.0,
    }
}

/// `γ_q(θ) = prefactor·(γ2 + γ_φ|θ − π/2|)`.
pub fn linewidth(p: &SpectrumParams, theta: f64) -> f64 {
    p.linewidth_prefactor * (p.gamma2 + p.gamma_phi * (theta - FRAC_PI_2).abs())
}

/// Transition amplitude of `process` at Bloch angle `theta` with amplitudes
/// scaled by `scale`.
pub fn process_amplitude(
    process: Process,
    p: &SpectrumParams,
    theta: f64,
    scale: f64,
) -> Result<f64> {
    let (l, t) = (p.longitudinal * scale, p.transversal * scale);
    let omega_q = p.gap / theta.sin();
    let omega = process_frequency(process, omega_q, p.resonator_frequency);
    Ok(match process {
        Process::OnePhoton => one_photon_amplitude(l, t, theta, omega)?.value,
        Process::TwoPhoton => two_photon_amplitude(l, t, theta, omega)?.value,
        Process::RedSideband => {
            sideband_amplitudes(l, t, theta, p.g_t, p.gap, p.resonator_frequency)?
                .red
                .value
        }
        Process::BlueSideband => {
            sideband_amplitudes(l, t, theta, p.g_t, p.gap, p.resonator_frequency)?
                .blue
                .value
        }
        Process::BlueTwoPhoton => {
            let q = QubitParams::at_angle(p.gap, theta)?;
            let c = CouplingParams::new(p.g_t, 0.0)?;
            blue_two_photon_amplitude(l, t, &q, p.resonator_frequency, &c, p.n_max)?.value
        }
    })
}

/// Unnormalized map intensity `A²(θ)·L(ω; ω_c(θ), γ_q(θ))` for each
/// `(θ, ω)` cell, computed in parallel and gathered in grid order.
fn raw_map(
    processes: &[(Process, f64)],
    p: &SpectrumParams,
    thetas: &[f64],
    omegas: &[f64],
) -> Result<Vec<f64>> {
    let columns: Vec<Result<Vec<f64>>> = thetas
        .par_iter()
        .map(|&theta| {
            let omega_q = p.gap / theta.sin();
            let gamma = linewidth(p, theta);
            let mut col = vec![0.0; omegas.len()];
            for &(process, scale) in processes {
                let amp = process_amplitude(process, p, theta, scale)?;
                let center = process_frequency(process, omega_q, p.resonator_frequency);
                for (v, &w) in col.iter_mut().zip(omegas) {
                    *v += amp * amp * gamma * gamma / ((w - center).powi(2) + gamma * gamma);
                }
            }
            Ok(col)
        })
        .collect();
    let mut out = Vec::with_capacity(thetas.len() * omegas.len());
    for c in columns {
        out.extend(c?);
    }
    Ok(out)
}

fn check_axis(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(name, "axis must not be empty"));
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::invalid(name, "axis must be strictly monotone"));
    }
    Ok(())
}

fn normalized(mut values: Vec<f64>) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for v in &mut values {
            *v /= max;
        }
    }
    values
}

/// Normalized single-process spectrum map over `θ` (rad) × `ω` (rad/s).
/// Axes are reported as `θ/π` and `ω/2π`.
pub fn spectrum_map(
    process: Process,
    p: &SpectrumParams,
    thetas: &[f64],
    omegas: &[f64],
) -> Result<SweepGrid> {
    overlay_map(&[(process, 1.0)], p, thetas, omegas)
}

/// Sum of several process maps with per-process amplitude scales,
/// normalized jointly.
pub fn overlay_map(
    processes: &[(Process, f64)],
    p: &SpectrumParams,
    thetas: &[f64],
    omegas: &[f64],
) -> Result<SweepGrid> {
    check_axis("theta", thetas)?;
    check_axis("frequency", omegas)?;
    if thetas.iter().any(|&t| !(t > 0.0 && t < PI)) {
        return Err(Error::invalid("theta", "angles must lie in (0, pi)"));
    }
    let values = normalized(raw_map(processes, p, thetas, omegas)?);
    SweepGrid::new(
        "theta_over_pi",
        thetas.iter().map(|t| t / PI).collect(),
        "frequency_hz",
        omegas.iter().map(|w| w / TAU).collect(),
        "intensity",
        values,
    )
}

/// Model simulated cell by cell for oracle maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleModel {
    /// Lab-frame driven qubit.
    Qubit,
    /// Qubit coupled to the resonator, simulated in the resonator frame.
    QubitResonator,
}

/// Settings for oracle spectrum maps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleContext {
    pub model: OracleModel,
    pub resonator: ResonatorParams,
    pub coupling: CouplingParams,
    pub decoherence: DecoherenceParams,
    /// Drive amplitude scale applied to the map amplitudes.
    pub drive_scale: f64,
    pub readout_photons: f64,
    pub t_final: f64,
    /// Fixed step; `None` uses the stability bound of each cell.
    pub dt: Option<f64>,
    pub steady_window: f64,
}

/// Steady-state `p_e` of the driven model at one `(θ, ω)` cell.
pub fn oracle_cell(p: &SpectrumParams, ctx: &OracleContext, theta: f64, omega: f64) -> Result<f64> {
    let (l, t) = (
        p.longitudinal * ctx.drive_scale,
        p.transversal * ctx.drive_scale,
    );
    let config = |bound: f64| -> Result<PropagationConfig> {
        Ok(
            PropagationConfig::new(ctx.dt.unwrap_or(bound), ctx.t_final)?
                .with_window(ctx.steady_window),
        )
    };
    match ctx.model {
        OracleModel::Qubit => {
            let h = qubit_drive_hamiltonian(p.gap / theta.sin(), l, t, theta, omega)?;
            let rho0 = DensityMatrix::thermal_qubit(
                HilbertSpace::qubit(),
                ctx.decoherence.thermal_population,
            )?;
            Ok(
                steady_state_pe(&h, &ctx.decoherence, &rho0, &config(max_step(&h))?)?
                    .excited_population,
            )
        }
        OracleModel::QubitResonator => {
            let run = SidebandRun {
                qubit: QubitParams::at_angle(p.gap, theta)?,
                resonator: ctx.resonator,
                coupling: ctx.coupling,
                decoherence: ctx.decoherence,
                longitudinal: l,
                transversal: t,
                sideband: Sideband::Blue,
                readout_photons: ctx.readout_photons,
                readout_drive: ctx.readout_photons > 0.0,
                drive_frequency: Some(omega),
                t_final: ctx.t_final,
                record_stride: 1,
            };
            let (h, _) = sideband_hamiltonian(&run)?;
            let dec = ctx
                .decoherence
                .with_resonator_decay(ctx.resonator.kappa_total())?;
            let rho0 = DensityMatrix::thermal_with_coherent(
                ctx.resonator.n_max,
                ctx.decoherence.thermal_population,
                ctx.readout_photons,
            )?;
            let cfg = config(max_step(&h))?.with_fock_guard(Some(1e-3));
            Ok(steady_state_pe(&h, &dec, &rho0, &cfg)?.excited_population)
        }
    }
}

/// Oracle counterpart of [`overlay_map`]: raw steady-state `p_e` per cell.
pub fn oracle_map(
    p: &SpectrumParams,
    ctx: &OracleContext,
    thetas: &[f64],
    omegas: &[f64],
) -> Result<SweepGrid> {
    check_axis("theta", thetas)?;
    check_axis("frequency", omegas)?;
    if thetas.iter().any(|&t| !(t > 0.0 && t < PI)) {
        return Err(Error::invalid("theta", "angles must lie in (0, pi)"));
    }
    let cells: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&th| omegas.iter().map(move |&w| (th, w)))
        .collect();
    let values: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(th, w)| oracle_cell(p, ctx, th, w))
        .collect();
    SweepGrid::new(
        "theta_over_pi",
        thetas.iter().map(|t| t / PI).collect(),
        "frequency_hz",
        omegas.iter().map(|w| w / TAU).collect(),
        "p_e",
        values.into_iter().collect::<Result<Vec<_>>>()?,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Oracle,
}

/// Resonant phase sweep at the degeneracy point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepParams {
    pub gap: f64,
    pub drive: DriveSpec,
    pub decoherence: DecoherenceParams,
}

/// Excited population at one antenna phase.
pub fn phase_point(
    p: &PhaseSweepParams,
    phase: f64,
    engine: Engine,
    cfg: Option<&PropagationConfig>,
) -> Result<f64> {
    let omega_q = p.gap;
    let mut drive = p.drive;
    drive.phase = phase.rem_euclid(TAU);
    let amps = drive_amplitudes(&drive, omega_q);
    let stray = amps.stray_probability;
    let (l, t) = (amps.longitudinal, amps.coherent_transversal());
    match engine {
        Engine::Analytic => {
            let rabi = 2.0
                * one_photon_amplitude(l, t, FRAC_PI_2, drive.frequency)?
                    .value
                    .abs();
            let coh = saturation_pe(
                rabi,
                drive.frequency - omega_q,
                p.decoherence.gamma1,
                p.decoherence.gamma2,
            )?;
            Ok(with_thermal_floor(coh, stray))
        }
        Engine::Oracle => {
            let cfg = cfg.ok_or_else(|| {
                Error::invalid("propagation", "oracle engine needs a propagation config")
            })?;
            let h = qubit_drive_hamiltonian(omega_q, l, t, FRAC_PI_2, drive.frequency)?;
            let dec = p.decoherence.with_thermal_population(stray)?;
            let rho0 = DensityMatrix::thermal_qubit(HilbertSpace::qubit(), stray)?;
            Ok(steady_state_pe(&h, &dec, &rho0, cfg)?.excited_population)
        }
    }
}

/// `p_e(φ)` at resonance; `y` holds the single drive frequency in Hz.
pub fn phase_sweep(
    p: &PhaseSweepParams,
    phases: &[f64],
    engine: Engine,
    cfg: Option<&PropagationConfig>,
) -> Result<SweepGrid> {
    check_axis("phase", phases)?;
    let values: Vec<Result<f64>> = phases
        .par_iter()
        .map(|&phi| phase_point(p, phi, engine, cfg))
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    SweepGrid::new(
        "phi_rad",
        phases.to_vec(),
        "frequency_hz",
        vec![p.drive.frequency / TAU],
        "p_e",
        values,
    )
}

/// Least-squares amplitude `c` of `c·sin²(φ/2)` and the largest residual
/// relative to the maximum sample.
pub fn fit_sin2_half(phases: &[f64], values: &[f64]) -> (f64, f64) {
    let basis: Vec<f64> = phases.iter().map(|p| (p / 2.0).sin().powi(2)).collect();
    let num: f64 = basis.iter().zip(values).map(|(b, v)| b * v).sum();
    let den: f64 = basis.iter().map(|b| b * b).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let max = values.iter().copied().fold(0.0, f64::max);
    let resid = basis
        .iter()
        .zip(values)
        .map(|(b, v)| (v - c * b).abs())
        .fold(0.0, f64::max);
    (c, if max > 0.0 { resid / max } else { resid })
}

/// Evenly spaced axis including both endpoints.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

//! Physical parameters, the two-antenna drive model, loop multipole moments
//! and the qubit/resonator Hamiltonian builders.
//!
//! Every frequency is an angular frequency in rad/s and every Hamiltonian is
//! divided by ħ, so matrix entries carry units of rad/s.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    boson_ops, on_qubit, pauli, ComplexMatrix, HilbertSpace, LabeledOperator, PauliKind, C64,
};

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant in J·s.
pub const HBAR: f64 = PLANCK / TAU;
/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Two-level flux qubit: `H'_q = (Δσ_x + εσ_z)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub gap: f64,
    pub bias: f64,
}

impl QubitParams {
    pub fn new(gap: f64, bias: f64) -> Result<Self> {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::invalid("gap", "must be positive and finite"));
        }
        if !bias.is_finite() {
            return Err(Error::invalid("bias", "must be finite"));
        }
        Ok(Self { gap, bias })
    }

    /// Qubit with the bias chosen so that the Bloch angle equals `theta`.
    pub fn at_angle(gap: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::invalid("theta", "must lie in (0, pi)"));
        }
        Self::new(gap, gap * theta.cos() / theta.sin())
    }
}

/// `θ = atan2(Δ, ε) ∈ (0, π)`.
pub fn bloch_angle(q: &QubitParams) -> f64 {
    q.gap.atan2(q.bias)
}

/// `ω_q = √(Δ² + ε²)`.
pub fn qubit_frequency(q: &QubitParams) -> f64 {
    q.gap.hypot(q.bias)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    pub frequency: f64,
    pub kappa_ext: f64,
    pub kappa_int: f64,
    pub n_max: usize,
}

impl ResonatorParams {
    pub fn new(frequency: f64, kappa_ext: f64, kappa_int: f64, n_max: usize) -> Result<Self> {
        if !(frequency > 0.0) {
            return Err(Error::invalid("resonator.frequency", "must be positive"));
        }
        if !(kappa_ext > 0.0) || !(kappa_int > 0.0) {
            return Err(Error::invalid(
                "resonator.kappa",
                "loss rates must be positive",
            ));
        }
        if n_max == 0 {
            return Err(Error::invalid("n_max", "must be at least 1"));
        }
        Ok(Self {
            frequency,
            kappa_ext,
            kappa_int,
            n_max,
        })
    }

    pub fn kappa_total(&self) -> f64 {
        self.kappa_ext + self.kappa_int
    }
}

/// Qubit-resonator couplings `g_t (a + a†)σ_z + g_ℓ (a + a†)σ_x` in the bare basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub transverse: f64,
    pub longitudinal: f64,
}

impl CouplingParams {
    pub fn new(transverse: f64, longitudinal: f64) -> Result<Self> {
        if !(transverse >= 0.0) || !(longitudinal >= 0.0) {
            return Err(Error::invalid(
                "coupling",
                "g_t and g_l must be non-negative",
            ));
        }
        Ok(Self {
            transverse,
            longitudinal,
        })
    }
}

/// Two-antenna microwave drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub frequency: f64,
    /// Relative antenna phase in `[0, 2π)`.
    pub phase: f64,
    pub max_amplitude: f64,
    /// Uncorrected amplitude mismatch; attenuates the transversal quadrature.
    pub imbalance_db: f64,
    pub effective_temperature: f64,
    /// Residual leakage of each quadrature into the other, in dB below
    /// `max_amplitude`. `None` disables it.
    pub residual_leakage_db: Option<f64>,
}

impl DriveSpec {
    pub fn new(frequency: f64, phase: f64, max_amplitude: f64) -> Result<Self> {
        if !(max_amplitude >= 0.0) {
            return Err(Error::invalid("max_amplitude", "must be non-negative"));
        }
        if !phase.is_finite() || !frequency.is_finite() {
            return Err(Error::invalid(
                "drive",
                "frequency and phase must be finite",
            ));
        }
        Ok(Self {
            frequency,
            phase: phase.rem_euclid(TAU),
            max_amplitude,
            imbalance_db: 0.0,
            effective_temperature: 0.0,
            residual_leakage_db: None,
        })
    }

    pub fn with_temperature(mut self, kelvin: f64) -> Self {
        self.effective_temperature = kelvin;
        self
    }

    pub fn with_imbalance_db(mut self, db: f64) -> Self {
        self.imbalance_db = db;
        self
    }

    pub fn with_residual_leakage_db(mut self, db: Option<f64>) -> Self {
        self.residual_leakage_db = db;
        self
    }
}

/// Drive strengths resolved from a [`DriveSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveAmplitudes {
    pub longitudinal: f64,
    /// Transversal strength including the thermal floor `p_str·ω_q`.
    pub transversal: f64,
    /// Thermal stray-excitation probability behind the floor.
    pub stray_probability: f64,
    pub qubit_frequency: f64,
}

impl DriveAmplitudes {
    pub fn thermal_floor(&self) -> f64 {
        self.stray_probability * self.qubit_frequency
    }

    /// Transversal strength without the thermal floor.
    pub fn coherent_transversal(&self) -> f64 {
        self.transversal - self.thermal_floor()
    }
}

pub fn drive_amplitudes(d: &DriveSpec, omega_q: f64) -> DriveAmplitudes {
    let iota_t = 10f64.powf(-d.imbalance_db.abs() / 20.0);
    let (c, s) = ((d.phase / 2.0).cos().abs(), (d.phase / 2.0).sin().abs());
    let mut longitudinal = d.max_amplitude * c;
    let mut transversal = d.max_amplitude * s * iota_t;
    if let Some(db) = d.residual_leakage_db {
        let leak = 10f64.powf(-db.abs() / 20.0) * d.max_amplitude;
        longitudinal += leak * s;
        transversal += leak * c;
    }
    let stray = if d.effective_temperature > 0.0 {
        crate::analysis::stray_excitation(omega_q, d.effective_temperature).unwrap_or(0.0)
    } else {
        0.0
    };
    DriveAmplitudes {
        longitudinal,
        transversal: transversal + stray * omega_q,
        stray_probability: stray,
        qubit_frequency: omega_q,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopKind {
    SingleLoop,
    Gradiometer { separation: f64 },
}

/// Current loop; `separation` is the gradiometer half-offset `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopGeometry {
    pub area: f64,
    pub current: f64,
    pub kind: LoopKind,
}

impl LoopGeometry {
    pub fn single_loop(area: f64, current: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::invalid("area", "must be positive"));
        }
        Ok(Self {
            area,
            current,
            kind: LoopKind::SingleLoop,
        })
    }

    pub fn gradiometer(area: f64, current: f64, separation: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::invalid("area", "must be positive"));
        }
        if !(separation > 0.0) {
            return Err(Error::invalid(
                "separation",
                "must be positive for a gradiometer",
            ));
        }
        Ok(Self {
            area,
            current,
            kind: LoopKind::Gradiometer { separation },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultipoleMoments {
    /// Magnetic dipole moment in A·m².
    pub dipole: f64,
    /// Quadrupole component `Q_xz` in A·m³.
    pub quadrupole: f64,
}

pub fn multipole_moments(g: &LoopGeometry) -> MultipoleMoments {
    match g.kind {
        LoopKind::SingleLoop => MultipoleMoments {
            dipole: g.current.abs() * g.area,
            quadrupole: 0.0,
        },
        LoopKind::Gradiometer { separation } => MultipoleMoments {
            dipole: 0.0,
            quadrupole: 4.0 * g.current * g.area * separation / 3.0,
        },
    }
}

/// Coupling energies `(ħΩ_ℓ, ħΩ_t)` in joules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCoupling {
    pub longitudinal_energy: f64,
    pub transversal_energy: f64,
}

impl FieldCoupling {
    pub fn longitudinal_rate(&self) -> f64 {
        self.longitudinal_energy / HBAR
    }

    pub fn transversal_rate(&self) -> f64 {
        self.transversal_energy / HBAR
    }
}

/// `ħΩ_ℓ = p·B_sym` from the SQUID and `ħΩ_t = Q·∂B/∂x` from the gradiometer.
pub fn field_coupling(
    b_sym: f64,
    b_grad: f64,
    squid: &LoopGeometry,
    gradiometer: &LoopGeometry,
) -> Result<FieldCoupling> {
    if squid.kind != LoopKind::SingleLoop {
        return Err(Error::invalid("squid", "expected a single-loop geometry"));
    }
    if !matches!(gradiometer.kind, LoopKind::Gradiometer { .. }) {
        return Err(Error::invalid(
            "gradiometer",
            "expected a gradiometer geometry",
        ));
    }
    Ok(FieldCoupling {
        longitudinal_energy: multipole_moments(squid).dipole * b_sym,
        transversal_energy: multipole_moments(gradiometer).quadrupole * b_grad,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Bare,
    Eigen,
}

/// Coefficients `(a, b)` of the eigenbasis drive `cos(ωt)[a σ_x + b σ_z]`.
///
/// The tilt enters through `|cos θ|`: the transversal antenna couples to the
/// magnitude of the bias, so the decomposition is mirror-symmetric about
/// `θ = π/2` and transparency occurs at both `θ*` and `π − θ*`.
pub fn drive_coefficients(longitudinal: f64, transversal: f64, theta: f64) -> (f64, f64) {
    let (s, c) = (theta.sin(), theta.cos().abs());
    (
        (longitudinal * c - transversal * s) / 2.0,
        (transversal * c + longitudinal * s) / 2.0,
    )
}

/// 2×2 eigenbasis operator multiplying `cos(ωt)` in the drive Hamiltonian.
pub fn drive_operator(longitudinal: f64, transversal: f64, theta: f64) -> ComplexMatrix {
    let (a, b) = drive_coefficients(longitudinal, transversal, theta);
    &(pauli(PauliKind::X).matrix() * a) + &(pauli(PauliKind::Z).matrix() * b)
}

/// Qubit drive Hamiltonian at time `t` in the eigenbasis.
///
/// Uses the coherent amplitudes only; the thermal floor is carried by the
/// dissipator as an incoherent excitation channel.
pub fn build_h_drive(q: &QubitParams, d: &DriveSpec, t: f64) -> LabeledOperator {
    let amps = drive_amplitudes(d, qubit_frequency(q));
    let m = drive_operator(
        amps.longitudinal,
        amps.coherent_transversal(),
        bloch_angle(q),
    );
    let m = &m * (d.frequency * t).cos();
    LabeledOperator::new(HilbertSpace::qubit(), m, "h_drive").expect("2x2 drive")
}

/// Static qubit-resonator Hamiltonian in the bare or qubit eigenbasis.
pub fn build_h_system(
    q: &QubitParams,
    r: &ResonatorParams,
    c: &CouplingParams,
    basis: Basis,
) -> Result<LabeledOperator> {
    let n_max = r.n_max;
    let ops = boson_ops(n_max)?;
    let x = ops.annihilate.matrix() + ops.create.matrix();
    let sx = pauli(PauliKind::X).into_matrix();
    let sz = pauli(PauliKind::Z).into_matrix();
    let (g_t, g_l) = (c.transverse, c.longitudinal);

    let (qubit, coupling_z, coupling_x) = match basis {
        Basis::Bare => (&(&sx * (q.gap / 2.0)) + &(&sz * (q.bias / 2.0)), g_t, g_l),
        Basis::Eigen => {
            let theta = bloch_angle(q);
            let (s, co) = (theta.sin(), theta.cos());
            (
                &sz * (qubit_frequency(q) / 2.0),
                g_t * co + g_l * s,
                g_l * co - g_t * s,
            )
        }
    };
    let mut h = on_qubit(&qubit, n_max);
    h = &h + &ComplexMatrix::identity(2).kron(&(ops.number.matrix() * r.frequency));
    h = &h + &sz.kron(&x).scale(C64::new(coupling_z, 0.0));
    h = &h + &sx.kron(&x).scale(C64::new(coupling_x, 0.0));
    LabeledOperator::new(
        HilbertSpace::qubit_resonator(n_max),
        h,
        format!("h_system_{basis:?}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn bloch_angle_branches() {
        let two_pi = TAU;
        assert_eq!(
            bloch_angle(&QubitParams::new(two_pi * 8.2e9, 0.0).unwrap()),
            FRAC_PI_2
        );
        assert_relative_eq!(bloch_angle(&QubitParams::new(1.0, 1.0).unwrap()), PI / 4.0);
        assert_relative_eq!(
            bloch_angle(&QubitParams::new(1.0, -1.0).unwrap()),
            3.0 * PI / 4.0
        );
        assert!(QubitParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn qubit_frequency_examples() {
        assert_eq!(qubit_frequency(&QubitParams::new(3.0, 4.0).unwrap()), 5.0);
        let q = QubitParams::new(TAU * 8.2e9, TAU * 2e9).unwrap();
        // √(8.2² + 2²) GHz
        assert_relative_eq!(
            qubit_frequency(&q) / TAU,
            8.440_379_138_403_676e9,
            max_relative = 1e-14
        );
    }

    #[test]
    fn drive_split_examples() {
        let d = DriveSpec::new(1.0, PI, 2.0).unwrap();
        let a = drive_amplitudes(&d, 10.0);
        assert!(a.longitudinal.abs() < 1e-15);
        assert_eq!(a.transversal, 2.0);
        let d = DriveSpec::new(1.0, 0.0, 2.0).unwrap();
        let a = drive_amplitudes(&d, 10.0);
        assert_eq!((a.longitudinal, a.transversal), (2.0, 0.0));
    }

    #[test]
    fn thermal_floor_at_operating_temperature() {
        let wq = TAU * 8.2e9;
        let d = DriveSpec::new(wq, 0.0, 0.0)
            .unwrap()
            .with_temperature(0.125);
        let a = drive_amplitudes(&d, wq);
        // exp(-h·8.2 GHz / (k_B·125 mK)) evaluated independently.
        let x: f64 = 6.626_070_15e-34 * 8.2e9 / (1.380_649e-23 * 0.125);
        assert_relative_eq!(a.transversal / wq, (-x).exp(), max_relative = 1e-12);
        assert_relative_eq!(a.transversal / wq, 0.0429, epsilon = 5e-5);
        assert_eq!(a.coherent_transversal(), 0.0);
    }

    #[test]
    fn imbalance_attenuates_transversal() {
        let d = DriveSpec::new(1.0, PI, 1.0)
            .unwrap()
            .with_imbalance_db(20.0);
        assert_relative_eq!(
            drive_amplitudes(&d, 1.0).transversal,
            0.1,
            max_relative = 1e-12
        );
    }

    #[test]
    fn residual_leakage_removes_extinction() {
        let d = DriveSpec::new(1.0, PI, 1.0)
            .unwrap()
            .with_residual_leakage_db(Some(30.0));
        let a = drive_amplitudes(&d, 1.0);
        assert_relative_eq!(a.longitudinal, 10f64.powf(-1.5), max_relative = 1e-9);
    }

    #[test]
    fn phase_is_wrapped() {
        let d = DriveSpec::new(1.0, -PI / 2.0, 1.0).unwrap();
        assert_relative_eq!(d.phase, 1.5 * PI);
    }

    #[test]
    fn multipole_examples() {
        let sq = LoopGeometry::single_loop(5e-6 * 12e-6, 1e-6).unwrap();
        let m = multipole_moments(&sq);
        assert_relative_eq!(m.dipole, 6e-17, max_relative = 1e-12);
        assert_eq!(m.quadrupole, 0.0);
        let gr = LoopGeometry::gradiometer(20e-6 * 20e-6, 1e-6, 20e-6).unwrap();
        let m = multipole_moments(&gr);
        assert_eq!(m.dipole, 0.0);
        // 4 · 1 µA · 400 µm² · 20 µm / 3 in SI units.
        assert_relative_eq!(m.quadrupole, 4.0 / 3.0 * 8e-21, max_relative = 1e-12);
        assert!(LoopGeometry::gradiometer(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn field_coupling_examples() {
        let sq = LoopGeometry::single_loop(60e-12, 1e-6).unwrap();
        let gr = LoopGeometry::gradiometer(400e-12, 1e-6, 20e-6).unwrap();
        let f = field_coupling(1e-6, 0.0, &sq, &gr).unwrap();
        assert_eq!(f.transversal_energy, 0.0);
        assert!(f.longitudinal_energy > 0.0);
        let f = field_coupling(0.0, 1e-3, &sq, &gr).unwrap();
        assert_eq!(f.longitudinal_energy, 0.0);
        let sq2 = LoopGeometry::single_loop(60e-12, 2e-6).unwrap();
        let f1 = field_coupling(1e-6, 0.0, &sq, &gr).unwrap();
        let f2 = field_coupling(1e-6, 0.0, &sq2, &gr).unwrap();
        assert_relative_eq!(f2.longitudinal_rate(), 2.0 * f1.longitudinal_rate());
        assert!(field_coupling(1.0, 1.0, &gr, &sq).is_err());
    }

    #[test]
    fn drive_examples_at_degeneracy() {
        let q = QubitParams::new(1.0, 0.0).unwrap();
        let d = DriveSpec::new(1.0, 0.0, 0.4).unwrap();
        let h = build_h_drive(&q, &d, 0.0);
        let want = pauli(PauliKind::Z).matrix() * 0.2;
        assert!(h.matrix().max_abs_diff(&want) < 1e-15);
        let d = DriveSpec::new(1.0, PI, 0.4).unwrap();
        let h = build_h_drive(&q, &d, 0.0);
        let want = pauli(PauliKind::X).matrix() * -0.2;
        assert!(h.matrix().max_abs_diff(&want) < 1e-15);
        let h = build_h_drive(&q, &d, FRAC_PI_2);
        assert!(h.matrix().max_abs() < 1e-15);
    }

    fn resonator(n_max: usize) -> ResonatorParams {
        ResonatorParams::new(1.0, 1e-3, 1e-4, n_max).unwrap()
    }

    #[test]
    fn eigen_coupling_at_degeneracy_is_pure_sigma_x() {
        let q = QubitParams::new(2.0, 0.0).unwrap();
        let r = resonator(3);
        let c = CouplingParams::new(0.05, 0.0).unwrap();
        let h = build_h_system(&q, &r, &c, Basis::Eigen).unwrap();
        let uncoupled = build_h_system(&q, &r, &CouplingParams::default(), Basis::Eigen).unwrap();
        let coupling = h.matrix() - uncoupled.matrix();
        let ops = boson_ops(3).unwrap();
        let x = ops.annihilate.matrix() + ops.create.matrix();
        let want = &pauli(PauliKind::X).matrix().kron(&x) * -0.05;
        assert!(coupling.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn uncoupled_spectrum_is_exact() {
        let q = QubitParams::new(1.3, 0.4).unwrap();
        let r = resonator(4);
        let h = build_h_system(&q, &r, &CouplingParams::default(), Basis::Bare).unwrap();
        let (vals, _) = h.matrix().hermitian_eigen();
        let wq = qubit_frequency(&q);
        let mut want: Vec<f64> = (0..=4)
            .flat_map(|n| [wq / 2.0 + n as f64, -wq / 2.0 + n as f64])
            .collect();
        want.sort_by(f64::total_cmp);
        for (v, w) in vals.iter().zip(&want) {
            assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_rabi_splitting_matches_jaynes_cummings() {
        let g = 0.01;
        let q = QubitParams::new(1.0, 0.0).unwrap();
        let r = resonator(4);
        let c = CouplingParams::new(g, 0.0).unwrap();
        let h = build_h_system(&q, &r, &c, Basis::Eigen).unwrap();
        let (vals, _) = h.matrix().hermitian_eigen();
        // Levels 1 and 2 form the |e,0⟩/|g,1⟩ doublet around 0.5.
        let split = vals[2] - vals[1];
        assert!((split - 2.0 * g).abs() / (2.0 * g) < 0.01, "split {split}");
    }

    proptest! {
        #[test]
        fn system_hamiltonian_is_hermitian(
            gap in 0.1f64..3.0, bias in -3.0f64..3.0, gt in 0.0f64..0.2, gl in 0.0f64..0.2,
            n_max in 1usize..6, eigen in proptest::bool::ANY,
        ) {
            let q = QubitParams::new(gap, bias).unwrap();
            let c = CouplingParams::new(gt, gl).unwrap();
            let basis = if eigen { Basis::Eigen } else { Basis::Bare };
            let h = build_h_system(&q, &resonator(n_max), &c, basis).unwrap();
            prop_assert!(h.matrix().is_hermitian(1e-12));
        }

        #[test]
        fn bare_and_eigen_bases_share_spectrum(
            gap in 0.1f64..3.0, bias in -3.0f64..3.0, gt in 0.0f64..0.2, gl in 0.0f64..0.2,
        ) {
            let q = QubitParams::new(gap, bias).unwrap();
            let c = CouplingParams::new(gt, gl).unwrap();
            let r = resonator(3);
            let (a, _) = build_h_system(&q, &r, &c, Basis::Bare).unwrap().matrix().hermitian_eigen();
            let (b, _) = build_h_system(&q, &r, &c, Basis::Eigen).unwrap().matrix().hermitian_eigen();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn bias_reflection_preserves_spectrum(
            gap in 0.1f64..3.0, bias in -3.0f64..3.0, g in 0.0f64..0.2, transverse in any::<bool>(),
        ) {
            // With a single coupling channel, σ_x ⊗ parity maps ε to −ε.
            let c = if transverse {
                CouplingParams::new(g, 0.0).unwrap()
            } else {
                CouplingParams::new(0.0, g).unwrap()
            };
            let r = resonator(3);
            let q1 = QubitParams::new(gap, bias).unwrap();
            let q2 = QubitParams::new(gap, -bias).unwrap();
            prop_assert!((bloch_angle(&q1) + bloch_angle(&q2) - PI).abs() < 1e-12);
            let (a, _) = build_h_system(&q1, &r, &c, Basis::Eigen).unwrap().matrix().hermitian_eigen();
            let (b, _) = build_h_system(&q2, &r, &c, Basis::Eigen).unwrap().matrix().hermitian_eigen();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn drive_split_conserves_total_amplitude(phase in 0.0f64..TAU, omax in 0.0f64..10.0) {
            let d = DriveSpec::new(1.0, phase, omax).unwrap().with_temperature(0.05);
            let a = drive_amplitudes(&d, TAU * 8.2e9);
            let coh = a.coherent_transversal();
            prop_assert!((a.longitudinal.powi(2) + coh.powi(2) - omax * omax).abs() < 1e-7 * (1.0 + omax * omax));
        }

        #[test]
        fn field_coupling_is_linear(b1 in -1.0f64..1.0, b2 in -1.0f64..1.0, k in -3.0f64..3.0) {
            let sq = LoopGeometry::single_loop(60e-12, 1e-6).unwrap();
            let gr = LoopGeometry::gradiometer(400e-12, 1e-6, 20e-6).unwrap();
            let f = field_coupling(k * b1, k * b2, &sq, &gr).unwrap();
            let g = field_coupling(b1, b2, &sq, &gr).unwrap();
            prop_assert!((f.longitudinal_energy - k * g.longitudinal_energy).abs() <= 1e-30);
            prop_assert!((f.transversal_energy - k * g.transversal_energy).abs() <= 1e-30);
        }
    }
}

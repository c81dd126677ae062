//! Rotating-wave transition amplitudes: Bessel-dressed one- and two-photon
//! amplitudes, sideband amplitudes, transparency angles, and a perturbative
//! dressed-state amplitude used where no closed form exists.
//!
//! All amplitudes are coefficients of `σ_x` (or `|f⟩⟨i| + h.c.`) in the
//! rotating frame, in rad/s; the Rabi frequency at resonance is `2|A|`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DressedBasis, Hamiltonian};
use crate::error::{Error, Result};
use crate::model::{
    build_h_system, drive_coefficients, drive_operator, Basis, CouplingParams, QubitParams,
    ResonatorParams,
};
use crate::operators::{on_qubit, ComplexMatrix, HilbertSpace, C64};

/// Largest Bessel argument accepted by [`bessel_j`].
pub const BESSEL_MAX_ARG: f64 = 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    OnePhoton,
    TwoPhoton,
    RedSideband,
    BlueSideband,
    BlueTwoPhoton,
}

impl Process {
    pub const ALL: [Process; 5] = [
        Process::OnePhoton,
        Process::TwoPhoton,
        Process::RedSideband,
        Process::BlueSideband,
        Process::BlueTwoPhoton,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Process::OnePhoton => "one_photon",
            Process::TwoPhoton => "two_photon",
            Process::RedSideband => "red_sideband",
            Process::BlueSideband => "blue_sideband",
            Process::BlueTwoPhoton => "blue_two_photon",
        }
    }

    /// Number of drive photons absorbed.
    pub fn photons(self) -> u32 {
        match self {
            Process::TwoPhoton | Process::BlueTwoPhoton => 2,
            _ => 1,
        }
    }

    /// Change of the resonator photon number.
    pub fn photon_change(self) -> i32 {
        match self {
            Process::OnePhoton | Process::TwoPhoton => 0,
            Process::RedSideband => -1,
            Process::BlueSideband | Process::BlueTwoPhoton => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionAmplitude {
    pub process: Process,
    pub theta: f64,
    pub value: f64,
}

/// Bessel function of the first kind `J_k(x)` for `k ≤ 3`, `|x| ≤ 12`, from
/// the ascending series.
pub fn bessel_j(k: u32, x: f64) -> Result<f64> {
    if k > 3 {
        return Err(Error::invalid("k", "only orders 0..=3 are supported"));
    }
    if !(x.abs() <= BESSEL_MAX_ARG) {
        return Err(Error::BesselDomain(x));
    }
    let half = x / 2.0;
    let mut term = (1..=k).fold(1.0, |acc, j| acc * half / j as f64);
    if term == 0.0 {
        return Ok(0.0);
    }
    let q = -half * half;
    let mut sum = term;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= q / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() && m as f64 > half.abs() {
            break;
        }
        if m > 200 {
            break;
        }
    }
    Ok(sum)
}

/// `λ = (Ω_t|cos θ| + Ω_ℓ sin θ)/ω = 2b/ω`.
pub fn lambda_param(longitudinal: f64, transversal: f64, theta: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", "drive frequency must be positive"));
    }
    let (_, b) = drive_coefficients(longitudinal, transversal, theta);
    Ok(2.0 * b / omega)
}

/// `A₁ = (a/2)[J₀(λ) + J₂(λ)]` with `a = (Ω_ℓ|cos θ| − Ω_t sin θ)/2`.
pub fn one_photon_amplitude(
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    omega: f64,
) -> Result<TransitionAmplitude> {
    let lambda = lambda_param(longitudinal, transversal, theta, omega)?;
    let (a, _) = drive_coefficients(longitudinal, transversal, theta);
    Ok(TransitionAmplitude {
        process: Process::OnePhoton,
        theta,
        value: 0.5 * a * (bessel_j(0, lambda)? + bessel_j(2, lambda)?),
    })
}

/// The `J₀ + J₂ ≈ 1` limit of [`one_photon_amplitude`].
pub fn one_photon_amplitude_approx(
    longitudinal: f64,
    transversal: f64,
    theta: f64,
) -> TransitionAmplitude {
    let (a, _) = drive_coefficients(longitudinal, transversal, theta);
    TransitionAmplitude {
        process: Process::OnePhoton,
        theta,
        value: 0.5 * a,
    }
}

/// `A₂ = −(a/2)[J₁(λ) + J₃(λ)]`, the resonant `σ_x` coefficient at `2ω ≈ ω_q`.
pub fn two_photon_amplitude(
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    omega: f64,
) -> Result<TransitionAmplitude> {
    let lambda = lambda_param(longitudinal, transversal, theta, omega)?;
    let (a, _) = drive_coefficients(longitudinal, transversal, theta);
    Ok(TransitionAmplitude {
        process: Process::TwoPhoton,
        theta,
        value: -0.5 * a * (bessel_j(1, lambda)? + bessel_j(3, lambda)?),
    })
}

/// Leading-order closed form of [`two_photon_amplitude`]:
/// `[(Ω_t² − Ω_ℓ²) sin θ |cos θ| + Ω_ℓΩ_t(sin²θ − cos²θ)] / (8ω)`.
pub fn two_photon_amplitude_closed_form(
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    omega: f64,
) -> Result<TransitionAmplitude> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", "drive frequency must be positive"));
    }
    let (s, c) = (theta.sin(), theta.cos().abs());
    let (l, t) = (longitudinal, transversal);
    Ok(TransitionAmplitude {
        process: Process::TwoPhoton,
        theta,
        value: ((t * t - l * l) * s * c + l * t * (s * s - c * c)) / (8.0 * omega),
    })
}

/// `γ± = g_t/(Δ ± ω_r)` and the dispersively shifted gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// `Δ' = Δ + g_t(γ₊ + γ₋)/2`.
    pub delta_prime: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandAmplitudes {
    pub red: TransitionAmplitude,
    pub blue: TransitionAmplitude,
    pub rates: SidebandRates,
    /// Coefficient `g_t(γ₊ + γ₋)` of `σ_z a†a`.
    pub dispersive: f64,
}

/// Red and blue sideband amplitudes
/// `−(1/2)(Ω_ℓ sin θ/2 − Ω_t |cos θ|/2)·2γ∓`.
pub fn sideband_amplitudes(
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    g_t: f64,
    gap: f64,
    omega_r: f64,
) -> Result<SidebandAmplitudes> {
    let scale = gap.abs().max(omega_r.abs());
    if (gap - omega_r).abs() <= 1e-12 * scale || (gap + omega_r).abs() <= 1e-12 * scale {
        return Err(Error::invalid(
            "gap",
            "sideband rates diverge at gap = ±omega_r",
        ));
    }
    let gamma_plus = g_t / (gap + omega_r);
    let gamma_minus = g_t / (gap - omega_r);
    let drive = longitudinal / 2.0 * theta.sin() - transversal / 2.0 * theta.cos().abs();
    let amp = |gamma: f64, process| TransitionAmplitude {
        process,
        theta,
        value: -0.5 * drive * 2.0 * gamma,
    };
    let dispersive = g_t * (gamma_plus + gamma_minus);
    Ok(SidebandAmplitudes {
        red: amp(gamma_minus, Process::RedSideband),
        blue: amp(gamma_plus, Process::BlueSideband),
        rates: SidebandRates {
            gamma_plus,
            gamma_minus,
            delta_prime: gap + dispersive / 2.0,
        },
        dispersive,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransparencyAngles {
    pub primary: f64,
    pub mirror: f64,
    /// Set when `Ω_t = 0`, where no finite solution exists.
    pub degenerate: bool,
}

/// Angles where the one-photon amplitude vanishes: `tan θ* = Ω_ℓ/Ω_t` and `π − θ*`.
pub fn transparency_angles(longitudinal: f64, transversal: f64) -> TransparencyAngles {
    if transversal == 0.0 {
        return TransparencyAngles {
            primary: FRAC_PI_2,
            mirror: FRAC_PI_2,
            degenerate: true,
        };
    }
    let primary = (longitudinal / transversal).atan();
    TransparencyAngles {
        primary,
        mirror: PI - primary,
        degenerate: false,
    }
}

/// `H_rot = U H U† + i U̇ U†` with `U = exp[(i/2) λ sin(ωt) σ_z]`.
///
/// The frame removes the `b cos(ωt) σ_z` part of the drive and dresses the
/// qubit ladder operators with `e^{±iλ sin ωt}`.
pub struct RotatingFrame<H> {
    inner: H,
    lambda: f64,
    omega: f64,
    signs: Vec<f64>,
    pattern: Vec<(usize, usize)>,
    inner_len: usize,
    diag_slots: Vec<usize>,
}

impl<H: Hamiltonian> RotatingFrame<H> {
    pub fn new(inner: H, space: &HilbertSpace, lambda: f64, omega: f64) -> Result<Self> {
        let dim = inner.dim();
        if space.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: space.dim(),
            });
        }
        let nf = space.fock_dim().unwrap_or(1);
        let signs = (0..dim).map(|k| if k < nf { 1.0 } else { -1.0 }).collect();
        let mut pattern = inner.pattern().to_vec();
        let inner_len = pattern.len();
        let diag_slots = (0..dim)
            .map(
                |k| match pattern[..inner_len].iter().position(|&p| p == (k, k)) {
                    Some(pos) => pos,
                    None => {
                        pattern.push((k, k));
                        pattern.len() - 1
                    }
                },
            )
            .collect();
        Ok(Self {
            inner,
            lambda,
            omega,
            signs,
            pattern,
            inner_len,
            diag_slots,
        })
    }

    /// Frame for a lab-frame drive `(Ω_ℓ, Ω_t)` at Bloch angle `θ`.
    pub fn for_drive(
        inner: H,
        space: &HilbertSpace,
        longitudinal: f64,
        transversal: f64,
        theta: f64,
        omega: f64,
    ) -> Result<Self> {
        let lambda = lambda_param(longitudinal, transversal, theta, omega)?;
        Self::new(inner, space, lambda, omega)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Frame unitary `U(t)` (diagonal).
    pub fn unitary(&self, t: f64) -> Vec<C64> {
        let alpha = self.lambda * (self.omega * t).sin();
        self.signs
            .iter()
            .map(|s| C64::from_polar(1.0, alpha * s / 2.0))
            .collect()
    }
}

impl<H: Hamiltonian> Hamiltonian for RotatingFrame<H> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn fastest_frequency(&self) -> f64 {
        self.inner.fastest_frequency() + (self.lambda * self.omega).abs()
    }

    fn pattern(&self) -> &[(usize, usize)] {
        &self.pattern
    }

    fn fill(&self, t: f64, values: &mut [C64]) {
        self.inner.fill(t, &mut values[..self.inner_len]);
        for v in &mut values[self.inner_len..] {
            *v = C64::new(0.0, 0.0);
        }
        let alpha = self.lambda * (self.omega * t).sin();
        for (v, &(r, c)) in values[..self.inner_len].iter_mut().zip(&self.pattern) {
            let ds = self.signs[r] - self.signs[c];
            if ds != 0.0 {
                *v *= C64::from_polar(1.0, alpha * ds / 2.0);
            }
        }
        // i U̇ U† = −(λω/2) cos(ωt) σ_z
        let shift = -(self.lambda * self.omega / 2.0) * (self.omega * t).cos();
        for (k, &slot) in self.diag_slots.iter().enumerate() {
            values[slot] += shift * self.signs[k];
        }
    }
}

/// Perturbative multiphoton amplitude between dressed eigenstates of `h0`
/// for the drive `cos(ωt)·V`:
/// one photon `V_fi/2`, two photons `Σ_m V_fm V_mi / (4 (E_i + ω − E_m))`
/// with `ω = (E_f − E_i)/2`. Returns the modulus, since eigenvector phases
/// are arbitrary.
pub fn dressed_amplitude(
    dressed: &DressedBasis,
    drive: &ComplexMatrix,
    initial_bare: usize,
    final_bare: usize,
    photons: u32,
) -> Result<f64> {
    let v = dressed.transform(drive);
    let (i, f) = (dressed.label[initial_bare], dressed.label[final_bare]);
    let (ei, ef) = (dressed.energies[i], dressed.energies[f]);
    let amp = match photons {
        1 => v[(f, i)] * 0.5,
        2 => {
            let omega = (ef - ei) / 2.0;
            let mut sum = C64::new(0.0, 0.0);
            for m in 0..dressed.energies.len() {
                let denom = ei + omega - dressed.energies[m];
                sum += v[(f, m)] * v[(m, i)] / (4.0 * denom);
            }
            sum
        }
        _ => return Err(Error::invalid("photons", "only 1 and 2 are supported")),
    };
    Ok(amp.norm())
}

/// Two-photon blue sideband `|g,0⟩ → |e,1⟩` amplitude from the dressed
/// qubit-resonator spectrum. No closed form is available for this process.
pub fn blue_two_photon_amplitude(
    longitudinal: f64,
    transversal: f64,
    qubit: &QubitParams,
    resonator_frequency: f64,
    coupling: &CouplingParams,
    n_max: usize,
) -> Result<TransitionAmplitude> {
    let r = ResonatorParams::new(resonator_frequency, 1.0, 1.0, n_max.max(2))?;
    let h0 = build_h_system(qubit, &r, coupling, Basis::Eigen)?.into_matrix();
    let theta = crate::model::bloch_angle(qubit);
    let drive = on_qubit(&drive_operator(longitudinal, transversal, theta), r.n_max);
    let dressed = DressedBasis::new(&h0);
    let space = HilbertSpace::qubit_resonator(r.n_max);
    let value = dressed_amplitude(&dressed, &drive, space.index(1, 0), space.index(0, 1), 2)?;
    Ok(TransitionAmplitude {
        process: Process::BlueTwoPhoton,
        theta,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{qubit_drive_hamiltonian, DrivenHamiltonian, Modulation};
    use crate::operators::{pauli, PauliKind};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// `J_n(x) = (1/π)∫₀^π cos(nτ − x sin τ) dτ` by the trapezoid rule, which
    /// converges geometrically for this periodic integrand.
    fn bessel_oracle(n: u32, x: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let f = |tau: f64| (n as f64 * tau - x * tau.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for k in 1..m {
            s += f(k as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn bessel_matches_integral_representation() {
        for k in 0..=3 {
            for i in 0..=48 {
                let x = -12.0 + 0.5 * i as f64;
                let got = bessel_j(k, x).unwrap();
                assert!((got - bessel_oracle(k, x)).abs() < 1e-10, "J{k}({x})");
            }
        }
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert!(bessel_j(0, 2.404825557695773).unwrap().abs() < 1e-9);
        let x = 1e-4;
        assert_relative_eq!(bessel_j(2, x).unwrap(), x * x / 8.0, max_relative = 1e-8);
        assert!(matches!(bessel_j(0, 12.5), Err(Error::BesselDomain(_))));
        assert!(bessel_j(4, 1.0).is_err());
    }

    #[test]
    fn first_bessel_zero_by_bisection() {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if bessel_oracle(0, lo) * bessel_oracle(0, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((0.5 * (lo + hi) - 2.404825557695773).abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(
            lambda_param(0.0, 0.7, FRAC_PI_2, 1.0).unwrap(),
            0.7 * FRAC_PI_2.cos()
        );
        assert!(lambda_param(0.0, 0.7, FRAC_PI_2, 1.0).unwrap().abs() < 1e-16);
        assert_relative_eq!(lambda_param(0.3, 0.0, FRAC_PI_2, 0.3).unwrap(), 1.0);
        assert_relative_eq!(
            lambda_param(0.3, 0.3, PI / 4.0, 1.0).unwrap(),
            2f64.sqrt() * 0.3,
            max_relative = 1e-15
        );
        assert!(lambda_param(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn one_photon_examples() {
        assert!(
            one_photon_amplitude(0.1, 0.0, FRAC_PI_2, 1.0)
                .unwrap()
                .value
                .abs()
                < 1e-17
        );
        let a = one_photon_amplitude(0.0, 0.1, FRAC_PI_2, 1.0)
            .unwrap()
            .value;
        assert_relative_eq!(a, -0.025, max_relative = 1e-12);
        let theta = (0.3f64 / 0.1).atan();
        assert!(
            one_photon_amplitude(0.3, 0.1, theta, 1.0)
                .unwrap()
                .value
                .abs()
                < 1e-12
        );
        assert!(
            one_photon_amplitude(0.3, 0.1, PI - theta, 1.0)
                .unwrap()
                .value
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn bessel_correction_is_second_order() {
        let (l, t, th) = (0.2, 0.05, 1.2);
        let full = one_photon_amplitude(l, t, th, 1.0).unwrap().value;
        let approx = one_photon_amplitude_approx(l, t, th).value;
        let lambda = lambda_param(l, t, th, 1.0).unwrap();
        // J0 + J2 = 1 − λ²/8 + O(λ⁴)
        assert_relative_eq!(
            full / approx,
            1.0 - lambda * lambda / 8.0,
            epsilon = lambda.powi(4)
        );
    }

    #[test]
    fn two_photon_examples() {
        assert!(
            two_photon_amplitude(0.0, 0.1, FRAC_PI_2, 1.0)
                .unwrap()
                .value
                .abs()
                < 1e-17
        );
        let om = 1e-3;
        let a = two_photon_amplitude(om, om, FRAC_PI_2, 1.0).unwrap().value;
        assert_relative_eq!(a, om * om / 8.0, max_relative = 1e-6);
        let c = two_photon_amplitude_closed_form(om, om, FRAC_PI_2, 1.0)
            .unwrap()
            .value;
        assert_relative_eq!(c, om * om / 8.0, max_relative = 1e-14);
        assert!(
            two_photon_amplitude(0.1, 0.1, PI / 4.0, 1.0)
                .unwrap()
                .value
                .abs()
                < 1e-16
        );
        assert!(
            two_photon_amplitude_closed_form(0.1, 0.1, PI / 4.0, 1.0)
                .unwrap()
                .value
                .abs()
                < 1e-16
        );
    }

    #[test]
    fn sideband_examples() {
        let s = sideband_amplitudes(0.0, 0.1, FRAC_PI_2, 0.02, 2.0, 1.0).unwrap();
        assert!(s.red.value.abs() < 1e-17 && s.blue.value.abs() < 1e-17);
        let s = sideband_amplitudes(0.1, 0.0, FRAC_PI_2, 0.02, 2.0, 1.0).unwrap();
        assert_relative_eq!(s.red.value, -0.05 * 0.02, max_relative = 1e-12);
        assert_relative_eq!(s.blue.value, -0.05 * 0.02 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(
            s.dispersive,
            0.02 * (0.02 / 3.0 + 0.02),
            max_relative = 1e-12
        );
        assert_relative_eq!(s.rates.delta_prime - 2.0, s.dispersive / 2.0);
        assert!(sideband_amplitudes(0.1, 0.0, 1.0, 0.02, 1.0, 1.0).is_err());
        assert!(sideband_amplitudes(0.1, 0.0, 1.0, 0.02, -1.0, 1.0).is_err());
    }

    #[test]
    fn transparency_examples() {
        let t = transparency_angles(1.0, 1.0);
        assert_relative_eq!(t.primary, PI / 4.0);
        assert_relative_eq!(t.mirror, 3.0 * PI / 4.0);
        let t = transparency_angles(0.0, 1.0);
        assert_eq!((t.primary, t.mirror), (0.0, PI));
        let t = transparency_angles(30.0, 1.0);
        assert_relative_eq!(t.primary / PI, 0.48939359759446455, max_relative = 1e-12);
        assert!(transparency_angles(1.0, 0.0).degenerate);
    }

    #[test]
    fn rotating_frame_identity_without_drive() {
        let h = qubit_drive_hamiltonian(1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        let frame = RotatingFrame::for_drive(h.clone(), &HilbertSpace::qubit(), 0.0, 0.0, 1.0, 1.0)
            .unwrap();
        for k in 0..10 {
            let t = 0.7 * k as f64;
            assert!(frame.matrix_at(t).max_abs_diff(&h.matrix_at(t)) < 1e-15);
        }
    }

    #[test]
    fn rotating_frame_cancels_sigma_z_drive() {
        let (l, t, th, w) = (0.08, 0.03, 1.1, 0.9);
        let h = qubit_drive_hamiltonian(1.3, l, t, th, w).unwrap();
        let frame = RotatingFrame::for_drive(h, &HilbertSpace::qubit(), l, t, th, w).unwrap();
        let z = pauli(PauliKind::Z).into_matrix();
        let n = 32;
        let period = 2.0 * PI / w;
        let mut proj_cos = 0.0;
        for k in 0..n {
            let tt = period * k as f64 / n as f64;
            let m = frame.matrix_at(tt);
            assert!(m.is_hermitian(1e-12));
            let zc = (m.matmul(&z).trace() * 0.5).re;
            proj_cos += zc * (w * tt).cos() * 2.0 / n as f64;
        }
        assert!(proj_cos.abs() < 1e-10, "{proj_cos}");
    }

    #[test]
    fn rotating_frame_pure_longitudinal_moves_drive_into_phases() {
        let (l, w) = (0.1, 1.0);
        let h = qubit_drive_hamiltonian(1.0, l, 0.0, FRAC_PI_2, w).unwrap();
        let frame =
            RotatingFrame::for_drive(h, &HilbertSpace::qubit(), l, 0.0, FRAC_PI_2, w).unwrap();
        for k in 0..20 {
            let t = 0.37 * k as f64;
            let m = frame.matrix_at(t);
            assert_relative_eq!(m[(0, 0)].re, 0.5, epsilon = 1e-12);
            assert_relative_eq!(m[(1, 1)].re, -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotating_frame_is_hermitian_with_resonator() {
        let n_max = 3;
        let q = QubitParams::new(2.1, 0.7).unwrap();
        let r = ResonatorParams::new(1.0, 1e-3, 1e-4, n_max).unwrap();
        let c = CouplingParams::new(0.03, 0.01).unwrap();
        let h0 = build_h_system(&q, &r, &c, Basis::Eigen)
            .unwrap()
            .into_matrix();
        let theta = crate::model::bloch_angle(&q);
        let h = DrivenHamiltonian::new(h0)
            .unwrap()
            .with_term(
                on_qubit(&drive_operator(0.1, 0.05, theta), n_max),
                Modulation::Cos {
                    frequency: 2.9,
                    phase: 0.0,
                },
            )
            .unwrap();
        let frame = RotatingFrame::for_drive(
            h,
            &HilbertSpace::qubit_resonator(n_max),
            0.1,
            0.05,
            theta,
            2.9,
        )
        .unwrap();
        let mut rng = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..100 {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            let t = (rng % 100_000) as f64 / 1000.0;
            assert!(frame.matrix_at(t).is_hermitian(1e-12));
        }
    }

    #[test]
    fn dressed_amplitude_reproduces_qubit_two_photon() {
        // Bare qubit: the dressed formula must reduce to −ab/(2ω) with ω = ω_q/2.
        let (l, t, th) = (0.02, 0.01, 1.0);
        let (a, b) = drive_coefficients(l, t, th);
        let h0 = pauli(PauliKind::Z).matrix() * 0.5;
        let d = DressedBasis::new(&h0);
        let v = drive_operator(l, t, th);
        let amp = dressed_amplitude(&d, &v, 1, 0, 2).unwrap();
        assert_relative_eq!(amp.abs(), (a * b / (2.0 * 0.5)).abs(), max_relative = 1e-12);
        let one = dressed_amplitude(&d, &v, 1, 0, 1).unwrap();
        assert_relative_eq!(one.abs(), (a / 2.0).abs(), max_relative = 1e-12);
    }

    #[test]
    fn dressed_sideband_matches_closed_form_at_degeneracy() {
        let (gap, wr, g) = (2.1, 1.0, 0.01);
        let q = QubitParams::new(gap, 0.0).unwrap();
        let r = ResonatorParams::new(wr, 1e-3, 1e-4, 4).unwrap();
        let c = CouplingParams::new(g, 0.0).unwrap();
        let h0 = build_h_system(&q, &r, &c, Basis::Eigen)
            .unwrap()
            .into_matrix();
        let d = DressedBasis::new(&h0);
        let v = on_qubit(&drive_operator(0.01, 0.0, FRAC_PI_2), 4);
        let sp = HilbertSpace::qubit_resonator(4);
        let blue = dressed_amplitude(&d, &v, sp.index(1, 0), sp.index(0, 1), 1).unwrap();
        let closed = sideband_amplitudes(0.01, 0.0, FRAC_PI_2, g, gap, wr).unwrap();
        assert_relative_eq!(blue.abs(), closed.blue.value.abs(), max_relative = 0.02);
        let red = dressed_amplitude(&d, &v, sp.index(1, 1), sp.index(0, 0), 1).unwrap();
        assert_relative_eq!(red.abs(), closed.red.value.abs(), max_relative = 0.02);
    }

    #[test]
    fn blue_two_photon_allowed_for_both_pure_drives() {
        let q = QubitParams::new(2.1, 0.0).unwrap();
        let c = CouplingParams::new(0.02, 0.0).unwrap();
        let t = blue_two_photon_amplitude(0.0, 0.05, &q, 1.0, &c, 4).unwrap();
        let l = blue_two_photon_amplitude(0.05, 0.0, &q, 1.0, &c, 4).unwrap();
        assert!(t.value > 1e-8 && l.value > 1e-8);
    }

    proptest! {
        #[test]
        fn bessel_recurrence(x in 0.1f64..10.0) {
            for k in 1..=2u32 {
                let lhs = bessel_j(k - 1, x).unwrap() + bessel_j(k + 1, x).unwrap();
                let rhs = 2.0 * k as f64 / x * bessel_j(k, x).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }
        }

        #[test]
        fn one_photon_prefactor_antisymmetry(l in 0.0f64..1.0, t in 0.0f64..1.0, th in 0.01f64..1.56) {
            let (a1, _) = drive_coefficients(l, t, th);
            let (a2, _) = drive_coefficients(t, l, FRAC_PI_2 - th);
            prop_assert!((a1 + a2).abs() < 1e-14);
        }

        #[test]
        fn two_photon_pure_drive_vanishes_at_degeneracy(amp in 0.0f64..2.0, longitudinal in proptest::bool::ANY) {
            let (l, t) = if longitudinal { (amp, 0.0) } else { (0.0, amp) };
            let v = two_photon_amplitude(l, t, FRAC_PI_2, 1.0).unwrap().value;
            prop_assert!(v.abs() < 1e-15 * (1.0 + amp * amp));
        }

        #[test]
        fn sideband_and_one_photon_factors_use_swapped_pairing(
            l in 0.0f64..1.0, t in 0.0f64..1.0, th in 0.01f64..3.13,
        ) {
            let s = sideband_amplitudes(l, t, th, 0.02, 2.1, 1.0).unwrap();
            let side = -s.blue.value / s.rates.gamma_plus;
            let (a, _) = drive_coefficients(l, t, th);
            let one = 2.0 * a;
            let (si, co) = (th.sin(), th.cos().abs());
            prop_assert!((side - (l * si - t * co) / 2.0).abs() < 1e-14);
            prop_assert!((one - (l * co - t * si)).abs() < 1e-14);
            let sum = one * one + (l * si - t * co).powi(2);
            prop_assert!((sum - (l * l + t * t - 4.0 * l * t * si * co)).abs() < 1e-12);
        }

        #[test]
        fn blue_to_red_ratio(l in 0.01f64..1.0, t in 0.0f64..1.0, th in 0.1f64..3.0) {
            let s = sideband_amplitudes(l, t, th, 0.02, 2.1, 1.0).unwrap();
            prop_assume!(s.red.value.abs() > 1e-12);
            prop_assert!((s.blue.value / s.red.value - s.rates.gamma_plus / s.rates.gamma_minus).abs() < 1e-12);
        }
    }
}

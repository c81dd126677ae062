//! Time-domain oracle: Lindblad master equation integrated with fixed-step RK4.
//!
//! Collapse channels are `√γ↓ σ−`, `√γ↑ σ+`, `√(γ_φ/2) σ_z` on the qubit and
//! `√κ a` on the resonator. `γ↑ = γ1·p_th` carries the thermal stray
//! excitation; `γ↓ = γ1·(1 − p_th)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    bloch_angle, drive_operator, qubit_frequency, CouplingParams, QubitParams, ResonatorParams,
};
use crate::operators::{
    boson_ops, on_qubit, on_resonator, pauli, ComplexMatrix, HilbertSpace, PauliKind, C64, I, ONE,
    ZERO,
};

/// Steps per period of the fastest frequency required by the integrator.
pub const STEPS_PER_FASTEST_PERIOD: f64 = 50.0;
/// Window-to-window drift allowed by [`steady_state_pe`].
pub const STEADY_DRIFT_THRESHOLD: f64 = 1e-3;
const TRACE_ABORT: f64 = 1e-6;
const POSITIVITY_ABORT: f64 = -1e-6;

/// Time-dependent Hamiltonian (divided by ħ) with a fixed nonzero pattern.
pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    /// Upper estimate of the fastest angular frequency in the dynamics.
    fn fastest_frequency(&self) -> f64;

    /// Matrix positions that may be nonzero at any time.
    fn pattern(&self) -> &[(usize, usize)];

    /// Writes the entries at `pattern()` positions for time `t`.
    fn fill(&self, t: f64, values: &mut [C64]);

    fn matrix_at(&self, t: f64) -> ComplexMatrix {
        let mut vals = vec![ZERO; self.pattern().len()];
        self.fill(t, &mut vals);
        let mut m = ComplexMatrix::zeros(self.dim(), self.dim());
        for (&(r, c), v) in self.pattern().iter().zip(vals) {
            m[(r, c)] += v;
        }
        m
    }
}

/// Time dependence of one Hamiltonian term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    /// `cos(ωt + φ)`
    Cos { frequency: f64, phase: f64 },
    /// `e^{−iωt}`
    Exp { frequency: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> C64 {
        match *self {
            Modulation::Cos { frequency, phase } => C64::new((frequency * t + phase).cos(), 0.0),
            Modulation::Exp { frequency } => C64::from_polar(1.0, -frequency * t),
        }
    }

    pub fn frequency(&self) -> f64 {
        match *self {
            Modulation::Cos { frequency, .. } | Modulation::Exp { frequency } => frequency.abs(),
        }
    }
}

/// `H(t) = H_0 + Σ_k f_k(t) O_k`.
#[derive(Clone, Debug)]
pub struct DrivenHamiltonian {
    dim: usize,
    pattern: Vec<(usize, usize)>,
    static_values: Vec<C64>,
    term_values: Vec<Vec<C64>>,
    modulations: Vec<Modulation>,
    static_spread: f64,
    term_norms: f64,
    static_part: ComplexMatrix,
    term_ops: Vec<ComplexMatrix>,
}

impl DrivenHamiltonian {
    pub fn new(static_part: ComplexMatrix) -> Result<Self> {
        if !static_part.is_hermitian(1e-9 * (1.0 + static_part.max_abs())) {
            return Err(Error::invalid(
                "static_part",
                "must be square and Hermitian",
            ));
        }
        let (vals, _) = static_part.hermitian_eigen();
        let spread = vals.last().copied().unwrap_or(0.0) - vals.first().copied().unwrap_or(0.0);
        let mut h = Self {
            dim: static_part.rows(),
            pattern: Vec::new(),
            static_values: Vec::new(),
            term_values: Vec::new(),
            modulations: Vec::new(),
            static_spread: spread,
            term_norms: 0.0,
            static_part,
            term_ops: Vec::new(),
        };
        h.rebuild();
        Ok(h)
    }

    /// Adds `f(t)·op`. The caller keeps the total Hermitian, e.g. by adding
    /// `a e^{−iωt}` together with `a† e^{+iωt}`.
    pub fn with_term(mut self, op: ComplexMatrix, modulation: Modulation) -> Result<Self> {
        if op.rows() != self.dim || op.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: op.rows(),
            });
        }
        self.term_norms += op.row_sum_norm();
        self.term_ops.push(op);
        self.modulations.push(modulation);
        self.rebuild();
        Ok(self)
    }

    fn rebuild(&mut self) {
        let mut mask = vec![false; self.dim * self.dim];
        let mut mark = |m: &ComplexMatrix| {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    if m[(r, c)] != ZERO {
                        mask[r * self.dim + c] = true;
                    }
                }
            }
        };
        mark(&self.static_part);
        for op in &self.term_ops {
            mark(op);
        }
        self.pattern = (0..self.dim * self.dim)
            .filter(|&k| mask[k])
            .map(|k| (k / self.dim, k % self.dim))
            .collect();
        self.static_values = self.pattern.iter().map(|&p| self.static_part[p]).collect();
        self.term_values = self
            .term_ops
            .iter()
            .map(|op| self.pattern.iter().map(|&p| op[p]).collect())
            .collect();
    }

    pub fn static_part(&self) -> &ComplexMatrix {
        &self.static_part
    }
}

impl Hamiltonian for DrivenHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn fastest_frequency(&self) -> f64 {
        let drive = self
            .modulations
            .iter()
            .map(Modulation::frequency)
            .fold(0.0, f64::max);
        self.static_spread.max(drive) + self.term_norms
    }

    fn pattern(&self) -> &[(usize, usize)] {
        &self.pattern
    }

    fn fill(&self, t: f64, values: &mut [C64]) {
        values.copy_from_slice(&self.static_values);
        for (m, vals) in self.modulations.iter().zip(&self.term_values) {
            let f = m.value(t);
            for (v, &o) in values.iter_mut().zip(vals) {
                *v += f * o;
            }
        }
    }
}

/// Lab-frame driven qubit: `ω_q σ_z/2 + cos(ωt)[a σ_x + b σ_z]`.
pub fn qubit_drive_hamiltonian(
    omega_q: f64,
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    omega: f64,
) -> Result<DrivenHamiltonian> {
    let h0 = pauli(PauliKind::Z).matrix() * (omega_q / 2.0);
    DrivenHamiltonian::new(h0)?.with_term(
        drive_operator(longitudinal, transversal, theta),
        Modulation::Cos {
            frequency: omega,
            phase: 0.0,
        },
    )
}

/// Decoherence rates. `gamma1 = 1/T1` and `gamma2 = 1/T2` are plain rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_phi: f64,
    /// Equilibrium excited population set by the thermal stray excitation.
    pub thermal_population: f64,
    /// Resonator energy decay rate κ; used only when a resonator is present.
    pub resonator_decay: f64,
}

impl DecoherenceParams {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 >= 0.0) || !(gamma2 >= 0.0) {
            return Err(Error::invalid("decoherence", "rates must be non-negative"));
        }
        let gamma_phi = gamma2 - gamma1 / 2.0;
        if gamma_phi < -1e-12 * gamma2.max(gamma1) {
            return Err(Error::invalid("gamma2", "must satisfy gamma2 >= gamma1/2"));
        }
        Ok(Self {
            gamma1,
            gamma2,
            gamma_phi: gamma_phi.max(0.0),
            thermal_population: 0.0,
            resonator_decay: 0.0,
        })
    }

    pub fn from_times(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0) || !(t2 > 0.0) {
            return Err(Error::invalid(
                "coherence_times",
                "T1 and T2 must be positive",
            ));
        }
        Self::new(1.0 / t1, 1.0 / t2)
    }

    pub fn none() -> Self {
        Self {
            gamma1: 0.0,
            gamma2: 0.0,
            gamma_phi: 0.0,
            thermal_population: 0.0,
            resonator_decay: 0.0,
        }
    }

    pub fn with_thermal_population(mut self, p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::invalid("thermal_population", "must lie in [0, 0.5)"));
        }
        self.thermal_population = p;
        Ok(self)
    }

    pub fn with_resonator_decay(mut self, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::invalid("resonator_decay", "must be non-negative"));
        }
        self.resonator_decay = kappa;
        Ok(self)
    }

    /// Collapse operators on `space` (qubit, or qubit ⊗ resonator).
    pub fn collapse_operators(&self, space: &HilbertSpace) -> Result<Vec<ComplexMatrix>> {
        let lift = |m: &ComplexMatrix| match space.fock_dim() {
            Some(nf) => on_qubit(m, nf - 1),
            None => m.clone(),
        };
        let mut ops = Vec::new();
        let down = self.gamma1 * (1.0 - self.thermal_population);
        let up = self.gamma1 * self.thermal_population;
        if down > 0.0 {
            ops.push(lift(&(pauli(PauliKind::Minus).matrix() * down.sqrt())));
        }
        if up > 0.0 {
            ops.push(lift(&(pauli(PauliKind::Plus).matrix() * up.sqrt())));
        }
        if self.gamma_phi > 0.0 {
            ops.push(lift(
                &(pauli(PauliKind::Z).matrix() * (self.gamma_phi / 2.0).sqrt()),
            ));
        }
        if let (Some(nf), true) = (space.fock_dim(), self.resonator_decay > 0.0) {
            let a = boson_ops(nf - 1)?.annihilate.into_matrix();
            ops.push(on_resonator(&(&a * self.resonator_decay.sqrt())));
        }
        Ok(ops)
    }
}

/// Density matrix with its Hilbert-space labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != space.dim() || !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.rows(),
            });
        }
        if !matrix.is_hermitian(1e-10) {
            return Err(Error::invalid("rho", "must be Hermitian"));
        }
        if (matrix.trace().re - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("rho", "must have unit trace"));
        }
        let rho = Self { space, matrix };
        if rho.min_eigenvalue() < -1e-9 {
            return Err(Error::invalid("rho", "must be positive semidefinite"));
        }
        Ok(rho)
    }

    pub fn from_pure(space: HilbertSpace, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if psi.len() != space.dim() || norm == 0.0 {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: psi.len(),
            });
        }
        let m = ComplexMatrix::from_fn(psi.len(), psi.len(), |r, c| {
            psi[r] * psi[c].conj() / (norm * norm)
        });
        Self::new(space, m)
    }

    fn basis_state(space: HilbertSpace, qubit: usize) -> Self {
        let mut m = ComplexMatrix::zeros(space.dim(), space.dim());
        let k = space.index(qubit, 0);
        m[(k, k)] = ONE;
        Self { space, matrix: m }
    }

    /// `|g⟩⟨g|` (⊗ vacuum).
    pub fn ground(space: HilbertSpace) -> Self {
        Self::basis_state(space, 1)
    }

    /// `|e⟩⟨e|` (⊗ vacuum).
    pub fn excited(space: HilbertSpace) -> Self {
        Self::basis_state(space, 0)
    }

    /// Qubit thermal state with excited population `p` (⊗ vacuum).
    pub fn thermal_qubit(space: HilbertSpace, p: f64) -> Result<Self> {
        let mut m = ComplexMatrix::zeros(space.dim(), space.dim());
        let (e, g) = (space.index(0, 0), space.index(1, 0));
        m[(e, e)] = C64::new(p, 0.0);
        m[(g, g)] = C64::new(1.0 - p, 0.0);
        Self::new(space, m)
    }

    /// Qubit thermal state times a truncated coherent resonator state `|α⟩`,
    /// `α = √n̄`, renormalized on the Fock cutoff.
    pub fn thermal_with_coherent(n_max: usize, p: f64, mean_photons: f64) -> Result<Self> {
        if !(mean_photons >= 0.0) {
            return Err(Error::invalid("mean_photons", "must be non-negative"));
        }
        let alpha = mean_photons.sqrt();
        let mut amp = Vec::with_capacity(n_max + 1);
        let mut c = (-mean_photons / 2.0).exp();
        for n in 0..=n_max {
            if n > 0 {
                c *= alpha / (n as f64).sqrt();
            }
            amp.push(c);
        }
        let norm: f64 = amp.iter().map(|a| a * a).sum::<f64>().sqrt();
        let space = HilbertSpace::qubit_resonator(n_max);
        let nf = n_max + 1;
        let mut m = ComplexMatrix::zeros(2 * nf, 2 * nf);
        for (q, w) in [(0usize, p), (1usize, 1.0 - p)] {
            for i in 0..nf {
                for j in 0..nf {
                    m[(q * nf + i, q * nf + j)] =
                        C64::new(w * amp[i] * amp[j] / (norm * norm), 0.0);
                }
            }
        }
        Self::new(space, m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn excited_population(&self) -> f64 {
        excited_population(&self.space, self.matrix.as_slice())
    }

    pub fn photon_number(&self) -> Option<f64> {
        photon_number(&self.space, self.matrix.as_slice())
    }

    pub fn top_fock_population(&self) -> Option<f64> {
        top_fock_population(&self.space, self.matrix.as_slice())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = self.matrix.hermitian_eigen();
        vals.first().copied().unwrap_or(0.0)
    }
}

fn diag(rho: &[C64], dim: usize, k: usize) -> f64 {
    rho[k * dim + k].re
}

fn excited_population(space: &HilbertSpace, rho: &[C64]) -> f64 {
    let dim = space.dim();
    let nf = space.fock_dim().unwrap_or(1);
    (0..nf).map(|n| diag(rho, dim, n)).sum()
}

fn photon_number(space: &HilbertSpace, rho: &[C64]) -> Option<f64> {
    let nf = space.fock_dim()?;
    let dim = space.dim();
    Some(
        (0..nf)
            .map(|n| n as f64 * (diag(rho, dim, n) + diag(rho, dim, nf + n)))
            .sum(),
    )
}

fn top_fock_population(space: &HilbertSpace, rho: &[C64]) -> Option<f64> {
    let nf = space.fock_dim()?;
    let dim = space.dim();
    Some(diag(rho, dim, nf - 1) + diag(rho, dim, 2 * nf - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    /// Averaging window as a fraction of `t_final`.
    pub steady_window: f64,
    /// Abort when the top Fock level population exceeds this value.
    pub fock_guard: Option<f64>,
}

impl PropagationConfig {
    pub fn new(dt: f64, t_final: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            t_final,
            record_stride: 1,
            steady_window: 0.2,
            fock_guard: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Largest admissible step for `h`, with the stride chosen so that
    /// roughly `records` samples are stored.
    pub fn auto(h: &dyn Hamiltonian, t_final: f64, records: usize) -> Result<Self> {
        let dt = max_step(h);
        let steps = (t_final / dt).ceil().max(1.0) as usize;
        let mut cfg = Self::new(dt, t_final)?;
        cfg.record_stride = (steps / records.max(1)).max(1);
        Ok(cfg)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.steady_window = window;
        self
    }

    pub fn with_fock_guard(mut self, guard: Option<f64>) -> Self {
        self.fock_guard = guard;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::invalid(
                "propagation",
                "dt and t_final must be positive",
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be at least 1"));
        }
        if !(self.steady_window > 0.0 && self.steady_window <= 0.5) {
            return Err(Error::invalid("steady_window", "must lie in (0, 0.5]"));
        }
        Ok(())
    }

    /// Number of steps and the uniform step actually used.
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_final / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

/// Step bound `2π/(50·ω_fastest)`.
pub fn max_step(h: &dyn Hamiltonian) -> f64 {
    TAU / (STEPS_PER_FASTEST_PERIOD * h.fastest_frequency().max(f64::MIN_POSITIVE))
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub times: Vec<f64>,
    pub excited_population: Vec<f64>,
    pub photon_number: Option<Vec<f64>>,
    pub final_state: DensityMatrix,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub dt: f64,
}

struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                if m[(r, c)] != ZERO {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        Self { entries }
    }
}

/// Right-hand side `dρ/dt = X + X† + Σ LρL†` with `X = −i H_eff ρ` and
/// `H_eff = H − (i/2) Σ L†L`.
struct Liouvillian<'a> {
    h: &'a dyn Hamiltonian,
    dim: usize,
    union: Vec<(usize, usize)>,
    h_map: Vec<usize>,
    k_values: Vec<C64>,
    jumps: Vec<SparseOp>,
    h_values: Vec<C64>,
    heff: Vec<C64>,
    x: Vec<C64>,
    y: Vec<C64>,
}

impl<'a> Liouvillian<'a> {
    fn new(h: &'a dyn Hamiltonian, jumps: &[ComplexMatrix]) -> Self {
        let dim = h.dim();
        let mut k = ComplexMatrix::zeros(dim, dim);
        for l in jumps {
            k = &k + &l.adjoint().matmul(l);
        }
        let mut union: Vec<(usize, usize)> = h.pattern().to_vec();
        for r in 0..dim {
            for c in 0..dim {
                if k[(r, c)] != ZERO {
                    union.push((r, c));
                }
            }
        }
        union.sort_unstable();
        union.dedup();
        let h_map = h
            .pattern()
            .iter()
            .map(|p| union.binary_search(p).expect("pattern in union"))
            .collect();
        let k_values = union.iter().map(|&p| k[p] * C64::new(0.0, -0.5)).collect();
        Self {
            h,
            dim,
            h_map,
            k_values,
            jumps: jumps.iter().map(SparseOp::from_dense).collect(),
            h_values: vec![ZERO; h.pattern().len()],
            heff: vec![ZERO; union.len()],
            union,
            x: vec![ZERO; dim * dim],
            y: vec![ZERO; dim * dim],
        }
    }

    fn rhs(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        self.h.fill(t, &mut self.h_values);
        self.heff.copy_from_slice(&self.k_values);
        for (&u, &v) in self.h_map.iter().zip(&self.h_values) {
            self.heff[u] += v;
        }
        self.x.fill(ZERO);
        for (&(r, c), &v) in self.union.iter().zip(&self.heff) {
            let coef = -I * v;
            let src = &rho[c * d..(c + 1) * d];
            let dst = &mut self.x[r * d..(r + 1) * d];
            for (o, &s) in dst.iter_mut().zip(src) {
                *o += coef * s;
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.x[i * d + j] + self.x[j * d + i].conj();
            }
        }
        for l in &self.jumps {
            self.y.fill(ZERO);
            for &(r, c, v) in &l.entries {
                let src = &rho[c * d..(c + 1) * d];
                let dst = &mut self.y[r * d..(r + 1) * d];
                for (o, &s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
            for &(r, c, v) in &l.entries {
                let vc = v.conj();
                for i in 0..d {
                    out[i * d + r] += self.y[i * d + c] * vc;
                }
            }
        }
    }
}

/// Integrates the master equation, calling `observe(step, t, ρ)` after every step
/// (and once for the initial state with step 0).
fn integrate(
    h: &dyn Hamiltonian,
    dec: &DecoherenceParams,
    rho0: &DensityMatrix,
    cfg: &PropagationConfig,
    mut observe: impl FnMut(usize, f64, &[C64]) -> Result<()>,
) -> Result<Vec<C64>> {
    cfg.validate()?;
    let dim = h.dim();
    if rho0.space().dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho0.space().dim(),
        });
    }
    let (steps, dt) = cfg.steps();
    let bound = max_step(h);
    if dt > bound * (1.0 + 1e-9) {
        return Err(Error::StepTooLarge {
            dt,
            bound,
            fastest: h.fastest_frequency(),
        });
    }
    let jumps = dec.collapse_operators(rho0.space())?;
    let mut lv = Liouvillian::new(h, &jumps);
    let n = dim * dim;
    let mut rho = rho0.matrix().as_slice().to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
    );
    observe(0, 0.0, &rho)?;
    for step in 0..steps {
        let t = step as f64 * dt;
        lv.rhs(t, &rho, &mut k1);
        for i in 0..n {
            tmp[i] = rho[i] + k1[i] * (dt / 2.0);
        }
        lv.rhs(t + dt / 2.0, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = rho[i] + k2[i] * (dt / 2.0);
        }
        lv.rhs(t + dt / 2.0, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = rho[i] + k3[i] * dt;
        }
        lv.rhs(t + dt, &tmp, &mut k4);
        for i in 0..n {
            rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        observe(step + 1, (step + 1) as f64 * dt, &rho)?;
    }
    Ok(rho)
}

fn min_eigenvalue_of(dim: usize, rho: &[C64]) -> f64 {
    if dim == 2 {
        let (a, d) = (rho[0].re, rho[3].re);
        let b = rho[1].norm();
        let mean = (a + d) / 2.0;
        return mean - ((a - d) * (a - d) / 4.0 + b * b).sqrt();
    }
    let m = ComplexMatrix::from_vec(dim, dim, rho.to_vec()).expect("square");
    let herm = &(&m + &m.adjoint()) * 0.5;
    herm.hermitian_eigen().0[0]
}

fn trace_of(dim: usize, rho: &[C64]) -> f64 {
    (0..dim).map(|k| rho[k * dim + k].re).sum()
}

/// Integrates `dρ/dt = −i[H(t), ρ] + Σ_k D[L_k]ρ` and records observables
/// every `record_stride` steps and at the final time.
pub fn propagate(
    h: &dyn Hamiltonian,
    dec: &DecoherenceParams,
    rho0: &DensityMatrix,
    cfg: &PropagationConfig,
) -> Result<TrajectoryResult> {
    let space = rho0.space().clone();
    let dim = space.dim();
    let (steps, dt) = cfg.steps();
    let with_photons = space.fock_dim().is_some();
    let mut times = Vec::new();
    let mut pe = Vec::new();
    let mut photons = Vec::new();
    let mut max_trace_error: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let rho = integrate(h, dec, rho0, cfg, |step, t, rho| {
        if step % cfg.record_stride != 0 && step != steps {
            return Ok(());
        }
        let tr_err = (trace_of(dim, rho) - 1.0).abs();
        let ev = min_eigenvalue_of(dim, rho);
        if tr_err > TRACE_ABORT {
            return Err(Error::Invariant {
                what: format!("trace drift {tr_err:e}"),
                time: t,
                dt,
            });
        }
        if ev < POSITIVITY_ABORT {
            return Err(Error::Invariant {
                what: format!("negative eigenvalue {ev:e}"),
                time: t,
                dt,
            });
        }
        if let (Some(guard), Some(top)) = (cfg.fock_guard, top_fock_population(&space, rho)) {
            if top > guard {
                return Err(Error::FockTruncation {
                    population: top,
                    n_max: space.fock_dim().unwrap_or(1) - 1,
                });
            }
        }
        max_trace_error = max_trace_error.max(tr_err);
        min_eig = min_eig.min(ev);
        times.push(t);
        pe.push(excited_population(&space, rho));
        if with_photons {
            photons.push(photon_number(&space, rho).unwrap_or(0.0));
        }
        Ok(())
    })?;
    let matrix = ComplexMatrix::from_vec(dim, dim, rho).expect("square state");
    Ok(TrajectoryResult {
        times,
        excited_population: pe,
        photon_number: with_photons.then_some(photons),
        final_state: DensityMatrix { space, matrix },
        max_trace_error,
        min_eigenvalue: min_eig,
        dt,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub excited_population: f64,
    pub drift: f64,
}

/// Mean `p_e` over the final `steady_window` of the run, with the preceding
/// window of equal length used as a convergence check.
pub fn steady_state_pe(
    h: &dyn Hamiltonian,
    dec: &DecoherenceParams,
    rho0: &DensityMatrix,
    cfg: &PropagationConfig,
) -> Result<SteadyState> {
    if !(dec.gamma1 > 0.0) {
        return Err(Error::invalid(
            "gamma1",
            "a steady state requires gamma1 > 0",
        ));
    }
    let space = rho0.space().clone();
    let dim = space.dim();
    let (steps, dt) = cfg.steps();
    let window = ((steps as f64) * cfg.steady_window).round().max(1.0) as usize;
    let last_start = steps - window;
    let prev_start = steps.saturating_sub(2 * window);
    let (mut sum_last, mut sum_prev) = (0.0, 0.0);
    let (mut n_last, mut n_prev) = (0usize, 0usize);
    let mut check_counter = 0usize;
    integrate(h, dec, rho0, cfg, |step, t, rho| {
        if step > last_start {
            sum_last += excited_population(&space, rho);
            n_last += 1;
        } else if step > prev_start {
            sum_prev += excited_population(&space, rho);
            n_prev += 1;
        }
        check_counter += 1;
        if check_counter.is_multiple_of(cfg.record_stride.max(64)) || step == steps {
            let tr_err = (trace_of(dim, rho) - 1.0).abs();
            if tr_err > TRACE_ABORT {
                return Err(Error::Invariant {
                    what: format!("trace drift {tr_err:e}"),
                    time: t,
                    dt,
                });
            }
            if let (Some(guard), Some(top)) = (cfg.fock_guard, top_fock_population(&space, rho)) {
                if top > guard {
                    return Err(Error::FockTruncation {
                        population: top,
                        n_max: space.fock_dim().unwrap_or(1) - 1,
                    });
                }
            }
        }
        Ok(())
    })?;
    let last = sum_last / n_last.max(1) as f64;
    let prev = if n_prev > 0 {
        sum_prev / n_prev as f64
    } else {
        last
    };
    let drift = (last - prev).abs();
    if drift > STEADY_DRIFT_THRESHOLD {
        return Err(Error::NotConverged {
            drift,
            threshold: STEADY_DRIFT_THRESHOLD,
        });
    }
    Ok(SteadyState {
        excited_population: last,
        drift,
    })
}

/// Time of the first maximum of `values` after a centered moving average over
/// `window` (same units as `times`), refined by a parabola through the three
/// samples around the discrete maximum.
pub fn first_peak_time(times: &[f64], values: &[f64], window: f64) -> Option<f64> {
    if times.len() < 5 || times.len() != values.len() {
        return None;
    }
    let step = times[1] - times[0];
    let half = ((window / step) / 2.0).round() as usize;
    let n = values.len();
    if n <= 2 * half + 3 {
        return None;
    }
    let mut smooth = Vec::with_capacity(n - 2 * half);
    let mut acc: f64 = values[..=2 * half].iter().sum();
    smooth.push(acc);
    for i in (2 * half + 1)..n {
        acc += values[i] - values[i - 2 * half - 1];
        smooth.push(acc);
    }
    let norm = (2 * half + 1) as f64;
    for s in &mut smooth {
        *s /= norm;
    }
    let global = smooth.iter().copied().fold(f64::MIN, f64::max);
    let floor = smooth[0] + 0.5 * (global - smooth[0]);
    let idx = (1..smooth.len() - 1).find(|&i| {
        smooth[i] >= floor && smooth[i] >= smooth[i - 1] && smooth[i] >= smooth[i + 1]
    })?;
    let (y0, y1, y2) = (smooth[idx - 1], smooth[idx], smooth[idx + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom.abs() > 0.0 {
        0.5 * (y0 - y2) / denom
    } else {
        0.0
    };
    Some(times[idx + half] + shift * step)
}

/// Rabi frequency `π / t_peak` from a trajectory starting in |g⟩, averaging
/// over one drive period to remove counter-rotating ripple.
pub fn rabi_frequency(traj: &TrajectoryResult, drive_period: f64) -> Option<f64> {
    first_peak_time(&traj.times, &traj.excited_population, drive_period).map(|t| PI / t)
}

/// One-period unitary `U(t0 + T, t0)` of a closed system by RK4 with `steps` steps.
pub fn period_propagator(h: &dyn Hamiltonian, t0: f64, period: f64, steps: usize) -> ComplexMatrix {
    let dim = h.dim();
    let dt = period / steps as f64;
    let deriv = |t: f64, u: &ComplexMatrix| h.matrix_at(t).matmul(u).scale(-I);
    let mut u = ComplexMatrix::identity(dim);
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let k1 = deriv(t, &u);
        let k2 = deriv(t + dt / 2.0, &(&u + &(&k1 * (dt / 2.0))));
        let k3 = deriv(t + dt / 2.0, &(&u + &(&k2 * (dt / 2.0))));
        let k4 = deriv(t + dt, &(&u + &(&k3 * dt)));
        let incr = &(&(&k1 + &(&k2 * 2.0)) + &(&(&k3 * 2.0) + &k4)) * (dt / 6.0);
        u = &u + &incr;
    }
    u
}

/// Effective Pauli vector `h` with `U = e^{iφ₀} exp(−i T h·σ)` for a 2×2 unitary.
pub fn effective_pauli_vector(u: &ComplexMatrix, period: f64) -> [f64; 3] {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let mut phase = det.sqrt();
    if (u.trace() / phase).re < 0.0 {
        phase = -phase;
    }
    let v = u.scale(ONE / phase);
    let comps: Vec<f64> = [PauliKind::X, PauliKind::Y, PauliKind::Z]
        .iter()
        .map(|&k| (v.matmul(pauli(k).matrix()).trace() * I * 0.5).re)
        .collect();
    let sin_norm = (comps[0] * comps[0] + comps[1] * comps[1] + comps[2] * comps[2]).sqrt();
    let cos_b = (v.trace() * 0.5).re;
    let beta = sin_norm.atan2(cos_b);
    let scale = if sin_norm > 0.0 {
        beta / (sin_norm * period)
    } else {
        0.0
    };
    [comps[0] * scale, comps[1] * scale, comps[2] * scale]
}

/// Two-photon resonance located with the one-period Floquet operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonResonance {
    /// Drive frequency minimizing the quasienergy splitting.
    pub frequency: f64,
    /// Minimal quasienergy splitting, equal to `2|A₂|` at resonance.
    pub splitting: f64,
    /// Signed `σ_x` coefficient of the one-period effective Hamiltonian.
    pub sigma_x: f64,
}

pub fn two_photon_resonance(
    omega_q: f64,
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    steps_per_period: usize,
) -> Result<TwoPhotonResonance> {
    let (a, b) = crate::model::drive_coefficients(longitudinal, transversal, theta);
    let eval = |omega: f64| -> Result<[f64; 3]> {
        let h = qubit_drive_hamiltonian(omega_q, longitudinal, transversal, theta, omega)?;
        let period = TAU / omega;
        Ok(effective_pauli_vector(
            &period_propagator(&h, 0.0, period, steps_per_period),
            period,
        ))
    };
    let splitting = |omega: f64| -> Result<f64> {
        let v = eval(omega)?;
        Ok(2.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
    };
    let estimate = (a.abs() * b.abs()) / omega_q;
    let width = 2.0 * (a * a + b * b) / omega_q + 20.0 * estimate + 1e-6 * omega_q;
    let (mut lo, mut hi) = (omega_q / 2.0 - width, omega_q / 2.0 + width);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (splitting(x1)?, splitting(x2)?);
    for _ in 0..200 {
        if hi - lo < 1e-12 * omega_q {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = splitting(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = splitting(x2)?;
        }
    }
    let frequency = (lo + hi) / 2.0;
    let v = eval(frequency)?;
    Ok(TwoPhotonResonance {
        frequency,
        splitting: 2.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt(),
        sigma_x: v[0],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sideband {
    /// `|g,n⟩ → |e,n−1⟩`
    Red,
    /// `|g,n⟩ → |e,n+1⟩`
    Blue,
}

/// Eigenbasis qubit operator multiplying `(a + a†)` in the coupled Hamiltonian.
pub fn coupling_operator(q: &QubitParams, c: &CouplingParams) -> ComplexMatrix {
    let theta = bloch_angle(q);
    let (s, co) = (theta.sin(), theta.cos());
    &(pauli(PauliKind::Z).matrix() * (c.transverse * co + c.longitudinal * s))
        + &(pauli(PauliKind::X).matrix() * (c.longitudinal * co - c.transverse * s))
}

/// Dressed eigenbasis of a static Hamiltonian with each eigenvector labeled
/// by the bare basis state it overlaps most.
#[derive(Clone, Debug)]
pub struct DressedBasis {
    pub energies: Vec<f64>,
    pub vectors: ComplexMatrix,
    /// `label[bare] = dressed index`.
    pub label: Vec<usize>,
}

impl DressedBasis {
    pub fn new(h0: &ComplexMatrix) -> Self {
        let (energies, vectors) = h0.hermitian_eigen();
        let dim = h0.rows();
        let mut label = vec![usize::MAX; dim];
        let mut taken = vec![false; dim];
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
        for bare in 0..dim {
            for k in 0..dim {
                pairs.push((vectors[(bare, k)].norm_sqr(), bare, k));
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
        for (_, bare, k) in pairs {
            if label[bare] == usize::MAX && !taken[k] {
                label[bare] = k;
                taken[k] = true;
            }
        }
        Self {
            energies,
            vectors,
            label,
        }
    }

    pub fn energy_of(&self, bare: usize) -> f64 {
        self.energies[self.label[bare]]
    }

    /// Matrix of `op` in the dressed basis.
    pub fn transform(&self, op: &ComplexMatrix) -> ComplexMatrix {
        self.vectors.adjoint().matmul(&op.matmul(&self.vectors))
    }
}

fn eigen_system(q: &QubitParams, r: &ResonatorParams, c: &CouplingParams) -> Result<ComplexMatrix> {
    Ok(crate::model::build_h_system(q, r, c, crate::model::Basis::Eigen)?.into_matrix())
}

/// Dressed transition frequency `E(|e, n0 ± 1⟩) − E(|g, n0⟩)`; falls back to
/// `ω_q ∓ ω_r` when the red partner does not exist.
pub fn sideband_frequency(
    q: &QubitParams,
    r: &ResonatorParams,
    c: &CouplingParams,
    sideband: Sideband,
    n0: usize,
) -> Result<f64> {
    let wq = qubit_frequency(q);
    let space = HilbertSpace::qubit_resonator(r.n_max);
    let target = match sideband {
        Sideband::Blue => n0 + 1,
        Sideband::Red if n0 >= 1 => n0 - 1,
        Sideband::Red => return Ok(wq - r.frequency),
    };
    if target > r.n_max {
        return Err(Error::invalid(
            "n_max",
            "too small for the requested sideband",
        ));
    }
    let dressed = DressedBasis::new(&eigen_system(q, r, c)?);
    Ok(dressed.energy_of(space.index(0, target)) - dressed.energy_of(space.index(1, n0)))
}

/// Full qubit-resonator sideband simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandRun {
    pub qubit: QubitParams,
    pub resonator: ResonatorParams,
    pub coupling: CouplingParams,
    /// Qubit rates; the resonator decay is taken from `resonator`.
    pub decoherence: DecoherenceParams,
    pub longitudinal: f64,
    pub transversal: f64,
    pub sideband: Sideband,
    /// Simulated readout population `n̄_sim`.
    pub readout_photons: f64,
    /// Whether a resonant displacement drive maintains `n̄_sim` against κ.
    pub readout_drive: bool,
    /// Drive frequency; defaults to the dressed sideband resonance.
    pub drive_frequency: Option<f64>,
    pub t_final: f64,
    pub record_stride: usize,
}

/// Builds the sideband Hamiltonian in the frame rotating with the resonator
/// (`a → a e^{−iω_r t}`), which is exact and removes `ω_r` from the step bound.
pub fn sideband_hamiltonian(run: &SidebandRun) -> Result<(DrivenHamiltonian, f64)> {
    let (q, r, c) = (&run.qubit, &run.resonator, &run.coupling);
    let n_max = r.n_max;
    let wq = qubit_frequency(q);
    let theta = bloch_angle(q);
    let n0 = run.readout_photons.round() as usize;
    let omega = match run.drive_frequency {
        Some(w) => w,
        None => sideband_frequency(q, r, c, run.sideband, n0)?,
    };
    let ops = boson_ops(n_max)?;
    let a = ops.annihilate.matrix();
    let adag = ops.create.matrix();
    let mut h0 = on_qubit(&(pauli(PauliKind::Z).matrix() * (wq / 2.0)), n_max);
    if run.readout_drive && run.readout_photons > 0.0 {
        let eps = run.readout_photons.sqrt() * r.kappa_total() / 2.0;
        h0 = &h0 + &on_resonator(&(&(a + adag) * eps));
    }
    let cop = coupling_operator(q, c);
    let h = DrivenHamiltonian::new(h0)?
        .with_term(
            cop.kron(a),
            Modulation::Exp {
                frequency: r.frequency,
            },
        )?
        .with_term(
            cop.kron(adag),
            Modulation::Exp {
                frequency: -r.frequency,
            },
        )?
        .with_term(
            on_qubit(
                &drive_operator(run.longitudinal, run.transversal, theta),
                n_max,
            ),
            Modulation::Cos {
                frequency: omega,
                phase: 0.0,
            },
        )?;
    Ok((h, omega))
}

pub fn sideband_drive_run(run: &SidebandRun) -> Result<TrajectoryResult> {
    let (h, _) = sideband_hamiltonian(run)?;
    let dec = run
        .decoherence
        .with_resonator_decay(run.resonator.kappa_total())?;
    let rho0 = DensityMatrix::thermal_with_coherent(
        run.resonator.n_max,
        run.decoherence.thermal_population,
        run.readout_photons,
    )?;
    let cfg = PropagationConfig::auto(&h, run.t_final, 1)?
        .with_stride(run.record_stride)
        .with_fock_guard(Some(1e-3));
    propagate(&h, &dec, &rho0, &cfg)
}

/// Driven two-level steady state
/// `p_e = (Ω²/2)(γ2/γ1) / (δ² + γ2² + Ω²γ2/γ1)`.
pub fn saturation_pe(rabi: f64, detuning: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    if !(gamma1 > 0.0) || !(gamma2 > 0.0) {
        return Err(Error::invalid(
            "decoherence",
            "gamma1 and gamma2 must be positive",
        ));
    }
    let r = gamma2 / gamma1;
    Ok(rabi * rabi / 2.0 * r / (detuning * detuning + gamma2 * gamma2 + rabi * rabi * r))
}

/// Thermal floor folded into a coherent response: `p_str + (1 − 2p_str)·p_coh`.
pub fn with_thermal_floor(p_coherent: f64, stray: f64) -> f64 {
    stray + (1.0 - 2.0 * stray) * p_coherent
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn qubit() -> HilbertSpace {
        HilbertSpace::qubit()
    }

    #[test]
    fn idle_excited_state_stays_excited() {
        let h = DrivenHamiltonian::new(pauli(PauliKind::Z).matrix() * 0.5).unwrap();
        let cfg = PropagationConfig::auto(&h, 50.0, 100).unwrap();
        let traj = propagate(
            &h,
            &DecoherenceParams::none(),
            &DensityMatrix::excited(qubit()),
            &cfg,
        )
        .unwrap();
        assert!(traj
            .excited_population
            .iter()
            .all(|&p| (p - 1.0).abs() < 1e-14));
    }

    #[test]
    fn energy_relaxation_is_exponential() {
        let h = DrivenHamiltonian::new(pauli(PauliKind::Z).matrix() * 0.5).unwrap();
        let dec = DecoherenceParams::new(0.05, 0.025).unwrap();
        let cfg = PropagationConfig::auto(&h, 40.0, 200).unwrap();
        let traj = propagate(&h, &dec, &DensityMatrix::excited(qubit()), &cfg).unwrap();
        for (&t, &p) in traj.times.iter().zip(&traj.excited_population) {
            assert_relative_eq!(p, (-0.05 * t).exp(), max_relative = 1e-6);
        }
    }

    #[test]
    fn resonant_transverse_drive_gives_rabi_oscillation() {
        let omega_t = 0.02;
        let h = qubit_drive_hamiltonian(1.0, 0.0, omega_t, PI / 2.0, 1.0).unwrap();
        let rabi = omega_t / 2.0;
        let cfg = PropagationConfig::auto(&h, TAU / rabi, 400).unwrap();
        let traj = propagate(
            &h,
            &DecoherenceParams::none(),
            &DensityMatrix::ground(qubit()),
            &cfg,
        )
        .unwrap();
        for (&t, &p) in traj.times.iter().zip(&traj.excited_population) {
            let want = (rabi * t / 2.0).sin().powi(2);
            assert!((p - want).abs() < 0.02, "t={t} p={p} want={want}");
        }
        let measured = rabi_frequency(&traj, TAU).unwrap();
        assert_relative_eq!(measured, rabi, max_relative = 0.01);
    }

    #[test]
    fn rejects_oversized_step() {
        let h = qubit_drive_hamiltonian(1.0, 0.0, 0.01, PI / 2.0, 1.0).unwrap();
        let cfg = PropagationConfig::new(1.0, 10.0).unwrap();
        let err = propagate(
            &h,
            &DecoherenceParams::none(),
            &DensityMatrix::ground(qubit()),
            &cfg,
        );
        assert!(matches!(err, Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn purity_conserved_without_dissipation() {
        let h = qubit_drive_hamiltonian(1.0, 0.01, 0.02, 1.1, 1.0).unwrap();
        let dt = max_step(&h) / 8.0;
        let cfg = PropagationConfig::new(dt, 300.0).unwrap().with_stride(50);
        let traj = propagate(
            &h,
            &DecoherenceParams::none(),
            &DensityMatrix::ground(qubit()),
            &cfg,
        )
        .unwrap();
        assert!((traj.final_state.purity() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn steady_state_matches_saturation_formula() {
        let g1 = 1e-3;
        let g2 = 1e-2;
        let rabi = g2;
        let dec = DecoherenceParams::new(g1, g2).unwrap();
        let h = qubit_drive_hamiltonian(1.0, 0.0, 2.0 * rabi, PI / 2.0, 1.0).unwrap();
        let cfg = PropagationConfig::auto(&h, 12.0 / g1, 1).unwrap();
        let ss = steady_state_pe(&h, &dec, &DensityMatrix::ground(qubit()), &cfg).unwrap();
        let want = saturation_pe(rabi, 0.0, g1, g2).unwrap();
        assert_relative_eq!(ss.excited_population, want, max_relative = 0.02);
    }

    #[test]
    fn steady_state_zero_drive_is_ground() {
        let dec = DecoherenceParams::new(1e-2, 1e-2).unwrap();
        let h = qubit_drive_hamiltonian(1.0, 0.0, 0.0, PI / 2.0, 1.0).unwrap();
        let cfg = PropagationConfig::auto(&h, 500.0, 1).unwrap();
        let ss = steady_state_pe(&h, &dec, &DensityMatrix::ground(qubit()), &cfg).unwrap();
        assert!(ss.excited_population.abs() < 1e-12);
    }

    #[test]
    fn steady_state_requires_relaxation() {
        let h = qubit_drive_hamiltonian(1.0, 0.0, 0.01, PI / 2.0, 1.0).unwrap();
        let cfg = PropagationConfig::auto(&h, 10.0, 1).unwrap();
        let err = steady_state_pe(
            &h,
            &DecoherenceParams::none(),
            &DensityMatrix::ground(qubit()),
            &cfg,
        );
        assert!(err.is_err());
    }

    #[test]
    fn short_run_reports_non_convergence() {
        let dec = DecoherenceParams::new(1e-4, 1e-4).unwrap();
        let h = qubit_drive_hamiltonian(1.0, 0.0, 0.05, PI / 2.0, 1.0).unwrap();
        let cfg = PropagationConfig::auto(&h, 200.0, 1).unwrap();
        let err = steady_state_pe(&h, &dec, &DensityMatrix::ground(qubit()), &cfg);
        assert!(matches!(err, Err(Error::NotConverged { .. })));
    }

    #[test]
    fn thermal_channel_sets_equilibrium() {
        let dec = DecoherenceParams::new(0.02, 0.02)
            .unwrap()
            .with_thermal_population(0.05)
            .unwrap();
        let h = DrivenHamiltonian::new(pauli(PauliKind::Z).matrix() * 0.5).unwrap();
        let cfg = PropagationConfig::auto(&h, 1000.0, 10).unwrap();
        let traj = propagate(&h, &dec, &DensityMatrix::ground(qubit()), &cfg).unwrap();
        assert_relative_eq!(
            traj.final_state.excited_population(),
            0.05,
            max_relative = 1e-6
        );
    }

    #[test]
    fn floquet_vector_recovers_static_field() {
        let h = DrivenHamiltonian::new(
            &(pauli(PauliKind::X).matrix() * 0.03) + &(pauli(PauliKind::Z).matrix() * -0.02),
        )
        .unwrap();
        let u = period_propagator(&h, 0.0, 10.0, 2000);
        let v = effective_pauli_vector(&u, 10.0);
        assert_relative_eq!(v[0], 0.03, max_relative = 1e-8);
        assert!(v[1].abs() < 1e-10);
        assert_relative_eq!(v[2], -0.02, max_relative = 1e-8);
    }

    #[test]
    fn dressed_labels_follow_bare_states() {
        let q = QubitParams::new(2.1, 0.0).unwrap();
        let r = ResonatorParams::new(1.0, 1e-3, 1e-4, 4).unwrap();
        let c = CouplingParams::new(0.02, 0.0).unwrap();
        let d = DressedBasis::new(&eigen_system(&q, &r, &c).unwrap());
        let sp = HilbertSpace::qubit_resonator(4);
        let e_blue = d.energy_of(sp.index(0, 1)) - d.energy_of(sp.index(1, 0));
        assert!((e_blue - 3.1).abs() < 0.01);
    }

    #[test]
    fn coherent_state_has_requested_photons() {
        let rho = DensityMatrix::thermal_with_coherent(12, 0.0, 2.0).unwrap();
        assert_relative_eq!(rho.photon_number().unwrap(), 2.0, max_relative = 1e-3);
        assert!(rho.top_fock_population().unwrap() < 1e-4);
    }
}

//! C ABI over the `fluxparity` simulator.
//!
//! All frequencies are angular (rad/s). Every function returns an
//! [`FpStatus`]; on failure the message is available from
//! [`fp_last_error_message`] on the same thread. Handles are opaque and must
//! be released with their matching `*_free` function.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access the function
//! performs: handles must come from this library and not be freed yet,
//! input arrays must hold the stated number of elements, and output
//! pointers must be writable. Null pointers are reported, not dereferenced.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fluxparity::analysis::{self, DriveKind, PhaseSweepParams, SpectrumParams, SweepGrid, Verdict};
use fluxparity::dynamics::{
    max_step, qubit_drive_hamiltonian, steady_state_pe, DecoherenceParams, DensityMatrix,
    PropagationConfig,
};
use fluxparity::model::{
    bloch_angle, qubit_frequency, CouplingParams, DriveSpec, QubitParams, ResonatorParams,
};
use fluxparity::operators::HilbertSpace;
use fluxparity::rwa::{self, Process};
use fluxparity::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DimensionMismatch = 3,
    Domain = 4,
    Invariant = 5,
    NotConverged = 6,
    FockTruncation = 7,
    Io = 8,
    Panic = 9,
}

/// Transition processes, in the order used by the selection-rule table.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FpProcess {
    OnePhoton = 0,
    TwoPhoton = 1,
    RedSideband = 2,
    BlueSideband = 3,
    BlueTwoPhoton = 4,
}

fn process_from_code(code: u32) -> Result<Process, Failure> {
    Process::ALL.get(code as usize).copied().ok_or_else(|| {
        Failure::Model(Error::InvalidParameter {
            name: "process",
            reason: format!("unknown process code {code}"),
        })
    })
}

impl From<Process> for FpProcess {
    fn from(p: Process) -> Self {
        match p {
            Process::OnePhoton => FpProcess::OnePhoton,
            Process::TwoPhoton => FpProcess::TwoPhoton,
            Process::RedSideband => FpProcess::RedSideband,
            Process::BlueSideband => FpProcess::BlueSideband,
            Process::BlueTwoPhoton => FpProcess::BlueTwoPhoton,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FpDriveKind {
    Transversal = 0,
    Longitudinal = 1,
}

/// One row of a selection-rule table.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpRuleRow {
    pub process: FpProcess,
    pub drive: FpDriveKind,
    pub forbidden: bool,
    pub confirmed: bool,
    pub relative_amplitude: f64,
}

/// Qubit, resonator, coupling and decoherence parameters.
pub struct FpSystem {
    qubit: QubitParams,
    resonator: ResonatorParams,
    coupling: CouplingParams,
    decoherence: DecoherenceParams,
}

/// Result grid with `values[ix * ny + iy]`.
pub struct FpGrid {
    grid: SweepGrid,
}

pub struct FpRuleTable {
    rows: Vec<FpRuleRow>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FpStatus {
    match e {
        Error::InvalidParameter { .. } | Error::Config { .. } => FpStatus::InvalidParameter,
        Error::DimensionMismatch { .. } => FpStatus::DimensionMismatch,
        Error::BesselDomain(_) => FpStatus::Domain,
        Error::Invariant { .. } | Error::StepTooLarge { .. } => FpStatus::Invariant,
        Error::NotConverged { .. } => FpStatus::NotConverged,
        Error::FockTruncation { .. } => FpStatus::FockTruncation,
        Error::Io(_) => FpStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Model(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FpStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            FpStatus::NullPointer
        }
        Ok(Err(Failure::Model(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_error(&format!("panic: {msg}"));
            FpStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees that a non-null pointer is valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn in_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees that a non-null pointer refers to a live value.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn in_slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a system handle. Rates are angular; `gamma1 = 1/T1`, `gamma2 = 1/T2`.
#[no_mangle]
pub unsafe extern "C" fn fp_system_new(
    gap: f64,
    bias: f64,
    resonator_frequency: f64,
    kappa_ext: f64,
    kappa_int: f64,
    n_max: usize,
    g_transverse: f64,
    g_longitudinal: f64,
    gamma1: f64,
    gamma2: f64,
    out: *mut *mut FpSystem,
) -> FpStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let system = FpSystem {
            qubit: QubitParams::new(gap, bias)?,
            resonator: ResonatorParams::new(resonator_frequency, kappa_ext, kappa_int, n_max)?,
            coupling: CouplingParams::new(g_transverse, g_longitudinal)?,
            decoherence: DecoherenceParams::new(gamma1, gamma2)?,
        };
        *slot = Box::into_raw(Box::new(system));
        Ok(())
    })
}

/// Releases a system handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fp_system_free(system: *mut FpSystem) {
    if !system.is_null() {
        // SAFETY: the pointer came from `fp_system_new` and is freed once.
        drop(unsafe { Box::from_raw(system) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn fp_system_qubit_frequency(
    system: *const FpSystem,
    out: *mut f64,
) -> FpStatus {
    guard(|| {
        let s = in_ref(system, "system")?;
        *out_ref(out, "out")? = qubit_frequency(&s.qubit);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_system_bloch_angle(system: *const FpSystem, out: *mut f64) -> FpStatus {
    guard(|| {
        let s = in_ref(system, "system")?;
        *out_ref(out, "out")? = bloch_angle(&s.qubit);
        Ok(())
    })
}

/// Bessel function `J_k(x)` for `k <= 3`, `|x| <= 12`.
#[no_mangle]
pub unsafe extern "C" fn fp_bessel_j(k: u32, x: f64, out: *mut f64) -> FpStatus {
    guard(|| {
        *out_ref(out, "out")? = rwa::bessel_j(k, x)?;
        Ok(())
    })
}

/// One-photon transition amplitude at Bloch angle `theta` and drive `omega`.
#[no_mangle]
pub unsafe extern "C" fn fp_one_photon_amplitude(
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    omega: f64,
    out: *mut f64,
) -> FpStatus {
    guard(|| {
        *out_ref(out, "out")? =
            rwa::one_photon_amplitude(longitudinal, transversal, theta, omega)?.value;
        Ok(())
    })
}

/// Two-photon transition amplitude at drive `omega ≈ ω_q/2`.
#[no_mangle]
pub unsafe extern "C" fn fp_two_photon_amplitude(
    longitudinal: f64,
    transversal: f64,
    theta: f64,
    omega: f64,
    out: *mut f64,
) -> FpStatus {
    guard(|| {
        *out_ref(out, "out")? =
            rwa::two_photon_amplitude(longitudinal, transversal, theta, omega)?.value;
        Ok(())
    })
}

/// Thermal stray-excitation probability at qubit frequency `omega_q` (rad/s).
#[no_mangle]
pub unsafe extern "C" fn fp_stray_excitation(
    omega_q: f64,
    temperature: f64,
    out: *mut f64,
) -> FpStatus {
    guard(|| {
        *out_ref(out, "out")? = analysis::stray_excitation(omega_q, temperature)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_critical_photon_number(
    g_transverse: f64,
    detuning: f64,
    out: *mut f64,
) -> FpStatus {
    guard(|| {
        *out_ref(out, "out")? = analysis::critical_photon_number(g_transverse, detuning)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_power_broadening(
    drive_photons: f64,
    gamma1: f64,
    gamma2: f64,
    g: f64,
    out: *mut f64,
) -> FpStatus {
    guard(|| {
        let dec = DecoherenceParams::new(gamma1, gamma2)?;
        *out_ref(out, "out")? = analysis::power_broadening(drive_photons, &dec, g)?;
        Ok(())
    })
}

/// Steady-state excited population of the driven qubit, from propagation.
#[no_mangle]
pub unsafe extern "C" fn fp_steady_state_pe(
    system: *const FpSystem,
    longitudinal: f64,
    transversal: f64,
    omega: f64,
    t_final: f64,
    out: *mut f64,
) -> FpStatus {
    guard(|| {
        let s = in_ref(system, "system")?;
        let out = out_ref(out, "out")?;
        let theta = bloch_angle(&s.qubit);
        let h = qubit_drive_hamiltonian(
            qubit_frequency(&s.qubit),
            longitudinal,
            transversal,
            theta,
            omega,
        )?;
        let cfg = PropagationConfig::new(max_step(&h), t_final)?;
        let rho0 = DensityMatrix::ground(HilbertSpace::qubit());
        *out = steady_state_pe(&h, &s.decoherence, &rho0, &cfg)?.excited_population;
        Ok(())
    })
}

/// Analytic resonant phase sweep at the degeneracy point of `system`.
#[no_mangle]
pub unsafe extern "C" fn fp_phase_sweep(
    system: *const FpSystem,
    max_amplitude: f64,
    temperature: f64,
    phases: *const f64,
    n_phases: usize,
    out: *mut *mut FpGrid,
) -> FpStatus {
    guard(|| {
        let s = in_ref(system, "system")?;
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let phases = in_slice(phases, n_phases, "phases")?;
        let params = PhaseSweepParams {
            gap: s.qubit.gap,
            drive: DriveSpec::new(s.qubit.gap, 0.0, max_amplitude)?.with_temperature(temperature),
            decoherence: s.decoherence,
        };
        let grid = analysis::phase_sweep(&params, phases, analysis::Engine::Analytic, None)?;
        *slot = Box::into_raw(Box::new(FpGrid { grid }));
        Ok(())
    })
}

/// Normalized analytic spectrum map over `thetas` × `omegas`; `process`
/// takes an `FpProcess` value.
#[no_mangle]
pub unsafe extern "C" fn fp_spectrum_map(
    system: *const FpSystem,
    process: u32,
    longitudinal: f64,
    transversal: f64,
    gamma_phi: f64,
    thetas: *const f64,
    n_thetas: usize,
    omegas: *const f64,
    n_omegas: usize,
    out: *mut *mut FpGrid,
) -> FpStatus {
    guard(|| {
        let s = in_ref(system, "system")?;
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let p = SpectrumParams {
            gap: s.qubit.gap,
            resonator_frequency: s.resonator.frequency,
            g_t: s.coupling.transverse,
            longitudinal,
            transversal,
            gamma2: s.decoherence.gamma2,
            gamma_phi,
            linewidth_prefactor: 1.0,
            n_max: s.resonator.n_max,
        };
        let thetas = in_slice(thetas, n_thetas, "thetas")?;
        let omegas = in_slice(omegas, n_omegas, "omegas")?;
        let grid = analysis::spectrum_map(process_from_code(process)?, &p, thetas, omegas)?;
        *slot = Box::into_raw(Box::new(FpGrid { grid }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_grid_dims(
    grid: *const FpGrid,
    nx: *mut usize,
    ny: *mut usize,
) -> FpStatus {
    guard(|| {
        let g = &in_ref(grid, "grid")?.grid;
        *out_ref(nx, "nx")? = g.x_values.len();
        *out_ref(ny, "ny")? = g.y_values.len();
        Ok(())
    })
}

/// Copies the `nx * ny` grid values into `buffer`, which must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn fp_grid_values(
    grid: *const FpGrid,
    buffer: *mut f64,
    len: usize,
) -> FpStatus {
    guard(|| {
        let g = &in_ref(grid, "grid")?.grid;
        if len != g.values.len() {
            return Err(Error::DimensionMismatch {
                expected: g.values.len(),
                found: len,
            }
            .into());
        }
        if buffer.is_null() {
            return Err(Failure::Null("buffer"));
        }
        // SAFETY: `buffer` is non-null and holds `len` writable entries.
        unsafe { ptr::copy_nonoverlapping(g.values.as_ptr(), buffer, len) };
        Ok(())
    })
}

/// Renders the grid as CSV; release the string with [`fp_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fp_grid_to_csv(grid: *const FpGrid, out: *mut *mut c_char) -> FpStatus {
    guard(|| {
        let g = &in_ref(grid, "grid")?.grid;
        let slot = out_ref(out, "out")?;
        *slot = CString::new(g.to_csv()).expect("CSV has no NUL").into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_grid_free(grid: *mut FpGrid) {
    if !grid.is_null() {
        // SAFETY: the pointer came from this library and is freed once.
        drop(unsafe { Box::from_raw(grid) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn fp_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the pointer came from `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Builds the selection-rule table with Fock cutoff `n_max >= 2`.
#[no_mangle]
pub unsafe extern "C" fn fp_rule_table_new(n_max: usize, out: *mut *mut FpRuleTable) -> FpStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let table = analysis::selection_rule_table(n_max)?;
        let rows = table
            .rows
            .iter()
            .map(|r| FpRuleRow {
                process: r.process.into(),
                drive: match r.drive {
                    DriveKind::Transversal => FpDriveKind::Transversal,
                    DriveKind::Longitudinal => FpDriveKind::Longitudinal,
                },
                forbidden: r.verdict == Verdict::Forbidden,
                confirmed: r.confirmed,
                relative_amplitude: r.relative_amplitude,
            })
            .collect();
        *slot = Box::into_raw(Box::new(FpRuleTable { rows }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_rule_table_len(table: *const FpRuleTable, out: *mut usize) -> FpStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(table, "table")?.rows.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_rule_table_row(
    table: *const FpRuleTable,
    index: usize,
    out: *mut FpRuleRow,
) -> FpStatus {
    guard(|| {
        let t = in_ref(table, "table")?;
        let row = t.rows.get(index).ok_or(Error::DimensionMismatch {
            expected: t.rows.len(),
            found: index,
        })?;
        *out_ref(out, "out")? = *row;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fp_rule_table_free(table: *mut FpRuleTable) {
    if !table.is_null() {
        // SAFETY: the pointer came from `fp_rule_table_new` and is freed once.
        drop(unsafe { Box::from_raw(table) });
    }
}

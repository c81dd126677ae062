//! Command-line front end: config ingestion, sweep dispatch and emission.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    ac_stark_and_photons, critical_photon_number, fit_lorentzian, linspace, oracle_map,
    overlay_map, phase_sweep, power_broadening, resonator_transmission, selection_rule_table,
    stray_excitation, Engine, OracleContext, OracleModel, QubitState, StarkQuantity, SweepGrid,
};
use crate::config::{config_error, AxisName, AxisSpec, OutputFormat, RunConfig};
use crate::dynamics::{max_step, qubit_drive_hamiltonian, DecoherenceParams};
use crate::error::{Error, Result};
use crate::model::qubit_frequency;
use crate::rwa::Process;
use crate::validation;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "FLUXPARITY_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "fluxparity",
    version,
    about = "Parity-engineered flux qubit and resonator simulator"
)]
pub struct Cli {
    /// JSON run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config value by dotted path, e.g. `system.qubit.gap_hz=8e9`.
    #[arg(long = "set", value_name = "PATH=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, short = 'o', global = true)]
    pub output_dir: Option<PathBuf>,
    /// Output format (overrides `output.format`).
    #[arg(long, global = true)]
    pub format: Option<FormatArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectroscopy map of one process over Bloch angle and drive frequency.
    Spectrum,
    /// Resonant excited population against the relative antenna phase.
    PhaseSweep,
    /// Sideband and two-photon overlay map.
    Sidebands,
    /// Selection-rule table at the degeneracy point.
    Rules,
    /// Linewidth, thermal, Stark and readout calibrations.
    Calibrate,
    /// Runs the acceptance checks and reports pass/fail per criterion.
    Validate,
    /// Prints the resolved configuration.
    Config,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::PhaseSweep => "phase-sweep",
            Command::Sidebands => "sidebands",
            Command::Rules => "rules",
            Command::Calibrate => "calibrate",
            Command::Validate => "validate",
            Command::Config => "config",
        }
    }
}

/// Runs the CLI and returns the process exit status.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = config_error("", e.to_string().trim().to_owned());
            report(&err, stderr);
            return 1;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            report(&e, stderr);
            e.exit_code()
        }
    }
}

fn report(e: &Error, stderr: &mut dyn Write) {
    let mut payload = json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::Config { path, .. } = e {
        payload["path"] = json!(path);
    }
    let _ = writeln!(stderr, "{payload}");
}

/// Reads the worker count from the environment; `None` leaves rayon's default.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(config_error(WORKERS_ENV, "must be a positive integer")),
        },
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut overrides = cli.overrides.clone();
    if let Some(dir) = &cli.output_dir {
        overrides.push(format!(
            "output.dir={}",
            serde_json::to_string(dir).expect("path serializes")
        ));
    }
    if let Some(f) = cli.format {
        let name = match f {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        };
        overrides.push(format!("output.format={name}"));
    }
    match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_error("", format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text, &overrides)
        }
        None => RunConfig::defaults_with(&overrides),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(cli)?;
    let workers = workers_from_env()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| config_error(WORKERS_ENV, e.to_string()))?;
    let mut buffer = Vec::new();
    let result = pool.install(|| dispatch(&cli.command, &cfg, &mut buffer));
    stdout.write_all(&buffer)?;
    result
}

fn dispatch(command: &Command, cfg: &RunConfig, stdout: &mut Vec<u8>) -> Result<i32> {
    let name = command.name();
    match command {
        Command::Config => {
            let text = serde_json::to_string_pretty(cfg).expect("config serializes");
            writeln!(stdout, "{text}")?;
            Ok(0)
        }
        Command::Spectrum => {
            let grid = spectrum(cfg, false)?;
            emit_grid(cfg, name, grid, stdout)
        }
        Command::Sidebands => {
            let grid = spectrum(cfg, true)?;
            emit_grid(cfg, name, grid, stdout)
        }
        Command::PhaseSweep => {
            let r = cfg.resolve()?;
            let params = r.phase_sweep_params();
            let axis = cfg.axis(
                AxisName::PhiRad,
                AxisSpec::new(AxisName::PhiRad, 0.0, std::f64::consts::TAU, 64),
            );
            let prop = match cfg.engine {
                Engine::Analytic => None,
                Engine::Oracle => {
                    // Step bound for the strongest split of the drive.
                    let omax = params.drive.max_amplitude;
                    let h = qubit_drive_hamiltonian(
                        params.gap,
                        omax,
                        omax,
                        std::f64::consts::FRAC_PI_2,
                        params.drive.frequency,
                    )?;
                    Some(r.propagation_config(max_step(&h))?)
                }
            };
            let grid = phase_sweep(&params, &axis.values(), cfg.engine, prop.as_ref())?;
            emit_grid(cfg, name, grid, stdout)
        }
        Command::Rules => {
            let n_max = cfg.system.resonator.n_max.max(2);
            let table = selection_rule_table(n_max)?;
            let text = table.to_text();
            write!(stdout, "{text}")?;
            let body = match cfg.output.format {
                OutputFormat::Csv => text,
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&table).expect("table serializes") + "\n"
                }
            };
            let ext = match cfg.output.format {
                OutputFormat::Csv => "txt",
                OutputFormat::Json => "json",
            };
            write_outputs(cfg, name, &body, ext, stdout)?;
            Ok(0)
        }
        Command::Calibrate => {
            let rows = calibrate(cfg)?;
            for (q, v, unit) in &rows {
                writeln!(stdout, "{q} = {v:.6e} {unit}")?;
            }
            let body = match cfg.output.format {
                OutputFormat::Csv => {
                    let mut s = String::from("quantity,value,unit\n");
                    for (q, v, unit) in &rows {
                        s.push_str(&format!("{q},{},{unit}\n", crate::analysis::fmt_f64(*v)));
                    }
                    s
                }
                OutputFormat::Json => {
                    let map: serde_json::Map<String, serde_json::Value> = rows
                        .iter()
                        .map(|(q, v, unit)| (q.to_string(), json!({ "value": v, "unit": unit })))
                        .collect();
                    serde_json::to_string_pretty(&map).expect("map serializes") + "\n"
                }
            };
            write_outputs(cfg, name, &body, ext_of(cfg), stdout)?;
            Ok(0)
        }
        Command::Validate => {
            let outcomes = validation::run_all();
            for o in &outcomes {
                writeln!(stdout, "{}", o.line())?;
            }
            let body = match cfg.output.format {
                OutputFormat::Csv => {
                    let mut s = String::from("id,title,passed,detail\n");
                    for o in &outcomes {
                        s.push_str(&format!(
                            "{},{},{},\"{}\"\n",
                            o.id,
                            o.title,
                            o.passed,
                            o.detail.replace('"', "'")
                        ));
                    }
                    s
                }
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&outcomes).expect("outcomes serialize") + "\n"
                }
            };
            write_outputs(cfg, name, &body, ext_of(cfg), stdout)?;
            Ok(if outcomes.iter().all(|o| o.passed) {
                0
            } else {
                2
            })
        }
    }
}

fn ext_of(cfg: &RunConfig) -> &'static str {
    match cfg.output.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

fn spectrum(cfg: &RunConfig, sidebands: bool) -> Result<SweepGrid> {
    let r = cfg.resolve()?;
    let p = r.spectrum_params(&cfg.spectrum);
    let theta = cfg.axis(
        AxisName::ThetaPi,
        AxisSpec::new(AxisName::ThetaPi, 0.05, 0.95, 91),
    );
    let default_freq = if sidebands {
        AxisSpec::new(AxisName::FrequencyHz, 2e9, 15e9, 261)
    } else {
        AxisSpec::new(AxisName::FrequencyHz, 3e9, 20e9, 341)
    };
    let freq = cfg.axis(AxisName::FrequencyHz, default_freq);
    let thetas: Vec<f64> = theta
        .values()
        .iter()
        .map(|t| t * std::f64::consts::PI)
        .collect();
    let omegas: Vec<f64> = freq
        .values()
        .iter()
        .map(|f| f * std::f64::consts::TAU)
        .collect();
    let m = cfg.spectrum.multipliers;
    match cfg.engine {
        Engine::Analytic if sidebands => {
            let procs = [
                Process::RedSideband,
                Process::BlueSideband,
                Process::BlueTwoPhoton,
                Process::TwoPhoton,
            ]
            .map(|q| (q, m.for_process(q)));
            overlay_map(&procs, &p, &thetas, &omegas)
        }
        Engine::Analytic => {
            let proc = cfg.spectrum.process;
            overlay_map(&[(proc, m.for_process(proc))], &p, &thetas, &omegas)
        }
        Engine::Oracle => {
            let prop = r.propagation.as_ref().ok_or_else(|| {
                config_error("propagation", "engine=oracle requires a propagation block")
            })?;
            let (model, scale) = if sidebands {
                (OracleModel::QubitResonator, m.sideband)
            } else {
                match cfg.spectrum.process {
                    Process::OnePhoton | Process::TwoPhoton => {
                        (OracleModel::Qubit, m.for_process(cfg.spectrum.process))
                    }
                    other => (OracleModel::QubitResonator, m.for_process(other)),
                }
            };
            let amps = crate::model::drive_amplitudes(&r.drive, qubit_frequency(&r.qubit));
            let ctx = OracleContext {
                model,
                resonator: r.resonator,
                coupling: r.coupling,
                decoherence: r
                    .decoherence
                    .with_thermal_population(amps.stray_probability)?,
                drive_scale: scale,
                readout_photons: cfg.spectrum.readout_photons,
                t_final: prop.t_final_s,
                dt: prop.dt_s,
                steady_window: prop.steady_window,
            };
            oracle_map(&p, &ctx, &thetas, &omegas)
        }
    }
}

fn calibrate(cfg: &RunConfig) -> Result<Vec<(&'static str, f64, &'static str)>> {
    let r = cfg.resolve()?;
    let c = &cfg.calibrate;
    let wq = qubit_frequency(&r.qubit);
    let delta = wq - r.resonator.frequency;
    let lw = DecoherenceParams::new(c.gamma1_hz, c.gamma2_hz)?;
    let gamma_q = power_broadening(c.drive_photons, &lw, c.coupling_hz)?;
    let stray = stray_excitation(wq, cfg.drive.effective_temperature_k)?;
    // Evaluated in Hz so that the ratio is free of 2π round-off.
    let s = &cfg.system;
    let delta_hz = s.qubit.gap_hz.hypot(s.qubit.bias_hz) - s.resonator.frequency_hz;
    let n_crit = critical_photon_number(s.coupling.transverse_hz, delta_hz)?;
    let StarkQuantity::Shift(stark) = ac_stark_and_photons(
        r.coupling.transverse,
        delta,
        StarkQuantity::Photons(c.readout_photons),
    )?
    else {
        unreachable!("photons map to a shift")
    };
    let span = 8.0 * r.resonator.kappa_total();
    let probe = linspace(
        r.resonator.frequency - span,
        r.resonator.frequency + span,
        c.probe_points.max(3),
    );
    let ground = resonator_transmission(
        &r.resonator,
        QubitState::Ground,
        r.coupling.transverse,
        delta,
        &probe,
    )?;
    let excited = resonator_transmission(
        &r.resonator,
        QubitState::Excited,
        r.coupling.transverse,
        delta,
        &probe,
    )?;
    let fit = fit_lorentzian(&probe, &ground.values)?;
    let tau = std::f64::consts::TAU;
    Ok(vec![
        ("power_broadened_linewidth", gamma_q, "Hz"),
        ("stray_excitation", stray, "1"),
        ("critical_photon_number", n_crit, "1"),
        ("ac_stark_shift", stark / tau, "Hz"),
        (
            "dispersive_pull",
            (excited.center - ground.center) / tau,
            "Hz",
        ),
        ("dispersive_ratio", ground.dispersive_ratio, "1"),
        ("fitted_resonator_width", fit.width / tau, "Hz"),
        ("fitted_resonator_peak", fit.peak, "1"),
    ])
}

fn emit_grid(cfg: &RunConfig, name: &str, grid: SweepGrid, stdout: &mut dyn Write) -> Result<i32> {
    let grid = grid.with_metadata(json!({ "command": name, "engine": cfg.engine }));
    let body = match cfg.output.format {
        OutputFormat::Csv => grid.to_csv(),
        OutputFormat::Json => grid.to_json() + "\n",
    };
    write_outputs(cfg, name, &body, ext_of(cfg), stdout)?;
    Ok(0)
}

/// Writes `<dir>/<name>.<ext>` and `<dir>/<name>.meta.json` echoing the
/// resolved configuration.
fn write_outputs(
    cfg: &RunConfig,
    name: &str,
    body: &str,
    ext: &str,
    stdout: &mut dyn Write,
) -> Result<()> {
    let dir: &Path = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let data = dir.join(format!("{name}.{ext}"));
    let meta = dir.join(format!("{name}.meta.json"));
    fs::write(&data, body)?;
    let metadata = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "output": data.file_name().map(|f| f.to_string_lossy().into_owned()),
        "config": cfg,
    });
    fs::write(
        &meta,
        serde_json::to_string_pretty(&metadata).expect("metadata serializes") + "\n",
    )?;
    writeln!(stdout, "wrote {}", data.display())?;
    writeln!(stdout, "wrote {}", meta.display())?;
    Ok(())
}

use std::path::Path;
use std::process::{Command, Output};

fn fluxparity(dir: &Path, args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fluxparity"));
    cmd.current_dir(dir)
        .args(args)
        .env_remove("FLUXPARITY_WORKERS");
    if let Some(w) = workers {
        cmd.env("FLUXPARITY_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("error payload is JSON")
}

fn csv_values(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn rules_with_defaults_marks_red_sideband_forbidden_under_transversal_drive() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(dir.path(), &["rules"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("red sideband") && l.contains("transversal"))
        .unwrap();
    assert!(row.contains("forbidden"));
    assert!(dir.path().join("fluxparity-out/rules.txt").exists());
    assert!(dir.path().join("fluxparity-out/rules.meta.json").exists());
}

#[test]
fn rules_json_lists_ten_confirmed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(dir.path(), &["rules", "--format", "json"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("fluxparity-out/rules.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r["confirmed"] == true));
}

#[test]
fn cold_phase_sweep_spans_zero_to_saturation() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(
        dir.path(),
        &["phase-sweep", "--set", "drive.effective_temperature_k=0"],
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let values = csv_values(&dir.path().join("fluxparity-out/phase-sweep.csv"));
    assert_eq!(values.len(), 64);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(min < 1e-3 && max > 0.45, "{min} {max}");
}

#[test]
fn missing_gap_exits_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"system": {"qubit": {"bias_hz": 0.0}}}"#).unwrap();
    let out = fluxparity(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "spectrum"],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "config");
    assert_eq!(err["path"], "system.qubit.gap_hz");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(
        dir.path(),
        &["rules", "--set", "system.qubit.gapp_hz=1"],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["path"]
        .as_str()
        .unwrap()
        .starts_with("system.qubit"));
}

#[test]
fn degenerate_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(
        dir.path(),
        &[
            "phase-sweep",
            "--set",
            r#"sweep=[{"name":"phi_rad","start":1,"stop":1,"points":4}]"#,
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_is_identical_across_worker_counts() {
    for cmd in ["spectrum", "sidebands", "phase-sweep"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(
            fluxparity(a.path(), &[cmd], Some("1")).status.code(),
            Some(0)
        );
        assert_eq!(
            fluxparity(b.path(), &[cmd], Some("3")).status.code(),
            Some(0)
        );
        for file in [format!("{cmd}.csv"), format!("{cmd}.meta.json")] {
            let x = std::fs::read(a.path().join("fluxparity-out").join(&file)).unwrap();
            let y = std::fs::read(b.path().join("fluxparity-out").join(&file)).unwrap();
            assert!(x == y, "{file} differs");
        }
    }
}

#[test]
fn invalid_worker_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(dir.path(), &["rules"], Some("zero"));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["path"], "FLUXPARITY_WORKERS");
}

#[test]
fn oracle_phase_sweep_matches_analytic_values() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#"sweep=[{"name":"phi_rad","start":0,"stop":3.141592653589793,"points":3}]"#;
    let analytic = fluxparity(
        dir.path(),
        &["phase-sweep", "--set", sweep, "-o", "a"],
        None,
    );
    assert_eq!(analytic.status.code(), Some(0));
    let oracle = fluxparity(
        dir.path(),
        &[
            "phase-sweep",
            "--set",
            sweep,
            "--set",
            "engine=oracle",
            "--set",
            "propagation.t_final_s=3e-6",
            "-o",
            "b",
        ],
        None,
    );
    assert_eq!(
        oracle.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&oracle.stderr)
    );
    let x = csv_values(&dir.path().join("a/phase-sweep.csv"));
    let y = csv_values(&dir.path().join("b/phase-sweep.csv"));
    for (p, q) in x.iter().zip(&y) {
        assert!((p - q).abs() < 0.01, "{p} {q}");
    }
}

#[test]
fn short_oracle_run_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(
        dir.path(),
        &[
            "phase-sweep",
            "--set",
            r#"sweep=[{"name":"phi_rad","start":3.0,"stop":3.2,"points":2}]"#,
            "--set",
            "engine=oracle",
            "--set",
            "propagation.t_final_s=2e-7",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["kind"], "not_converged");
}

#[test]
fn oversized_step_is_an_invariant_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(
        dir.path(),
        &[
            "phase-sweep",
            "--set",
            r#"sweep=[{"name":"phi_rad","start":0,"stop":1,"points":2}]"#,
            "--set",
            "engine=oracle",
            "--set",
            "propagation.t_final_s=1e-6",
            "--set",
            "propagation.dt_s=1e-9",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "step_too_large");
}

#[test]
fn calibrate_reports_quoted_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(dir.path(), &["calibrate", "--format", "json"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("fluxparity-out/calibrate.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["critical_photon_number"]["value"], 2916.0);
    let width = v["fitted_resonator_width"]["value"].as_f64().unwrap();
    assert!((width / 2.5e6 - 1.0).abs() < 0.01);
}

#[test]
fn config_subcommand_echoes_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(
        dir.path(),
        &["config", "--set", "system.qubit.gap_hz=7e9"],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["system"]["qubit"]["gap_hz"], 7e9);
}

#[test]
fn json_grid_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(dir.path(), &["spectrum", "--format", "json"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("fluxparity-out/spectrum.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let nx = v["x_values"].as_array().unwrap().len();
    let ny = v["y_values"].as_array().unwrap().len();
    assert_eq!(v["values"].as_array().unwrap().len(), nx * ny);
    assert_eq!(v["metadata"]["command"], "spectrum");
}

#[test]
fn validate_passes_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxparity(dir.path(), &["validate"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

//! End-to-end checks of the command-line front end: artifact layout, the
//! summary pass flags, and the exit-status contract (0 pass, 1 check
//! failed, 2 config error, 3 numerical failure).

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cavity-sta"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cavity-sta-cli-{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn scan_epsilon_writes_artifacts_and_passes() {
    let dir = workdir("scan");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "run.experiment = scan-epsilon\n\
         scan.lo = 0.10\n\
         scan.hi = 0.13\n\
         scan.samples = 60\n",
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let csv = std::fs::read_to_string(out.join("scan-epsilon/fig4_scan.csv")).unwrap();
    assert!(csv.starts_with("epsilon,fidelity\n"));
    assert_eq!(csv.lines().count(), 61);

    let summary = read_json(&out.join("scan-epsilon/fig4_summary.json"));
    assert_eq!(summary["pass"], serde_json::Value::Bool(true));
    let peak = summary["first_peak_epsilon"].as_f64().unwrap();
    assert!((peak - 0.1152).abs() <= 0.002, "peak at {peak}");
}

#[test]
fn cesium_check_reports_threshold() {
    let out = workdir("cesium").join("out");
    let status = bin()
        .args(["cesium-check", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = read_json(&out.join("cesium-check/cesium_summary.json"));
    assert_eq!(summary["pass"], serde_json::Value::Bool(true));
    assert!(summary["fidelity"].as_f64().unwrap() >= 0.9885);
    assert_eq!(summary["threshold"].as_f64().unwrap(), 0.9885);
    assert!(out.join("cesium-check/cesium_trajectory.csv").exists());
}

#[test]
fn pulses_dump_writes_csv_only() {
    let out = workdir("dump").join("out");
    let status = bin()
        .args(["pulses", "dump", "--seedless", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let dir = out.join("pulses-dump");
    let entries: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(entries, vec!["pulses.csv"]);
    let csv = std::fs::read_to_string(dir.join("pulses.csv")).unwrap();
    assert!(csv.starts_with("t_us,omega1,g1,omega2,g2\n"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = workdir("badcfg");
    let config = dir.join("bad.cfg");
    std::fs::write(&config, "pulse.epsilon = 0.1\n").unwrap();
    let output = bin()
        .args(["--config"])
        .arg(&config)
        .arg("scan-epsilon")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("pulse.epsilon"), "stderr: {stderr}");

    // rejected physical value: epsilon = 0
    let config2 = dir.join("zero.cfg");
    std::fs::write(
        &config2,
        "run.experiment = scan-epsilon\npulses.epsilon = 0\n",
    )
    .unwrap();
    let output = bin().args(["--config"]).arg(&config2).output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    // no experiment anywhere
    let config3 = dir.join("none.cfg");
    std::fs::write(&config3, "scan.samples = 100\n").unwrap();
    let output = bin().args(["--config"]).arg(&config3).output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    // missing file
    let output = bin()
        .args(["--config", "/nonexistent.cfg", "scan-epsilon"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn failed_threshold_exits_with_code_one() {
    // strong photon leakage drags the sinusoidal transfer far below its
    // closed-system threshold; the run completes but the check fails
    let dir = workdir("fail");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "run.experiment = populations\n\
         pulses.family = sta_sinusoidal\n\
         decoherence.kappa = 3.5 MHz_2pi\n",
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let summary = read_json(&out.join("populations/fig6a_summary.json"));
    assert_eq!(summary["pass"], serde_json::Value::Bool(false));
    assert!(summary["final_fidelity"].as_f64().unwrap() < 0.9);
}

#[test]
fn numerical_failure_exits_with_code_three() {
    // a 0.1 us step on a 27 rad/us drive cannot hold the norm; the
    // propagator notices and the run aborts
    let dir = workdir("blowup");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "run.experiment = populations\n\
         integrator.method = fixed\n\
         integrator.step = 0.1 us\n\
         integrator.samples = 6\n",
    )
    .unwrap();
    let output = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("norm drift"), "stderr: {stderr}");
}

#[test]
fn verify_invariant_table_passes() {
    let out = workdir("invariant").join("out");
    let output = bin()
        .args(["verify-invariant", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("invariance_residual"), "stdout: {stdout}");
    let summary = read_json(&out.join("verify-invariant/invariant_summary.json"));
    assert_eq!(summary["pass"], serde_json::Value::Bool(true));
    assert!(summary["max_auxiliary_residual"].as_f64().unwrap() <= 1e-10);
    let csv =
        std::fs::read_to_string(out.join("verify-invariant/invariant_residuals.csv")).unwrap();
    assert!(csv.starts_with("t_us,invariance_residual,r_gamma,r_beta\n"));
}

#[test]
fn populations_family_selection() {
    let dir = workdir("pops");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "run.experiment = populations\npulses.family = stirap\n",
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = read_json(&out.join("populations/fig6c_summary.json"));
    assert_eq!(summary["pass"], serde_json::Value::Bool(true));
    assert!(summary["final_fidelity"].as_f64().unwrap() < 0.90);
    let csv = std::fs::read_to_string(out.join("populations/fig6c_populations.csv")).unwrap();
    assert!(csv.starts_with("t_us,P1,P2,P3,P4,P5,P_ss0,leakage,fidelity\n"));
    assert_eq!(csv.lines().count(), 502);
}

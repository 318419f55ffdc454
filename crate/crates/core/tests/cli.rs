use std::process::Command;

use decoherence::cli;
use decoherence::lindblad::read_sweep_csv;
use decoherence::DensityMatrix;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("decoherence").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn state_of(v: &Value) -> DensityMatrix {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn evolve_zero_time_returns_singlet() {
    let v = run_json(&["evolve", "--mode", "A", "--lambda", "1", "--time", "0", "--initial", "singlet"]);
    let rho = state_of(&v["state"]);
    assert!(rho.max_abs_diff(&decoherence::state::experiment_initial()) < 1e-15);
    assert_eq!(v["measures"]["concurrence"].as_f64().unwrap(), 1.0);
}

#[test]
fn evolve_separability_border() {
    let b = run_json(&["evolve", "--mode", "B", "--lambda", "1", "--time", "1.0986122886681098"]);
    assert!(b["measures"]["concurrence"].as_f64().unwrap().abs() <= 1e-6);
    let a = run_json(&["evolve", "--mode", "A", "--lambda", "1", "--time", "1.0986122886681098"]);
    assert!((a["measures"]["concurrence"].as_f64().unwrap() - 1.0 / 3.0).abs() <= 1e-6);
}

#[test]
fn sweep_mode_a_follows_closed_form() {
    let (code, out, _) = run(&["sweep", "--mode", "A", "--lambda", "1", "--time", "3.5", "--steps", "35"]);
    assert_eq!(code, 0);
    let rows = read_sweep_csv(&out).unwrap();
    assert_eq!(rows.len(), 36);
    for r in &rows {
        let expected = 0.5 * (1.0 + (-2.0 * r.lambda_t).exp());
        assert!((r.mixedness - expected).abs() <= 1e-10);
    }
}

#[test]
fn sweep_mode_b_asymptote_and_frozen_rows() {
    let (_, out, _) = run(&["sweep", "--mode", "B", "--lambda", "1", "--time", "30", "--steps", "10"]);
    let rows = read_sweep_csv(&out).unwrap();
    assert!((rows.last().unwrap().mixedness - 0.25).abs() <= 1e-10);
    let (_, out, _) = run(&["sweep", "--mode", "B", "--lambda", "0", "--time", "5", "--steps", "5"]);
    let rows = read_sweep_csv(&out).unwrap();
    assert!(rows.iter().all(|r| r.mixedness == rows[0].mixedness && r.concurrence == rows[0].concurrence));
}

#[test]
fn ensemble_outputs() {
    let zero = run_json(&["ensemble", "--mode", "A", "--sigma", "0", "--samples", "1000"]);
    assert_eq!(zero["max_deviation_over_stderr"].as_f64().unwrap(), 0.0);
    assert!(zero["estimate"]["stderr_re"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).all(|x| x == 0.0));

    let v = run_json(&["ensemble", "--mode", "A", "--sigma", "2", "--samples", "100000", "--seed", "42"]);
    assert!(v["max_deviation_over_stderr"].as_f64().unwrap() <= 5.0);

    let b = run_json(&["ensemble", "--mode", "B", "--sigma", "1", "--samples", "2000"]);
    let analytic = state_of(&b["analytic"]);
    let e = (-0.5f64).exp();
    assert!((analytic.get(1, 2).re + 0.5 * e).abs() < 1e-15);
    assert!((analytic.get(0, 0).re - 0.25 * (1.0 - e)).abs() < 1e-15);
}

#[test]
fn kraus_compare_reports() {
    let v = run_json(&["kraus-compare", "--mode", "A", "--lambda", "1", "--time", "1", "--steps", "1024"]);
    assert!(v["max_error"].as_f64().unwrap() <= 2e-3);
    assert!((v["order_estimate"].as_f64().unwrap() - 1.0).abs() <= 0.3);

    let b = run_json(&["kraus-compare", "--mode", "B", "--lambda", "1", "--time", "1", "--steps", "512"]);
    let ratio = b["max_error_half_steps"].as_f64().unwrap() / b["max_error"].as_f64().unwrap();
    assert!((1.7..=2.3).contains(&ratio), "{ratio}");

    let exact = run_json(&["kraus-compare", "--mode", "B", "--lambda", "0", "--time", "1", "--steps", "1"]);
    assert_eq!(exact["max_error"].as_f64().unwrap(), 0.0);
}

#[test]
fn tomography_modes() {
    let exact = run_json(&["tomography", "--initial", "bell2", "--shots", "0"]);
    assert!(exact["frobenius_error"].as_f64().unwrap() <= 1e-9);

    let noisy = run_json(&["tomography", "--shots", "10000", "--seed", "7"]);
    assert!(noisy["frobenius_error"].as_f64().unwrap() <= 0.1);

    let mixed = run_json(&["tomography", "--initial", "maximally-mixed", "--shots", "10000", "--seed", "1"]);
    for i in 0..4 {
        for j in 0..4 {
            if (i, j) != (0, 0) {
                let value = mixed["correlators"][i][j].as_f64().unwrap();
                let se = mixed["correlator_stderr"][i][j].as_f64().unwrap();
                assert!(value.abs() <= 5.0 * se);
            }
        }
    }
}

#[test]
fn tomography_counts_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.json");
    let counts = counts.to_str().unwrap();
    let first = run_json(&["tomography", "--shots", "500", "--seed", "3", "--counts-out", counts]);
    let second = run_json(&["tomography", "--counts-in", counts, "--shots", "500"]);
    assert_eq!(first["estimate"], second["estimate"]);
}

#[test]
fn calibrate_recovers_coefficient() {
    let v = run_json(&["calibrate", "--mode", "B", "--samples", "100000", "--seed", "5"]);
    let c = v["coefficient"].as_f64().unwrap();
    assert!((c - 0.5).abs() <= 0.01, "{c}");
    assert_eq!(v["points"].as_array().unwrap().len(), 4);
}

#[test]
fn file_initial_state_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    let first = run_json(&["evolve", "--mode", "B", "--lambda", "0.7", "--time", "0.4"]);
    std::fs::write(&state, first["state"].to_string()).unwrap();
    let out = dir.path().join("out.json");
    let initial = format!("file:{}", state.display());
    let (code, stdout, _) = run(&[
        "evolve", "--mode", "B", "--lambda", "0.7", "--time", "0.6", "--initial", &initial, "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let chained: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let direct = run_json(&["evolve", "--mode", "B", "--lambda", "0.7", "--time", "1.0"]);
    assert!(state_of(&chained["state"]).max_abs_diff(&state_of(&direct["state"])) <= 1e-12);
}

#[test]
fn deterministic_output() {
    let args = ["ensemble", "--mode", "B", "--sigma", "1.2", "--samples", "20000", "--seed", "11"];
    assert_eq!(run(&args).1, run(&args).1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["evolve", "--lambda", "1", "--time", "1"]).0, 2);
    assert_eq!(run(&["evolve", "--mode", "A", "--lambda", "-1", "--time", "1"]).0, 2);
    assert_eq!(run(&["evolve", "--mode", "A", "--lambda", "1", "--time", "-1"]).0, 2);
    assert_eq!(run(&["evolve", "--mode", "C", "--lambda", "1", "--time", "1"]).0, 2);
    assert_eq!(run(&["evolve", "--mode", "A", "--lambda", "1", "--time", "1", "--initial", "bell9"]).0, 2);
    assert_eq!(run(&["evolve", "--mode", "A", "--lambda", "1", "--time", "1", "--energies", "1,2"]).0, 2);
    assert_eq!(run(&["ensemble", "--mode", "B", "--sigma", "1", "--variant", "single_field_one_path"]).0, 2);
    assert_eq!(run(&["tomography", "--initial", "file:/nonexistent/state.json"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    let (code, _, err) = run(&["evolve", "--mode", "A", "--time", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("--lambda"));
}

#[test]
fn invalid_state_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("bad.json");
    std::fs::write(&state, r#"{"dim":4,"re":[[1,0,0,0],[0,1,0,0],[0,0,0,0],[0,0,0,0]],"im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#).unwrap();
    let initial = format!("file:{}", state.display());
    assert_eq!(run(&["evolve", "--mode", "A", "--lambda", "1", "--time", "1", "--initial", &initial]).0, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_decoherence");
    let ok = Command::new(bin).args(["evolve", "--mode", "A", "--lambda", "1", "--time", "0.5"]).output().unwrap();
    assert!(ok.status.success());
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(v["measures"]["mixedness"].as_f64().is_some());
    let bad = Command::new(bin).args(["evolve", "--mode", "A"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert!(help.status.success());
}

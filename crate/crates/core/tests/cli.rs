//! End-to-end checks of the `puosc` binary: worked examples, the exit-code
//! contract and byte-level determinism of the JSON reports.

use assert_cmd::Command;
use serde_json::Value;

fn puosc() -> Command {
    Command::cargo_bin("puosc").unwrap()
}

fn stdout_json(args: &[&str]) -> Value {
    let output = puosc().args(args).assert().success().get_output().clone();
    serde_json::from_slice(&output.stdout).expect("stdout should be JSON")
}

#[test]
fn structure_reports_two_param_weights() {
    let report = stdout_json(&["structure", "--freqs", "1,2", "--f", "0", "--g", "1"]);
    let solved = report["weights"]["solved"].as_array().unwrap();
    assert!((solved[0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert!((solved[1].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-10);
    assert_eq!(report["poisson_tensor"]["kind"], "two_parameter");
    assert!(report["weights"]["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn structure_defaults_to_power_sum_tensor() {
    let report = stdout_json(&["structure", "--freqs", "1,2"]);
    let pi = report["poisson_tensor"]["matrix"].as_array().unwrap();
    assert_eq!(pi[0][1], 6.0);
    assert_eq!(pi[0][3], -18.0);
    assert_eq!(pi[1][2], 18.0);
    assert_eq!(pi[2][3], 66.0);
    assert_eq!(report["weights"]["closed_form_matches"], false);
    let candidate = report["weights"]["closed_form_candidate"].as_array().unwrap();
    assert!((candidate[0].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
    assert!((candidate[1].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn structure_second_order() {
    let report = stdout_json(&["structure", "--freqs", "1"]);
    assert_eq!(report["poisson_tensor"]["matrix"][0][1], 2.0);
    let solved = report["weights"]["solved"].as_array().unwrap();
    assert!((solved[0].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn structure_rejects_degenerate_frequencies_with_exit_3() {
    puosc()
        .args(["structure", "--freqs", "1,1"])
        .assert()
        .failure()
        .code(3);
}

#[test]
fn structure_rejects_half_given_tensor_parameters() {
    puosc()
        .args(["structure", "--freqs", "1,2", "--f", "1"])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn invalid_frequency_input_exits_2() {
    puosc()
        .args(["structure", "--freqs", "1,zero"])
        .assert()
        .failure()
        .code(2);
    puosc()
        .args(["verify", "--freqs", "-1"])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let args = ["verify", "--freqs", "1,2", "--seed", "7"];
    let first = puosc().args(args).assert().success().get_output().clone();
    let second = puosc().args(args).assert().success().get_output().clone();
    assert_eq!(first.stdout, second.stdout);

    let report: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["failed"], 0);
    assert_eq!(report["skipped"], 0);
}

#[test]
fn verify_seed_env_var_matches_flag() {
    let via_flag = puosc()
        .args(["verify", "--freqs", "1,2", "--seed", "9"])
        .assert()
        .success()
        .get_output()
        .clone();
    let via_env = puosc()
        .args(["verify", "--freqs", "1,2"])
        .env("PU_SEED", "9")
        .assert()
        .success()
        .get_output()
        .clone();
    assert_eq!(via_flag.stdout, via_env.stdout);
}

#[test]
fn verify_degenerate_path_skips_simple_spectrum_checks() {
    let report = stdout_json(&["verify", "--freqs", "1,1"]);
    assert_eq!(report["failed"], 0);
    assert!(report["skipped"].as_u64().unwrap() > 0);
    let checks = report["checks"].as_array().unwrap();
    let status_of = |name: &str| {
        checks
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("missing check {name}"))["status"]
            .clone()
    };
    assert_eq!(status_of("secular_pair_commutes"), "pass");
    assert_eq!(status_of("secular_combination_drift_exact"), "pass");
    assert_eq!(status_of("integral_conservation"), "skipped");
}

#[test]
fn verify_unreachable_tolerance_exits_1() {
    puosc()
        .args(["verify", "--freqs", "1,2", "--tol", "1e-30"])
        .assert()
        .failure()
        .code(1);
}

#[test]
// 6.283 is the literal end time of the worked example (6283 steps of 1e-3),
// not an attempt at the circle constant.
#[allow(clippy::approx_constant)]
fn simulate_rk4_matches_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("traj.csv");
    let output = puosc()
        .args([
            "simulate",
            "--freqs",
            "1",
            "--x0",
            "1,0",
            "--dt",
            "0.001",
            "--steps",
            "6283",
            "--integrator",
            "rk4",
            "--out",
            csv_path.to_str().unwrap(),
        ])
        .assert()
        .success()
        .get_output()
        .clone();
    let summary: Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(summary["integrals"][0]["drift"].as_f64().unwrap() < 1e-8);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let last = csv.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    assert!((fields[0] - 6.283).abs() < 1e-12);
    assert!((fields[1] - 6.283f64.cos()).abs() < 1e-8);
}

#[test]
fn simulate_exact_keeps_integrals_flat() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("traj.csv");
    let output = puosc()
        .args([
            "simulate",
            "--freqs",
            "1,2",
            "--x0",
            "1,0,0,0",
            "--integrator",
            "exact",
            "--dt",
            "0.1",
            "--steps",
            "100",
            "--out",
            csv_path.to_str().unwrap(),
        ])
        .assert()
        .success()
        .get_output()
        .clone();
    let summary: Value = serde_json::from_slice(&output.stdout).unwrap();
    for entry in summary["integrals"].as_array().unwrap() {
        assert!(entry["drift"].as_f64().unwrap() < 1e-10);
    }
    // Header plus 101 samples.
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn simulate_zero_steps_emits_single_row() {
    let output = puosc()
        .args([
            "simulate", "--freqs", "1", "--x0", "1,0", "--dt", "0.1", "--steps", "0",
        ])
        .assert()
        .success()
        .get_output()
        .clone();
    let csv = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, vec!["t,x1,x2", "0,1,0"]);
}

#[test]
fn simulate_rejects_wrong_state_length() {
    puosc()
        .args(["simulate", "--freqs", "1,2", "--x0", "1,0", "--dt", "0.1"])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn spectrum_examples() {
    let report = stdout_json(&[
        "spectrum", "--freqs", "1,2", "--levels", "0,0", "--levels", "1,1", "--hbar", "1",
    ]);
    let levels = report["levels"].as_array().unwrap();
    assert_eq!(levels[0]["energy"], 1.5);
    assert_eq!(levels[1]["energy"], 4.5);
    assert_eq!(report["cross_check"]["consistent"], true);

    let triple = stdout_json(&["spectrum", "--freqs", "1,2,3", "--levels", "0,0,0"]);
    assert_eq!(triple["levels"][0]["energy"], 3.0);
}

#[test]
fn spectrum_redirects_degenerate_input_with_exit_3() {
    puosc()
        .args(["spectrum", "--freqs", "1,1", "--levels", "0,0"])
        .assert()
        .failure()
        .code(3);
}

#[test]
fn degenerate_examples() {
    let report = stdout_json(&["degenerate", "--omega", "1", "--hbar", "1"]);
    assert_eq!(report["f"], 2.0);
    assert_eq!(report["g"], -2.0);
    // [a2, a2+] = 0 while [a1, a1+] = 1.
    let c = report["commutators"]["c"].as_array().unwrap();
    assert!((c[0][0][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(c[1][1][0].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(report["classical_modes"][0], 2);

    let hbar2 = stdout_json(&["degenerate", "--omega", "1", "--hbar", "2"]);
    assert_eq!(hbar2["f"], 1.0);
    assert_eq!(hbar2["g"], -1.0);
}

#[test]
fn structure_report_is_byte_deterministic() {
    let args = ["structure", "--freqs", "1,2"];
    let first = puosc().args(args).assert().success().get_output().clone();
    let second = puosc().args(args).assert().success().get_output().clone();
    assert_eq!(first.stdout, second.stdout);
}

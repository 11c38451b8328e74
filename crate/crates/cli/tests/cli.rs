use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn khebb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khebb"))
        .args(args)
        .env_remove("KHEBB_OUT_DIR")
        .output()
        .expect("binary runs")
}

/// Runs with `--out dir` and returns parsed stdout.
fn run_ok(dir: &Path, args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--out", dir.to_str().unwrap()]);
    let out = khebb(&full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn analyze_reports_no_equilibria_in_rotating_region() {
    let tmp = TempDir::new().unwrap();
    let report = run_ok(tmp.path(), &["pair-analyze", "-m", "1", "-w", "3", "-a", "5"]);
    assert_eq!(report["equilibria"], "none");
    assert_eq!(report["divergence"], -2.0);
    let m = manifest(tmp.path());
    assert_eq!(m["command"], "pair-analyze");
    assert_eq!(m["outputs"], serde_json::json!(["analysis.json"]));
}

#[test]
fn analyze_lists_four_classified_equilibria() {
    let tmp = TempDir::new().unwrap();
    let report = run_ok(tmp.path(), &["pair-analyze", "-w", "3", "-a", "10"]);
    let eq = report["equilibria"].as_array().unwrap();
    assert_eq!(eq.len(), 4);
    let classes: Vec<&str> = eq.iter().map(|e| e["class"].as_str().unwrap()).collect();
    assert_eq!(classes.iter().filter(|c| c.starts_with("saddle")).count(), 2);
    for e in eq {
        let (phi, k) = (e["phi"].as_f64().unwrap(), e["k"].as_f64().unwrap());
        assert!((k - 10.0 * phi.cos()).abs() < 1e-12);
        assert_eq!(e["eigenvalues"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn analyze_flags_merged_pairs_on_saddle_node_line() {
    let tmp = TempDir::new().unwrap();
    let report = run_ok(tmp.path(), &["pair-analyze", "-w", "1", "-a", "2"]);
    assert_eq!(report["saddle_node"], true);
    for e in report["equilibria"].as_array().unwrap() {
        assert_eq!(e["degenerate"], true);
        assert_eq!(e["class"], "saddle-node-degenerate");
    }
}

#[test]
fn invalid_parameters_give_error_json_and_exit_two() {
    let out = khebb(&["pair-analyze", "-w", "3", "-a", "-1", "--out", "/nonexistent/never"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid-input");
    assert_eq!(err["command"], "pair-analyze");
    assert!(out.stdout.is_empty());
}

#[test]
fn zero_trajectories_still_write_a_manifest() {
    let tmp = TempDir::new().unwrap();
    run_ok(tmp.path(), &["pair-simulate", "-w", "3", "-a", "5", "-n", "0"]);
    assert_eq!(read(tmp.path(), "projection.csv"), "trajectory,gamma,k\n");
    assert_eq!(manifest(tmp.path())["outputs"], serde_json::json!(["projection.csv"]));
}

#[test]
fn trajectories_do_not_depend_on_thread_count() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["pair-simulate", "-w", "3", "-a", "10", "-n", "4", "--horizon", "20", "--seed", "7"];
    run_ok(a.path(), &[&args[..], &["--jobs", "1"]].concat());
    run_ok(b.path(), &[&args[..], &["--jobs", "3"]].concat());
    for i in 0..4 {
        let name = format!("traj_{i:04}.csv");
        let text = read(a.path(), &name);
        assert!(text.starts_with("t,phi,gamma,k\n"));
        assert_eq!(text.lines().count(), 1 + 401);
        assert_eq!(text, read(b.path(), &name));
    }
    assert_eq!(read(a.path(), "projection.csv"), read(b.path(), "projection.csv"));
}

#[test]
fn raster_has_one_row_per_cell() {
    let tmp = TempDir::new().unwrap();
    let report = run_ok(tmp.path(), &["gamma-raster", "-m", "1", "--grid", "40"]);
    assert!((report["bound"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let csv = read(tmp.path(), "gamma_raster.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "u,v,m,in_gamma1,in_gamma2,discriminant_p1p3,discriminant_p2p4");
    assert_eq!(lines.count(), 40 * 40);
}

#[test]
fn orbit_approx_reports_exact_zeta() {
    let tmp = TempDir::new().unwrap();
    let report = run_ok(tmp.path(), &["orbit-approx", "-w", "3", "-a", "5"]);
    assert_eq!(report["zeta"], 2.0);
    assert!((report["c"].as_f64().unwrap() - 3.0 / 17.0).abs() < 1e-12);
    assert!(report["relative_rms"].as_f64().unwrap() < 0.15);
    let overlay = read(tmp.path(), "overlay.csv");
    assert!(overlay.starts_with("phi,gamma_sim,k_sim,gamma_approx,k_approx\n"));
}

#[test]
fn orbit_approx_refuses_parameters_with_equilibria() {
    let out = khebb(&["orbit-approx", "-w", "3", "-a", "6", "--out", "/nonexistent/never"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["command"], "orbit-approx");
}

#[test]
fn sweep_flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sweep.toml");
    fs::write(&cfg, "grid = [6, 5]\nn_initial_conditions = 2\nhorizon = 40.0\nseed = 3\n").unwrap();
    let out = tmp.path().join("out");
    let report = run_ok(
        &out,
        &["region-sweep", "--config", cfg.to_str().unwrap(), "--seed", "9", "--skip-anchors"],
    );
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["horizon"], 40.0);
    assert_eq!(report["config"]["rule"], "max");
    assert!(report["anchors"].is_null());
    let s = &report["summary"];
    let total: u64 = ["omega1", "omega2", "omega3", "unclassified"].iter().map(|k| s[k].as_u64().unwrap()).sum();
    assert_eq!(total, 30);
    assert_eq!(read(&out, "sweep.csv").lines().count(), 31);
    assert_eq!(manifest(&out)["seed"], 9);
}

#[test]
fn sweep_rejects_unknown_config_keys() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "gird = [6, 5]\n").unwrap();
    let out = khebb(&["region-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixed_step_ensemble_replays_byte_identically() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    run_ok(
        &first,
        &["ensemble-run", "-N", "8", "--sigma2", "0.1", "--horizon", "5", "--seed", "11", "--q", "1", "--phases"],
    );
    let header = read(&first, "order_parameter.csv");
    assert!(header.starts_with("t,r2,r1\n"));
    assert_eq!(header.lines().count(), 1 + 51);
    assert!(read(&first, "phases.csv").starts_with("t,phi_0,"));

    let again = tmp.path().join("again");
    run_ok(&again, &["replay", first.join("manifest.json").to_str().unwrap()]);
    for f in ["order_parameter.csv", "final_state.csv", "coupling.csv", "phases.csv", "summary.json"] {
        assert_eq!(read(&first, f), read(&again, f), "{f}");
    }
    assert_eq!(manifest(&first)["config"], manifest(&again)["config"]);
    assert_eq!(manifest(&first)["config"]["stepping"], "fixed");
}

#[test]
fn heavy_ensembles_default_to_adaptive_steps() {
    let tmp = TempDir::new().unwrap();
    let report = run_ok(tmp.path(), &["ensemble-run", "-N", "4", "-m", "100", "--sigma2", "0.1", "--horizon", "2"]);
    assert_eq!(report["fixed_step"], false);
    assert_eq!(manifest(tmp.path())["config"]["stepping"], "adaptive");
}

#[test]
fn env_var_sets_default_output_base() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_khebb"))
        .args(["pair-analyze", "-w", "1", "-a", "4"])
        .env("KHEBB_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("pair-analyze").join("manifest.json").exists());
}

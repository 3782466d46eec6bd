use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{name}.json"))
}

fn nnm(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnm")).args(args).env("NNM_CACHE_DIR", cache).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn short_fig10(dir: &Path) -> PathBuf {
    let mut v = read_json(&preset("fig10"));
    v["name"] = "short".into();
    v["sim"]["t_end"] = 2.0.into();
    v["sim"]["dt"] = 1e-3.into();
    write_config(dir, "short", &v)
}

#[test]
fn linear_demo_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = nnm(tmp.path(), &["linear-demo", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(&tmp.path().join("linear_demo.summary.json"));
    assert!(s["settled"].as_bool().unwrap());
    assert!((s["final_amplitude_ratio"].as_f64().unwrap() - 2.0).abs() < 0.02);
    let mut rdr = csv::Reader::from_path(tmp.path().join("linear_demo.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "x1", "x2", "v1", "v2", "tau1", "tau2", "dist_to_eigenspace"]);
}

#[test]
fn linear_demo_emits_damper_gain() {
    let tmp = TempDir::new().unwrap();
    let out = nnm(tmp.path(), &["linear-demo", "--k1", "1.5", "--beta", "1.25", "--t-end", "1", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let g = &read_json(&tmp.path().join("linear_demo.summary.json"))["gain"];
    let expected = [[1.0, -0.5], [-0.5, 0.25]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((g[i][j].as_f64().unwrap() - expected[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn linear_demo_without_damping_does_not_settle() {
    let tmp = TempDir::new().unwrap();
    let out = nnm(tmp.path(), &["linear-demo", "--beta", "0", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let s = read_json(&tmp.path().join("linear_demo.summary.json"));
    assert_eq!(s["settled"], Value::Bool(false));
    assert!(s["settle_time_s"].is_null());
}

#[test]
fn fig3_preset_passes_its_checks() {
    let tmp = TempDir::new().unwrap();
    let cfg = preset("fig3");
    let out = nnm(tmp.path(), &["linear-demo", "--config", cfg.to_str().unwrap(), "--check", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(tmp.path().join("fig3.csv").exists());
}

#[test]
fn solve_manifold_reports_residual_and_reuses_cache() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("cache");
    let cfg = preset("fig10");
    let args = ["solve-manifold", "--config", cfg.to_str().unwrap(), "--check", "--out", tmp.path().to_str().unwrap()];
    let first = nnm(&cache, &args);
    assert_eq!(first.status.code(), Some(0));
    let text = String::from_utf8_lossy(&first.stdout);
    assert!(text.contains("solved in") && text.contains("max |residual|") && text.contains("a14"), "{text}");
    let report = read_json(&tmp.path().join("fig10.manifold-report.json"));
    assert!(report["residual_inf"].as_f64().unwrap() < 1e-10);
    assert!(report["closed_form"]["a3"]["newton"].is_f64());
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);

    let second = nnm(&cache, &args);
    assert!(String::from_utf8_lossy(&second.stdout).contains("reused cached manifold"));
    assert_eq!(read_json(&tmp.path().join("fig10.manifold.json")), report["coeffs"]);
}

#[test]
fn closed_form_degeneracy_is_reported_not_fatal() {
    let tmp = TempDir::new().unwrap();
    let mut v = read_json(&preset("fig10"));
    // kappa2 chosen so that 4 d1 + kappa2 = 0 at kappa1 = 20
    let (k1, g) = (20.0f64, 9.81f64);
    let f = |k2: f64| {
        let e = g / k2;
        4.0 * (g * (1.0 + e + e * e) - k1 * (1.0 + 2.0 * e + 3.0 * e * e)) + k2
    };
    let (mut lo, mut hi) = (30.0, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 { hi = mid } else { lo = mid }
    }
    v["model"]["kappa2"] = lo.into();
    let cfg = write_config(tmp.path(), "degenerate", &v);
    let out = nnm(tmp.path(), &["solve-manifold", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    let report = read_json(&tmp.path().join("fig10.manifold-report.json"));
    assert!(report["closed_form"]["error"].is_string(), "{report}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("cross-check unavailable"));
    if out.status.success() {
        assert!(tmp.path().join("fig10.manifold.json").exists());
    }
}

#[test]
fn simulate_writes_declared_columns_on_a_uniform_grid() {
    let tmp = TempDir::new().unwrap();
    let cfg = short_fig10(tmp.path());
    let out = nnm(tmp.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--compare-rigid", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("short.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["t", "theta", "theta_dot", "r", "r_dot", "X", "Xdot", "delta", "ddelta", "tau_theta", "tau_r", "E", "E_M"]
    );
    let t: Vec<f64> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(t.len(), 201);
    for w in t.windows(2) {
        assert!((w[1] - w[0] - 0.01).abs() < 1e-12);
    }
    let s = read_json(&tmp.path().join("short.summary.json"));
    for key in ["settle_time_s", "trailing_tau_inf", "E_M_final", "freq_theta_hz", "freq_r_hz", "max_ratio_soft_rigid"] {
        assert!(s.get(key).is_some(), "missing {key}: {s}");
    }
}

#[test]
fn failed_checks_exit_4() {
    let tmp = TempDir::new().unwrap();
    let mut v = read_json(&short_fig10(tmp.path()));
    v["checks"] = serde_json::json!({ "settle_time_max": 0.001 });
    let cfg = write_config(tmp.path(), "strict", &v);
    let out = nnm(tmp.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--check", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"model": {"type": "pendulum"}, "unknown": 1}"#).unwrap();
    let out = nnm(tmp.path(), &["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = nnm(tmp.path(), &["simulate", "--config", "/nonexistent/x.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let mut v = read_json(&preset("fig11"));
    v["controller"].as_object_mut().unwrap().remove("band");
    let cfg = write_config(tmp.path(), "noband", &v);
    assert_eq!(nnm(tmp.path(), &["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3_after_writing_outputs() {
    let tmp = TempDir::new().unwrap();
    let mut v = read_json(&short_fig10(tmp.path()));
    v["controller"] = serde_json::json!({ "type": "none" });
    v["initial_state"] = serde_json::json!({ "type": "state", "theta": 0.0, "theta_dot": 0.0, "r": 0.05, "r_dot": -3.0 });
    let cfg = write_config(tmp.path(), "crash", &v);
    let out = nnm(tmp.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let s = read_json(&tmp.path().join("short.summary.json"));
    assert!(s["aborted"].is_string());
}

#[test]
fn sweep_writes_one_run_per_point() {
    let tmp = TempDir::new().unwrap();
    let cfg = short_fig10(tmp.path());
    let out = nnm(tmp.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--param", "kappa_d=1,10", "--param", "kappa_p=0,5", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("sweep.csv")).unwrap();
    let h = rdr.headers().unwrap().clone();
    assert_eq!((&h[1], &h[2]), ("kappa_d", "kappa_p"));
    assert_eq!(rdr.records().count(), 4);
    for i in 0..4 {
        let dir = tmp.path().join(format!("run_{i:03}"));
        assert!(dir.join("trajectory.csv").exists() && dir.join("summary.json").exists());
    }
    let last = read_json(&tmp.path().join("run_003").join("config.json"));
    assert_eq!(last["controller"]["gains"]["kappa_d"], 10.0);
    assert_eq!(last["controller"]["gains"]["kappa_p"], 5.0);
}

#[test]
fn empty_sweep_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = short_fig10(tmp.path());
    for spec in ["kappa_d=", "no_such_param=1"] {
        let out = nnm(tmp.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--param", spec, "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{spec}");
    }
}

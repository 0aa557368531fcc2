use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dhym_cli::Manifest;
use serde_json::{json, Value};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dhym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhym"))
        .args(args)
        .output()
        .expect("spawn dhym")
}

fn run_config(config: &Path, out: &Path) -> Output {
    dhym(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn run_json(value: &Value, dir: &Path) -> (i32, Manifest) {
    let cfg = dir.join("config.json");
    fs::write(&cfg, serde_json::to_string(value).unwrap()).unwrap();
    let out = dir.join("run");
    let o = run_config(&cfg, &out);
    (o.status.code().unwrap(), Manifest::read(&out).unwrap())
}

fn bundled(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

#[test]
fn verify_algebra_writes_zero_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = dhym(&[
        "verify",
        "--suite",
        "algebra",
        "--samples",
        "100000",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("violations.json")).unwrap()).unwrap();
    assert_eq!(v["total"], json!(0));
    assert_eq!(v["seed"], json!(42));
    let m = Manifest::read(&out).unwrap();
    assert_eq!(m.seed, Some(42));
    assert!(m.artifacts.iter().any(|a| a.path == "violations.json"));
}

#[test]
fn inverted_window_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let o = run_config(&configs().join("bad_window.json"), &out);
    assert_eq!(o.status.code(), Some(4));
    let m = Manifest::read(&out).unwrap();
    assert_eq!(m.exit_code, 4);
    assert!(m.failure.unwrap().message.contains("window"));
}

#[test]
fn malformed_configs_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.json");
    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(run_config(&cfg, &dir.path().join("a")).status.code(), Some(4));
    let (code, m) = run_json(
        &json!({"mode": "solve", "geometry": {"n": 3}, "unknown": 1}),
        dir.path(),
    );
    assert_eq!(code, 4);
    assert!(m.failure.unwrap().message.contains("unknown"));
    let (code, _) = run_json(
        &json!({"mode": "verify", "verify": {"suite": "chen", "samples": 10}}),
        dir.path(),
    );
    assert_eq!(code, 4, "sampling without a seed must be rejected");
    assert_eq!(
        run_config(&dir.path().join("missing.json"), &dir.path().join("b"))
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn newton_budget_exhaustion_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bundled("manufactured_solve.json");
    cfg["solver"] = json!({"max_newton": 1});
    let (code, m) = run_json(&cfg, dir.path());
    assert_eq!(code, 2);
    assert!(m.failure.unwrap().message.contains("did not converge"));
}

#[test]
fn failed_audit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bundled("varying_path.json");
    cfg["mode"] = json!("audit");
    cfg["audit"] = json!({"max_k_variation": 1e-6});
    let (code, m) = run_json(&cfg, dir.path());
    assert_eq!(code, 3);
    let f = m.failure.unwrap();
    assert!(f.message.contains("K variation"), "{}", f.message);
}

#[test]
fn constant_path_summary_and_plot_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path");
    assert_eq!(
        run_config(&configs().join("constant_path.json"), &out).status.code(),
        Some(0)
    );
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("t,c_t,residual_sup,margin,iters"));
    assert_eq!(summary.lines().count(), 6);
    let m = Manifest::read(&out).unwrap();
    let csv_hash = &m.artifacts.iter().find(|a| a.path == "summary.csv").unwrap().sha256;
    assert_eq!(*csv_hash, dhym_core::torus::io::sha256_hex(summary.as_bytes()));

    let o = dhym(&["plot", "--run", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(out.join("plot/t_ct.csv")).unwrap();
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1), "{rows:?}");
    // Constant coefficients: φ ≡ 0 and U_t ≡ 0 up to O(1/β).
    let mut rdr = csv::Reader::from_path(out.join("plot/t_k.csv")).unwrap();
    let ks: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert!(ks.iter().all(|&(_, k)| k.abs() < 0.1), "{ks:?}");
    let index: Value = serde_json::from_str(&fs::read_to_string(out.join("plot/index.json")).unwrap()).unwrap();
    assert_eq!(index["run_id"], json!(m.run_id));
}

#[test]
fn stability_plot_has_loglog_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stab");
    assert_eq!(
        run_config(&configs().join("stability_hypercritical.json"), &out)
            .status
            .code(),
        Some(0)
    );
    let o = dhym(&["plot", "--run", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("plot/stability_loglog.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    let index: Value = serde_json::from_str(&fs::read_to_string(out.join("plot/index.json")).unwrap()).unwrap();
    assert!(index["slope"].as_f64().unwrap() > 0.0);
}

#[test]
fn plot_of_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = dhym(&["plot", "--run", dir.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn identical_configs_share_run_id_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert_eq!(run_config(&configs().join("envelope.json"), out).status.code(), Some(0));
    }
    assert_eq!(Manifest::read(&a).unwrap().run_id, Manifest::read(&b).unwrap().run_id);
    assert_eq!(
        fs::read(a.join("summary.csv")).unwrap(),
        fs::read(b.join("summary.csv")).unwrap()
    );
}

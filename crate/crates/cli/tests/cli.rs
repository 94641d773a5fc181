use std::path::Path;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatmap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn selftest_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["selftest"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = json(&dir.path().join("selftest.json"));
    assert_eq!(report["summary"]["pass"], true);
    assert_eq!(report["schema"], "scatmap.report");
    assert_eq!(report["command"], "selftest");
}

#[test]
fn selftest_fails_for_a_potential_without_a_saddle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["selftest", "--config", &fixture("no_saddle.toml")],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let report = json(&dir.path().join("selftest.json"));
    assert_eq!(report["summary"]["pass"], false);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["melnikov", "--config", &fixture("unknown_key.toml")],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = run(
        &["melnikov", "--config", &fixture("no_saddle.toml")],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["scatter", "--eps-grid", "1e-3,abc"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        &["melnikov", "--config", "/nonexistent/config.toml"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn melnikov_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["melnikov", "--config", &fixture("small.toml")],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let mut rd = csv::Reader::from_path(dir.path().join("melnikov.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let tau: f64 = rows[0][col("tau1")].parse().unwrap();
    assert!((tau - 0.29039).abs() < 1e-4);
    let di: f64 = rows[0][col("dI1_1")].parse().unwrap();
    assert!((di + 0.62467).abs() < 1e-4);
    assert_eq!(&rows[0][col("status")], "ok");
    let meta = json(&dir.path().join("melnikov.json"));
    assert_eq!(meta["command"], "melnikov");
    assert_eq!(meta["config"]["experiment"]["eps"][1], 1e-3);
}

#[test]
fn scatter_reports_second_order_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "scatter",
            "--config",
            &fixture("small.toml"),
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let meta = json(&dir.path().join("scatter.json"));
    let slope = meta["summary"]["fits"][0]["err_I"]["slope"]
        .as_f64()
        .unwrap();
    assert!(slope > 1.5, "{slope}");
    let rows = meta["rows"].as_array().unwrap();
    // The eps = 0 identity row comes first.
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["eps"], 0.0);
    assert!(!dir.path().join("scatter.csv").exists());
    assert!(dir.path().join("scatter.gp").exists());
}

#[test]
fn hamgen_and_gronwall_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hamgen", "--config", &fixture("small.toml")], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let meta = json(&dir.path().join("hamgen.json"));
    assert!(meta["summary"]["max_triangle_residual"].as_f64().unwrap() < 1e-7);
    let o = run(
        &["gronwall", "--eps-grid", "1e-2,1e-3,1e-4", "--threads", "2"],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let meta = json(&dir.path().join("gronwall.json"));
    assert_eq!(meta["summary"]["slope_at_least_rho0"], true);
}

#[test]
fn hamgen_needs_a_hamiltonian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("diss.toml");
    std::fs::write(&cfg, "[perturbation]\nmode = \"dissipation\"\n").unwrap();
    let o = run(&["hamgen", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

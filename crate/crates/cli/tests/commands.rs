use std::path::Path;
use std::process::{Command, Output};

fn pruefer(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_pruefer"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .env("PRUEFER_LOG", "off")
        .output()
        .unwrap()
}

const SMALL: &str = "[model]\nlength = 6\ntransverse_radius = 1\n[grid]\npoints = 40\n";

#[test]
fn compare_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = pruefer(
        dir.path(),
        SMALL,
        &["compare", "--output", out.to_str().unwrap()],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("E,idos,rotation,diff"));
    assert_eq!(lines.count(), 40);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(side["summary"]["pass"], true);
    assert_eq!(side["summary"]["length"], 6);
    assert_eq!(side["provenance"]["seed"], 1);
    assert!(side.get("runtime_seconds").is_none());
}

#[test]
fn json_format_embeds_rows_and_timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let o = pruefer(
        dir.path(),
        SMALL,
        &["compare", "--format", "json", "--timing"],
    );
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 40);
    assert!(doc["runtime_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn idos_and_rotation_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = pruefer(dir.path(), SMALL, &["idos"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("E,count,idos,perturbed\n"));
    assert!(text.trim_end().ends_with(",18,1.0,false"));
    let o = pruefer(dir.path(), SMALL, &["rotation"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("E,rotation,velocity\n"));
}

#[test]
fn validate_passes_on_defaults_and_free_chain() {
    let dir = tempfile::tempdir().unwrap();
    let o = pruefer(dir.path(), SMALL, &["validate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let free = "[model]\ntransverse_dim = 0\ndisorder_width = 0.0\nlength = 30\n";
    let o = pruefer(dir.path(), free, &["validate", "--format", "json"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<_> = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"free-chain"));
}

#[test]
fn sweep_reports_each_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\ntransverse_dim = 0\nhopping = \"random\"\n[grid]\npoints = 30\n[run]\nrealizations = 3\n";
    let o = pruefer(
        dir.path(),
        cfg,
        &["sweep", "--values", "4,8", "--format", "json"],
    );
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["axis"], "N");
    assert_eq!(doc["points"].as_array().unwrap().len(), 2);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 60);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = pruefer(
        dir.path(),
        "[grid]\ne_min = 2.0\ne_max = 1.0\n",
        &["compare"],
    );
    assert_eq!(bad.status.code(), Some(2));
    let unknown = pruefer(dir.path(), "[model]\nwidth = 1\n", &["idos"]);
    assert_eq!(unknown.status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_pruefer"))
        .args(["idos", "--config", "/nonexistent/run.toml"])
        .env("PRUEFER_LOG", "off")
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    // Dirichlet truncation shifts the band-edge means between L = 2 and 4 far
    // beyond three standard errors, so the stabilization verdict fails.
    let edge = "[model]\nlength = 8\n[grid]\ne_min = -3.0\ne_max = 3.0\npoints = 3\n[run]\nrealizations = 100\n";
    let o = pruefer(
        dir.path(),
        edge,
        &["sweep", "--axis", "L", "--values", "2,4"],
    );
    assert_eq!(o.status.code(), Some(1));
}

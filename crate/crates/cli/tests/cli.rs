use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use multicurve_cli::acceptance::{SAMPLE_CONFIG, SAMPLE_DEAL, SAMPLE_QUOTES};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multicurve"))
}

fn inputs(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let q = dir.join("quotes.csv");
    let c = dir.join("config.json");
    let d = dir.join("deal.json");
    std::fs::write(&q, SAMPLE_QUOTES).unwrap();
    std::fs::write(&c, SAMPLE_CONFIG).unwrap();
    std::fs::write(&d, SAMPLE_DEAL).unwrap();
    (q, c, d)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(bin().arg("frobnicate"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args(["bootstrap", "--quotes"])
        .arg(dir.path().join("absent.csv"))
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (q, _, _) = inputs(dir.path());
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"pathz": 10}"#).unwrap();
    let out = run(bin().arg("bootstrap").arg("--quotes").arg(&q).arg("--config").arg(&bad).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pathz"));
}

#[test]
fn bootstrap_writes_curves_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (q, c, _) = inputs(dir.path());
    let out_dir = dir.path().join("out");
    let out = run(bin().arg("bootstrap").arg("--quotes").arg(&q).arg("--config").arg(&c).arg("--out").arg(&out_dir));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let discount = std::fs::read_to_string(out_dir.join("discount.csv")).unwrap();
    assert!(discount.starts_with("T,logP\n0,0\n"));
    assert_eq!(discount.lines().count(), 12);
    let forwards = std::fs::read_to_string(out_dir.join("forwards.csv")).unwrap();
    assert!(forwards.starts_with("T,x,F\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "bootstrap");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_dumps_requested_paths() {
    let dir = tempfile::tempdir().unwrap();
    let (q, c, _) = inputs(dir.path());
    let out = run(bin()
        .arg("simulate")
        .arg("--quotes")
        .arg(&q)
        .arg("--config")
        .arg(&c)
        .args(["--paths", "50", "--dump-paths", "3", "--out"])
        .arg(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let moments = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert!(moments.starts_with("t,X1,Y11,v1,D,P0\n"));
    let paths = std::fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    let ids: std::collections::BTreeSet<&str> =
        paths.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids.len(), 3);
}

#[test]
fn price_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let (q, c, d) = inputs(dir.path());
    let price = |seed: &str, out: &str| {
        let o = run(bin()
            .arg("price")
            .arg("--quotes")
            .arg(&q)
            .arg("--config")
            .arg(&c)
            .arg("--deal")
            .arg(&d)
            .args(["--paths", "500", "--seed", seed, "--out"])
            .arg(dir.path().join(out)));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let a = price("1", "a");
    assert_eq!(a, price("1", "b"));
    assert_ne!(a, price("2", "c"));
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let d = &report["decomposition"];
    let sum: f64 = ["cva", "dva", "funding_cost", "collateral_cost"]
        .iter()
        .map(|k| d[*k].as_f64().unwrap())
        .sum();
    let gap = report["adjusted"].as_f64().unwrap() - report["clean"].as_f64().unwrap();
    assert!((gap - sum).abs() <= 1e-9 * (1.0 + gap.abs()));
}

#[test]
fn adjustments_csv_has_one_row_per_maturity() {
    let dir = tempfile::tempdir().unwrap();
    let (q, c, _) = inputs(dir.path());
    let out = run(bin()
        .arg("adjustments")
        .arg("--quotes")
        .arg(&q)
        .arg("--config")
        .arg(&c)
        .args(["--paths", "500", "--tenor", "0.25", "--maturities", "1,3", "--format", "csv", "--out"])
        .arg(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("adjustments.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "T,x,F,Fbar,gamma,P,Pbar");
    assert_eq!(lines.len(), 3);
}

#[test]
fn maturity_shorter_than_tenor_is_rejected() {
    let out = run(bin().args(["adjustments", "--tenor", "0.5", "--maturities", "0.25"]));
    assert_eq!(out.status.code(), Some(2));
}

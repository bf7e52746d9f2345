use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fluxband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxband"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_family(dir: &Path, file: &str, args: &[&str]) -> String {
    let path = dir.join(file);
    let mut full = vec!["new"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = fluxband(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn new_writes_a_parsable_spec() {
    let out = fluxband(&["new", "star", "2", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let spec: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(spec["dimension"], 2);
    assert_eq!(spec["vertices"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_parameters_exit_2() {
    assert_eq!(fluxband(&["new", "square", "0"]).status.code(), Some(2));
    assert_eq!(fluxband(&["new", "nonsense"]).status.code(), Some(2));
    assert_eq!(fluxband(&["butterfly", "--qmax", "0"]).status.code(), Some(2));
    assert_eq!(fluxband(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_specs_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad_index = dir.path().join("bad.json");
    fs::write(
        &bad_index,
        r#"{"dimension": 2, "vertices": [{"name": "v"}],
            "edges": [{"from": "v", "to": "v", "index": [1, 0, 0]}]}"#,
    )
    .unwrap();
    let unknown_key = dir.path().join("unknown.json");
    fs::write(
        &unknown_key,
        r#"{"dimension": 1, "vertices": [{"name": "v", "colour": 3}], "edges": []}"#,
    )
    .unwrap();
    let missing = dir.path().join("missing.json");
    for path in [&bad_index, &unknown_key, &missing] {
        let out = fluxband(&["spectrum", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{}", path.display());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn spectrum_json_matches_star_oracle() {
    let dir = TempDir::new().unwrap();
    let spec = write_family(dir.path(), "star.json", &["star", "2", "3"]);
    let out = fluxband(&["spectrum", &spec, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let value: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((value["measure"].as_f64().unwrap() - 8.0).abs() < 1e-9);
    let flat = value["flat_bands"].as_array().unwrap();
    assert_eq!(flat.len(), 1);
    assert!((flat[0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(value["gaps"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_passes_on_library_graphs() {
    let dir = TempDir::new().unwrap();
    for (file, args) in [
        ("star.json", vec!["star", "2", "3"]),
        ("hex.json", vec!["hexagonal"]),
        ("harper.json", vec!["harper", "1", "2"]),
    ] {
        let spec = write_family(dir.path(), file, &args);
        let out = fluxband(&["verify", &spec, "--format", "json"]);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", stdout(&out));
        let value: Value = serde_json::from_str(&stdout(&out)).unwrap();
        let reports = value["reports"].as_array().unwrap();
        assert!(!reports.is_empty());
        assert!(reports.iter().all(|r| r["satisfied"] == true));
    }
}

#[test]
fn band_csv_rows_and_bit_stability() {
    let dir = TempDir::new().unwrap();
    let spec = write_family(dir.path(), "square.json", &["square", "2"]);
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    for path in [&first, &second] {
        let out = fluxband(&["bands", &spec, "--grid", "9", "--out", path.to_str().unwrap(), "--gnuplot"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 81 + 1);
    assert_eq!(text.lines().next().unwrap(), "theta_1,theta_2,lambda_1");
    let script = fs::read_to_string(dir.path().join("a.gp")).unwrap();
    assert!(script.contains("a.csv"));
}

#[test]
fn gnuplot_without_out_is_rejected() {
    let dir = TempDir::new().unwrap();
    let spec = write_family(dir.path(), "square.json", &["square", "1"]);
    assert_eq!(fluxband(&["bands", &spec, "--gnuplot"]).status.code(), Some(2));
}

#[test]
fn path_output_has_requested_samples() {
    let dir = TempDir::new().unwrap();
    let spec = write_family(dir.path(), "star.json", &["star", "2", "3"]);
    let out = fluxband(&["bands", &spec, "--path", "G,X,M", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 10 + 1);
    for row in rows {
        let middle: f64 = row.split(',').rev().nth(1).unwrap().parse().unwrap();
        assert!((middle - 1.0).abs() < 1e-12);
    }
}

#[test]
fn butterfly_half_flux_column() {
    let out = fluxband(&["butterfly", "--qmax", "2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let columns: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let half = columns
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["p"] == 1 && c["q"] == 2)
        .unwrap();
    let root2 = std::f64::consts::SQRT_2;
    assert!((half["bottom"].as_f64().unwrap() - (4.0 - 2.0 * root2)).abs() < 1e-9);
    assert!((half["top"].as_f64().unwrap() - (4.0 + 2.0 * root2)).abs() < 1e-9);
}

#[test]
fn perturb_requires_matching_graphs() {
    let dir = TempDir::new().unwrap();
    let a = write_family(dir.path(), "a.json", &["harper", "1", "2"]);
    let mut spec: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    for edge in spec["edges"].as_array_mut().unwrap() {
        edge["alpha"] = Value::from(0.0);
    }
    let b = dir.path().join("b.json");
    fs::write(&b, spec.to_string()).unwrap();
    let b = b.to_str().unwrap().to_string();
    let c = write_family(dir.path(), "c.json", &["square", "2"]);
    let out = fluxband(&["perturb", &a, &b, "--grid", "9", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let value: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["reports"].as_array().unwrap().len(), 5);
    assert_eq!(fluxband(&["perturb", &a, &c]).status.code(), Some(2));
}

#[test]
fn effective_mass_on_star_band() {
    let dir = TempDir::new().unwrap();
    let spec = write_family(dir.path(), "star.json", &["star", "2", "3"]);
    let out = fluxband(&["effective-mass", &spec, "--band", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let value: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["reports"][0]["satisfied"], true);
    assert_eq!(fluxband(&["effective-mass", &spec, "--band", "0"]).status.code(), Some(2));
    assert_eq!(fluxband(&["effective-mass", &spec, "--band", "9"]).status.code(), Some(2));
}

#[test]
fn reduce_and_info_report_topology() {
    let dir = TempDir::new().unwrap();
    let spec = write_family(dir.path(), "fig2.json", &["figure2"]);
    let out = fluxband(&["info", &spec, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let info: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(info["beta"], 3);
    let out = fluxband(&["reduce", &spec, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let reduced: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(reduced["reduced_flux_count"], 1);
    assert_eq!(reduced["theta0"].as_array().unwrap().len(), 2);
}

#[test]
fn unsupported_format_is_rejected() {
    let dir = TempDir::new().unwrap();
    let spec = write_family(dir.path(), "square.json", &["square", "1"]);
    assert_eq!(fluxband(&["info", &spec, "--format", "csv"]).status.code(), Some(2));
}

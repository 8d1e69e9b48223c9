use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ckern(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckern"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

// triangle with a rotation on every edge, one heavier edge
const TRIANGLE: &str = r#"{
  "dim": 2,
  "vertices": ["a", "b", "c"],
  "edges": [
    {"u": "a", "v": "b", "w": 1.0, "sigma_uv": [[0.8, -0.6], [0.6, 0.8]]},
    {"u": "b", "v": "c", "w": 2.0, "sigma_uv": [[0.0, -1.0], [1.0, 0.0]]},
    {"u": "c", "v": "a", "w": 0.5, "sigma_uv": [[1.0, 0.0], [0.0, -1.0]]}
  ]
}"#;

fn workspace(files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in files {
        std::fs::write(dir.path().join(name), body).unwrap();
    }
    dir
}

#[test]
fn trace_check_on_a_rotated_cycle_passes() {
    let dir = workspace(&[]);
    let out = ckern(&["trace-check", "--M", "5", "--sigma", "1:rotation:0.3", "--t-grid", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = &json_out(&out)["grid"];
    assert_eq!(grid.as_array().unwrap().len(), 1);
    assert!(grid[0]["trace_residual"].as_f64().unwrap() <= 1e-9);
    assert!(grid[0]["theta_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn trace_check_csv_report() {
    let dir = workspace(&[]);
    let out = ckern(
        &["trace-check", "--M", "3,1,0,2", "--sigma", "1:rotation:0.7", "--t-grid", "0.5,1,2,5", "--report", "csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,trace_residual,theta_residual");
    assert_eq!(lines.len(), 5);
}

#[test]
fn kernel_at_time_zero_is_the_identity() {
    let dir = workspace(&[("g.json", TRIANGLE)]);
    let out = ckern(&["kernel", "g.json", "--t", "0", "--pairs", "all"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let blocks = json_out(&out)["blocks"].as_array().unwrap().clone();
    assert_eq!(blocks.len(), 9);
    for b in &blocks {
        let diag = b["x"] == b["y"];
        for i in 0..2 {
            for j in 0..2 {
                let want = if diag && i == j { 1.0 } else { 0.0 };
                let got = b["block"][i][j].as_f64().unwrap();
                assert!((got - want).abs() < 1e-12, "{b}");
            }
        }
    }
}

#[test]
fn kernel_routes_agree_on_a_consistent_graph() {
    let dir = workspace(&[]);
    let gen = ckern(
        &["random-graph", "--vertices", "6", "--dim", "3", "--extra-edges", "4", "--consistent", "--seed", "11"],
        dir.path(),
    );
    assert_eq!(gen.status.code(), Some(0));
    std::fs::write(dir.path().join("g.json"), &gen.stdout).unwrap();
    let out = ckern(&["kernel", "g.json", "--t", "1.2", "--route", "both", "--report-file", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let check = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "consistent_shortcut").unwrap();
    assert!(check["residual"].as_f64().unwrap() <= check["tolerance"].as_f64().unwrap());
    assert_eq!(report["pass"], true);
}

#[test]
fn inconsistent_triangle_fails_the_check() {
    let dir = workspace(&[("g.json", TRIANGLE)]);
    let out = ckern(&["consistent", "g.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let data = json_out(&out);
    assert_eq!(data["consistent"], false);
    let witness = data["witness"].as_array().unwrap();
    assert_eq!(witness.first(), witness.last());
    let shortcut = ckern(&["kernel", "g.json", "--t", "1", "--route", "consistent"], dir.path());
    assert_eq!(shortcut.status.code(), Some(5));
}

#[test]
fn malformed_json_is_a_schema_error() {
    let dir = workspace(&[("bad.json", "{\"dim\": 2, \"vertices\": [")]);
    for cmd in ["validate", "consistent", "laplacian"] {
        let out = ckern(&[cmd, "bad.json"], dir.path());
        assert_eq!(out.status.code(), Some(4), "{cmd}");
        assert!(out.stdout.is_empty());
    }
    let ragged = r#"{"dim": 2, "vertices": [0, 1], "edges": [{"u": 0, "v": 1, "w": 1, "sigma_uv": [[1, 0], [0]]}]}"#;
    let dir = workspace(&[("ragged.json", ragged)]);
    assert_eq!(ckern(&["validate", "ragged.json"], dir.path()).status.code(), Some(4));
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let not_orthogonal = r#"{"dim": 1, "vertices": [0, 1], "edges": [{"u": 0, "v": 1, "w": 1, "sigma_uv": [[2]]}]}"#;
    let dir = workspace(&[("g.json", TRIANGLE), ("skew.json", not_orthogonal)]);
    let code = |args: &[&str]| ckern(args, dir.path()).status.code();
    assert_eq!(code(&["validate", "missing.json"]), Some(3));
    assert_eq!(code(&["kernel", "g.json", "--t", "1", "--pairs", "a:z"]), Some(2));
    assert_eq!(code(&["kernel", "g.json"]), Some(2));
    assert_eq!(code(&["laplacian", "skew.json"]), Some(5));
    assert_eq!(code(&["validate", "skew.json"]), Some(1));
    assert_eq!(code(&["torus", "--M", "1", "--t", "1"]), Some(5));
    assert_eq!(code(&["torus", "--M", "5", "--t", "100000", "--route", "lattice"]), Some(6));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = workspace(&[("g.json", TRIANGLE)]);
    let runs = [
        vec!["kernel", "g.json", "--t", "0.8", "--out", "csv"],
        vec!["vdm", "g.json", "--t", "0.8", "--pairs", "all", "--out", "csv", "--report-file", "r.json"],
        vec!["torus", "--M", "2,1,0,3", "--sigma", "2:rotation:0.4", "--t", "1.5", "--pair", "1,0:0,2"],
        vec!["random-graph", "--vertices", "5", "--dim", "2", "--seed", "3"],
    ];
    for args in &runs {
        let a = ckern(args, dir.path());
        let report_a = std::fs::read(dir.path().join("r.json")).ok();
        let b = ckern(args, dir.path());
        let report_b = std::fs::read(dir.path().join("r.json")).ok();
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stderr, b.stderr, "{args:?}");
        assert_eq!(report_a, report_b, "{args:?}");
    }
}

#[test]
fn floats_round_trip() {
    let dir = workspace(&[]);
    let out = ckern(&["zkernel", "--sigma", "rotation:0.3", "--a", "-3", "--t", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let coeff = json_out(&Output { stdout: text.clone().into_bytes(), ..out })["coefficient"].as_f64().unwrap();
    assert!(text.contains(&format!("{coeff:.16e}")));
    let gen = ckern(&["random-graph", "--vertices", "4", "--dim", "2", "--seed", "5"], dir.path());
    std::fs::write(dir.path().join("g.json"), &gen.stdout).unwrap();
    let again = ckern(&["validate", "g.json"], dir.path());
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn report_file_pairs_residuals_with_tolerances() {
    let dir = workspace(&[("g.json", TRIANGLE)]);
    let out = ckern(&["vdm", "g.json", "--t", "1", "--report-file", "r.json", "--timing"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["command"][0], "vdm");
    assert_eq!(report["inputs_digest"].as_str().unwrap().len(), 64);
    assert!(report["timing_ms"].as_f64().is_some());
    for c in report["checks"].as_array().unwrap() {
        assert!(c["residual"].is_number() && c["tolerance"].is_number() && c["pass"].is_boolean());
    }
    let other = workspace(&[("g.json", &TRIANGLE.replace("0.5", "0.25"))]);
    ckern(&["vdm", "g.json", "--t", "1", "--report-file", "r.json", "--timing"], other.path());
    let changed: Value = serde_json::from_str(&std::fs::read_to_string(other.path().join("r.json")).unwrap()).unwrap();
    assert_ne!(changed["inputs_digest"], report["inputs_digest"]);
}

#[test]
fn help_documents_exit_codes() {
    let dir = workspace(&[]);
    let out = ckern(&["--help"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    for code in ["0  every check", "3  an input file", "4  input does not", "5  a precondition", "6  numerical"] {
        assert!(text.contains(code), "{code}");
    }
}

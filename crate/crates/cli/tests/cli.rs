use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn delzant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delzant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_with(args: &[&str], files: &[&str]) -> Output {
    let paths: Vec<String> = files.iter().map(|f| scenario(f).display().to_string()).collect();
    let mut all: Vec<&str> = args.to_vec();
    // file arguments are spliced in where "{}" placeholders appear
    let mut it = paths.iter();
    for a in all.iter_mut() {
        if *a == "{}" {
            *a = it.next().unwrap();
        }
    }
    delzant(&all)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn validate_triangle_and_trapezoid() {
    let out = run_with(&["validate", "{}"], &["triangle.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["delzant"], true);
    assert_eq!(v["zero_sum"], true);

    let out = run_with(&["validate", "{}"], &["trapezoid.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["zero_sum"], false);
}

#[test]
fn non_delzant_reports_one_based_facets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(
        &path,
        r#"{"dim":2,"bounded":true,"halfspaces":[{"normal":[1,0],"offset":"0"},{"normal":[1,2],"offset":"0"},{"normal":[-1,-1],"offset":"1"}]}"#,
    )
    .unwrap();
    let out = delzant(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["smooth"], false);
    assert_eq!(v["failures"][0]["facets"], serde_json::json!([1, 2]));
    assert_eq!(v["failures"][0]["determinant"], "2");
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, ").unwrap();
    assert_eq!(delzant(&["validate", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(delzant(&["validate", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(delzant(&["no-such-command"]).status.code(), Some(2));
    let out = run_with(&["validate", "{}", "--tol", "wobble=1"], &["triangle.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_with(
        &["boundary", "{}", "--face", "4", "--points", "{}"],
        &["triangle.json", "edge_points.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_all_bundled_scenarios() {
    for name in ["triangle_scenario.json", "square_scenario.json", "all.json"] {
        let out = run_with(&["verify-all", "{}"], &[name]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(json(&out)["pass"], true);
    }
}

#[test]
fn negative_control_fails_foot_check() {
    let out = run_with(&["verify-all", "{}"], &["negative_control.json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    let checks = v["scenarios"][0]["checks"].as_array().unwrap();
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["pythagoras_foot"]);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = run_with(&["verify-all", "{}", "--seed", "7"], &["all.json"]);
    let b = run_with(&["verify-all", "{}", "--seed", "7"], &["all.json"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run_with(&["verify-all", "{}", "--seed", "8"], &["all.json"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run_with(
        &["validate", "{}", "--out", path.to_str().unwrap()],
        &["triangle.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["delzant"], true);
}

/// Gradient of the Guillemin potential at scale ½ on the standard triangle.
fn triangle_grad(x: &[f64]) -> [f64; 2] {
    let s = 1.0 - x[0] - x[1];
    [0.5 * (x[0].ln() - s.ln()), 0.5 * (x[1].ln() - s.ln())]
}

#[test]
fn geodesic_csv_round_trip() {
    let out = run_with(
        &["geodesic", "{}", "--spec", "{}", "--format", "csv"],
        &["triangle.json", "dual_geodesic.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["t", "x1", "x2", "y1", "y2"]);
    let mut finite_rows = 0;
    let mut limit = None;
    for rec in reader.records() {
        let rec = rec.unwrap();
        if &rec[0] == "inf" {
            limit = Some([rec[1].parse::<f64>().unwrap(), rec[2].parse::<f64>().unwrap()]);
            continue;
        }
        let row: Vec<f64> = rec.iter().map(|c| c.parse().unwrap()).collect();
        let g = triangle_grad(&row[1..3]);
        // x is printed to 12 significant digits, so y can only be recovered
        // up to that rounding pushed through the Hessian
        let slack = 0.5 * 1e-12 / (1.0 - row[1] - row[2]);
        for i in 0..2 {
            assert!((g[i] - row[3 + i]).abs() <= 1e-9 + slack, "{row:?}");
        }
        finite_rows += 1;
    }
    assert_eq!(finite_rows, 6);
    let limit = limit.expect("limit row");
    assert!((limit[0] - 0.5).abs() < 1e-9 && (limit[1] - 0.5).abs() < 1e-9);
}

#[test]
fn geodesic_limit_at_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"kind": "dual", "start": [0.25, 0.25], "direction": [1, 0], "t_grid": [0, 1]}"#,
    )
    .unwrap();
    let tri = scenario("triangle.json");
    let out = delzant(&["geodesic", tri.to_str().unwrap(), "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["limit"]["point"], serde_json::json!([1.0, 0.0]));
    assert_eq!(v["limit"]["face"], serde_json::json!([2, 3]));

    let out = run_with(&["geodesic", "{}", "--spec", "{}"], &["triangle.json", "dual_geodesic.json"]);
    assert_eq!(json(&out)["limit"]["face"], serde_json::json!([3]));
}

#[test]
fn flat_geodesic_stops_at_exit() {
    let out = run_with(&["geodesic", "{}", "--spec", "{}"], &["triangle.json", "flat_geodesic.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["exit_time"], 0.5);
    assert_eq!(v["trace"].as_array().unwrap().len(), 2);
}

#[test]
fn divergence_matches_kl_on_triangle() {
    let out = run_with(
        &["divergence", "{}", "--points", "{}"],
        &["triangle.json", "triangle_points.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let factor = v["kl_factor"].as_f64().unwrap();
    for row in v["rows"].as_array().unwrap() {
        let d = row["bregman"].as_f64().unwrap();
        let e = row["expanded"].as_f64().unwrap();
        let k = row["kl"].as_f64().unwrap();
        assert!((d - e).abs() < 1e-10);
        assert!((d - factor * k).abs() < 1e-10);
    }
}

#[test]
fn pythagoras_and_boundary_commands() {
    let out = run_with(&["pythagoras", "{}", "--triple", "{}"], &["triangle.json", "foot_triple.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["checks"][0]["inputs"]["face"], serde_json::json!([2]));
    let foot = &v["checks"][0]["details"]["eta_prime"];
    assert!((foot[0].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let out = run_with(
        &["boundary", "{}", "--face", "2", "--points", "{}"],
        &["triangle.json", "edge_points.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["face"], serde_json::json!([2]));
}

#[test]
fn torify_both_directions() {
    let out = run_with(&["torify", "{}"], &["mixture.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["compact_torification"], true);
    assert_eq!(v["polytope"]["halfspaces"].as_array().unwrap().len(), 3);

    let out = run_with(&["torify", "{}"], &["triangle.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["family"]["alphas"].as_array().unwrap().len(), 3);

    let out = run_with(&["torify", "{}"], &["trapezoid.json"]);
    assert_eq!(out.status.code(), Some(1));
}

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatial-cournot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Header and rows of a CSV rendering.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn field(header: &[String], row: &[String], name: &str) -> f64 {
    let k = header.iter().position(|h| h == name).unwrap();
    row[k].parse().unwrap()
}

#[test]
fn solve_classical_zero_transport() {
    let o = run(&["solve", "--r1", "0.3", "--r2", "0.7", "--t", "0", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(
        h,
        [
            "p1", "p2", "q1", "q2", "x1", "x2", "r", "pi1", "pi2", "residual", "iterations",
            "branch", "converged", "negative_strategy"
        ]
    );
    for name in ["p1", "p2", "q1", "q2"] {
        assert!((field(&h, &rows[0], name) - 1.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn solve_entangled_zero_transport() {
    let o = run(&["solve", "--r1", "0.3", "--r2", "0.6", "--t", "0", "--gamma", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &j["results"][0];
    let (c, s) = (5f64.cosh(), 5f64.sinh());
    assert!((r["q1"].as_f64().unwrap() - c / (3.0 * c + s)).abs() < 1e-8);
    assert!((r["pi1"].as_f64().unwrap() - 0.125).abs() < 1e-8);
    assert_eq!(j["spec"]["command"], "solve");
    assert_eq!(j["spec"]["gamma"], 5.0);
}

#[test]
fn reversed_locations_are_a_usage_error() {
    let o = run(&["solve", "--r1", "0.7", "--r2", "0.3", "--t", "0.2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("r1 < r2"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn gamma_out_of_range_is_a_usage_error() {
    let o = run(&["solve", "--r1", "0.3", "--r2", "0.6", "--t", "0.2", "--gamma", "31"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma"));
}

#[test]
fn missing_flag_and_help() {
    assert_eq!(run(&["solve", "--r1", "0.3"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn solver_failure_exits_two() {
    let o = run(&["solve", "--r1", "0.3", "--r2", "0.6", "--t", "0.2", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn verify_agrees() {
    let o = run(&["verify", "--r1", "0.3", "--r2", "0.6", "--t", "0.2", "--gamma", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows[0][0], "true");
    assert!(field(&h, &rows[0], "max_deviation_gain") <= 1e-6);
}

#[test]
fn verify_disagreement_exits_three() {
    // Deep in the allowance regime the inverse demand has a second admissible
    // price root that the brute-force search finds more profitable.
    let o = run(&["verify", "--r1", "0.3", "--r2", "0.6", "--t=-0.9", "--gamma", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stdout(&o).contains("false"));
}

#[test]
fn threshold_classical() {
    let o = run(&["threshold", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&stdout(&o));
    let tg = field(&h, &rows[0], "t_g");
    assert!((0.49..=0.53).contains(&tg), "t_g = {tg}");
    assert!(field(&h, &rows[0], "bracket_lo") <= tg && tg <= field(&h, &rows[0], "bracket_hi"));
}

#[test]
fn limits_classical() {
    let o = run(&["limits", "--t", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&stdout(&o));
    assert!((field(&h, &rows[0], "q") - 0.303305).abs() < 2e-6);
    assert!((field(&h, &rows[0], "p") - 0.343390).abs() < 2e-6);
}

#[test]
fn allowance_reports_both_games() {
    let o = run(&["allowance", "--r1", "0.3", "--r2", "0.6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let res = j["results"].as_array().unwrap();
    assert_eq!(res[0]["game"], "classical");
    let tc = res[0]["t_c"].as_f64().unwrap();
    assert!(tc < 0.0 && (res[0]["u_c"].as_f64().unwrap() + tc).abs() < 1e-12);
    assert_eq!(res[1]["game"], "quantum");
    assert!(res[1]["status"] == "ok" || res[1]["t_c"].is_null());
}

#[test]
fn benefit_zero_without_entanglement() {
    let o = run(&["benefit", "--r1", "0.3", "--r2", "0.6", "--t", "0:0.6:0.2", "--gamma", "0:5:5"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(h, ["t", "gamma", "benefit1", "benefit2", "status"]);
    assert_eq!(rows.len(), 8);
    for row in &rows {
        if field(&h, row, "gamma") == 0.0 {
            assert_eq!(field(&h, row, "benefit1"), 0.0);
        } else {
            assert!(field(&h, row, "benefit1") > 0.0);
        }
    }
}

#[test]
fn sweep_location_grid_filters_pairs() {
    let o = run(&["sweep", "--x", "r1:0.3:0.6:0.1", "--y", "r2:0.4:0.7:0.1", "--quantity", "price"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(h, ["r1", "r2", "p1", "p2", "status"]);
    for row in &rows {
        let (r1, r2) = (field(&h, row, "r1"), field(&h, row, "r2"));
        assert!(r1 <= 0.5 && 0.5 <= r2 && r1 < r2);
    }
    assert_eq!(rows.len(), 8);
}

#[test]
fn sweep_rejects_equal_axes() {
    let o = run(&["sweep", "--x", "t:0:1:0.5", "--y", "t:0:1:0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csv_and_json_round_trip() {
    let args = ["sweep", "--x", "t:-0.2:0.6:0.2", "--y", "gamma:0:5:2.5", "--r1", "0.3", "--r2", "0.6"];
    let csv_out = run(&args);
    let json_out = run(&[&args[..], &["--format", "json"]].concat());
    assert_eq!(csv_out.status.code(), Some(0));
    let (h, rows) = csv_rows(&stdout(&csv_out));
    let j: Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    let results = j["results"].as_array().unwrap();
    assert_eq!(results.len(), rows.len());
    let mut compared = 0;
    for (row, obj) in rows.iter().zip(results) {
        for (name, text) in h.iter().zip(row) {
            let v = &obj[name.as_str()];
            match text.parse::<f64>() {
                Ok(x) if v.is_number() => {
                    assert_eq!(v.as_f64().unwrap(), x, "{name}");
                    compared += 1;
                }
                _ if text.is_empty() => assert!(v.is_null(), "{name}"),
                _ => assert_eq!(v.to_string().trim_matches('"'), text.as_str(), "{name}"),
            }
        }
    }
    assert!(compared > 100);
    assert_eq!(j["diagnostics"]["cells"], rows.len());
}

#[test]
fn failed_cells_serialize_as_null() {
    // A large allowance with a near-edge location pair leaves some cells
    // without an admissible equilibrium.
    let args = ["sweep", "--x", "t:-1.5:-1:0.5", "--y", "r1:0:0.4:0.4", "--r2", "0.55", "--gamma", "0"];
    let o = run(&[&args[..], &["--format", "json"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(!text.contains("NaN"));
    let j: Value = serde_json::from_str(&text).unwrap();
    let failed: Vec<&Value> = j["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] != "ok")
        .collect();
    assert!(!failed.is_empty());
    for r in failed {
        assert_eq!(r["converged"], false);
        assert!(r["p1"].is_null() && r["pi2"].is_null());
    }
}

#[test]
fn out_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("limits.csv");
    let o = run(&["limits", "--t", "0:0.6:0.2", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let (_, rows) = csv_rows(&std::fs::read_to_string(path).unwrap());
    assert_eq!(rows.len(), 4);
}

use std::fs;
use std::process::{Command, Output};

use flatgh_core::gh::{validate_metric, FiniteMetricSpace};

fn flatgh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatgh")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const BAD_BALL: &str = r#"
[[annuli]]
id = "e0"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "3"
end_lo = "v"
end_hi = "v"

[[balls]]
id = "b7"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
depth = "1"
end = "v"

[[junctions]]
id = "v"
"#;

#[test]
fn limit_graph_of_tate() {
    let o = flatgh(&["limit-graph", "--spec", "builtin:tate"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("circle, circumference 3, diam 3/2, w = 0"));
}

#[test]
fn limit_graph_of_theta_and_collapsed_theta() {
    let o = flatgh(&["limit-graph", "--spec", "builtin:theta"]);
    assert!(stdout(&o).starts_with("theta(1,1,2), diam 3/2"));
    let o = flatgh(&["limit-graph", "--spec", "builtin:collapsed-theta"]);
    let text = stdout(&o);
    assert!(text.starts_with("wedge of 2 circles (1,1), diam 1"), "{text}");
    assert!(text.contains("collapsed: e2"));
}

#[test]
fn limit_graph_reads_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.toml");
    fs::write(&path, BAD_BALL.split("[[balls]]").next().unwrap().to_string() + "[[junctions]]\nid = \"v\"\n").unwrap();
    let o = flatgh(&["limit-graph", "--spec", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("circle, circumference 3"));
}

#[test]
fn invalid_ball_is_an_input_error_naming_the_piece() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, BAD_BALL).unwrap();
    let o = flatgh(&["limit-graph", "--spec", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("b7") && err.contains("line 13"), "{err}");
}

#[test]
fn unknown_builtin_and_missing_file() {
    assert_eq!(flatgh(&["limit-graph", "--spec", "builtin:nope"]).status.code(), Some(2));
    assert_eq!(flatgh(&["limit-graph", "--spec", "/nonexistent/spec.toml"]).status.code(), Some(2));
}

#[test]
fn fiber_matrix_is_a_deterministic_metric() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = flatgh(&[
            "fiber-matrix", "--spec", "builtin:tate", "--samples", "10", "--resolution", "64", "--seed", seed, "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (fs::read(&out).unwrap(), fs::read(out.with_extension("points.csv")).unwrap())
    };
    let a = run("9", "a.csv");
    let b = run("9", "b.csv");
    assert_eq!(a, b);
    let c = run("10", "c.csv");
    assert_ne!(a.0, c.0);

    for bytes in [&a.0, &c.0] {
        let text = String::from_utf8(bytes.clone()).unwrap();
        let m = FiniteMetricSpace::from_csv(&text).unwrap();
        assert_eq!(m.len(), 10);
        assert!((0..10).all(|i| m.d(i, i) == 0.0 && (0..10).all(|j| m.d(i, j) == m.d(j, i))));
        assert!(validate_metric(&m, 1e-9 * m.diameter()));
        // the CSV round-trips byte for byte
        assert_eq!(m.to_csv(), text);
    }
    let sidecar = String::from_utf8(a.1).unwrap();
    assert_eq!(sidecar.lines().count(), 11);
    assert!(sidecar.starts_with("label,piece,val,phi,rho,retraction\n"));
}

#[test]
fn fiber_matrix_rejects_bad_config() {
    let o = flatgh(&["fiber-matrix", "--spec", "builtin:tate", "--s", "1.5", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = flatgh(&["fiber-matrix", "--spec", "builtin:tate", "--resolution", "2", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn converge_passes_on_tate_and_theta_defaults() {
    for spec in ["builtin:tate", "builtin:theta"] {
        let o = flatgh(&["converge", "--spec", spec]);
        assert_eq!(o.status.code(), Some(0), "{spec}: {}", stderr(&o));
        let text = stdout(&o);
        assert!(text.starts_with("s,gh_upper,gh_lower,diam_fiber_normalized\n"));
        assert_eq!(text.lines().count(), 6);
    }
}

#[test]
fn converge_reports_failure_with_the_table() {
    let o = flatgh(&["converge", "--spec", "builtin:tate", "--s", "1e-2,1e-3,1e-4", "--resolution", "32", "--samples", "40", "--threshold", "1e-6"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 4);
    assert!(stderr(&o).contains("final gh_upper"));
}

#[test]
fn converge_needs_maximal_degeneracy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cone.toml");
    let text = BAD_BALL.split("[[balls]]").next().unwrap().replace("alpha = -1", "alpha = 0") + "[[junctions]]\nid = \"v\"\n";
    fs::write(&path, text).unwrap();
    let o = flatgh(&["converge", "--spec", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not maximally degenerate"));
}

#[test]
fn edge_target_on_tate() {
    let o = flatgh(&["asymptotics", "--spec", "builtin:tate", "--target", "edge:e0", "--tau", "0,1", "--resolution", "64", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["fit"]["c"].as_f64().unwrap() - 1.0).abs() < 0.02);
    assert!(v["fit"]["w"].as_f64().unwrap().abs() < 1e-3);
    assert_eq!(v["spec_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
}

#[test]
fn diameter_target_on_theta() {
    let o = flatgh(&["asymptotics", "--spec", "builtin:theta", "--target", "diameter", "--resolution", "128", "--samples", "200", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["fit"]["c"].as_f64().unwrap() - 1.5).abs() < 0.075);
    assert!(v["fit"]["w"].as_f64().unwrap().abs() < 1e-2);
}

#[test]
fn bad_targets_are_input_errors() {
    for target in ["class:e9:e1:0", "class:e0:e1:99", "edge:x", "volume"] {
        let o = flatgh(&["asymptotics", "--spec", "builtin:theta", "--target", target, "--resolution", "16"]);
        assert_eq!(o.status.code(), Some(2), "{target}");
    }
    let o = flatgh(&["asymptotics", "--spec", "builtin:tate", "--target", "edge:e0", "--s", "1e-3,1e-2,1e-4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let args = ["converge", "--spec", "builtin:theta", "--s", "1e-2,1e-3,1e-4", "--resolution", "32", "--samples", "60", "--format", "json", "--threshold", "1"];
    let a = flatgh(&args);
    let b = flatgh(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn selftest_subset_passes_and_tampering_fails() {
    let o = flatgh(&["selftest", "--only", "5,6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("[PASS] 5.") && stdout(&o).contains("[PASS] 6."));

    let o = flatgh(&["selftest", "--only", "2", "--tolerance-scale", "1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL] 2."));

    assert_eq!(flatgh(&["selftest", "--only", "9"]).status.code(), Some(2));
}

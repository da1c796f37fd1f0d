use std::path::Path;
use std::process::{Command, Output};

fn srwlab(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srwlab"))
        .args(args)
        .env("SRWLAB_OUTPUT_DIR", out_dir)
        .output()
        .expect("srwlab runs")
}

#[test]
fn constants_json_has_gamma_and_error_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = srwlab(&["constants", "--d", "3", "--output", "-"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["gamma"].as_f64().unwrap() - 0.659463).abs() < 1e-6);
    for key in ["alpha", "lambda", "p", "kappa", "x0_b", "error_budget"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["error_budget"]["gamma"].as_f64().unwrap() < 1e-9);
}

#[test]
fn default_output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = srwlab(&["constants", "--format", "csv"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    assert!(csv.starts_with("name,value,abs_error\n"));
    assert!(csv.contains("gamma,0.659462670449,"));
}

#[test]
fn boundary_grid_rows_and_landmark_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    let out = srwlab(
        &[
            "boundary",
            "--set",
            "B",
            "--d",
            "3",
            "--grid",
            "200",
            "--output",
            path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 200);
    // x = 0: upper end at the y-axis intercept; x = lambda: the single point
    // (lambda, lambda (1 - gamma)).
    let first = &rows[0];
    let last = &rows[199];
    assert_eq!(first[0], 0.0);
    assert!((first[2] - 0.729766643148).abs() < 1e-10);
    assert!((last[0] - 0.928306406259).abs() < 1e-10);
    assert!((last[1] - last[2]).abs() < 1e-6);
    assert!((last[2] - 0.928306406259 * (1.0 - 0.659462670449)).abs() < 1e-6);
    let landmarks = std::fs::read_to_string(dir.path().join("b.landmarks.csv")).unwrap();
    assert!(landmarks.lines().any(|l| l.starts_with("max_x,")));
}

#[test]
fn pmf_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = srwlab(
        &[
            "pmf",
            "--law",
            "joint_two_point",
            "--order",
            "3",
            "--output",
            "-",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,l,probability"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn verify_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = srwlab(
            &[
                "verify",
                "--suite",
                "distributions",
                "--d",
                "3",
                "--seed",
                "7",
                "--horizon",
                "500",
                "--replications",
                "2000",
                "--output",
                path.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(out.status.code().is_some_and(|c| c == 0 || c == 1));
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn hard_failure_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = srwlab(
        &[
            "verify",
            "--suite",
            "levels",
            "--horizon",
            "2000",
            "--replications",
            "3",
            "--tolerance",
            "1e-9",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("verify-levels.csv")).unwrap();
    assert!(csv.contains(",fail,no,"));
}

#[test]
fn diagnostics_never_fail_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = srwlab(
        &[
            "verify",
            "--suite",
            "containment",
            "--horizon",
            "2000",
            "--replications",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("verify-containment.json")).unwrap())
            .unwrap();
    assert!(report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["class"] == "diagnostic"));
}

#[test]
fn invalid_flags_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["constants", "--unknown"][..],
        &["verify", "--suite", "levels", "--law", "geometric_site"],
        &["verify", "--suite", "levels", "--horizon", "0"],
        &["boundary", "--set", "Q"],
        &["fillin", "--epsilon", "1.5"],
    ] {
        let out = srwlab(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn fillin_table_lists_both_sets() {
    let dir = tempfile::tempdir().unwrap();
    let out = srwlab(
        &[
            "fillin",
            "--horizon",
            "20000",
            "--epsilon",
            "0.5",
            "--output",
            "-",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("set,k,l,realized\n"));
    assert!(text.lines().any(|l| l.starts_with("B,")));
    assert!(text.lines().any(|l| l.starts_with("D,")));
}

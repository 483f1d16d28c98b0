use std::process::{Command, Output};

use stabindex::report::EstimateReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabindex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn estimate_shows_exact_column() {
    let o = run(&[
        "estimate",
        "--family",
        "cont-eq",
        "--n",
        "3",
        "--samples",
        "20000",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("least squares"));
    assert!(s.contains("0.06250"));
    assert!(s.contains("0.43750"));
}

#[test]
fn discrete_system_has_no_refined_column() {
    let o = run(&[
        "estimate",
        "--family",
        "disc-sys",
        "--n",
        "1",
        "--samples",
        "20000",
    ]);
    assert_eq!(code(&o), 0);
    assert!(!stdout(&o).contains("least squares"));
}

#[test]
fn discrete_system_two_is_near_the_table() {
    let o = run(&[
        "estimate",
        "--family",
        "disc-sys",
        "--n",
        "2",
        "--samples",
        "200000",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let r: EstimateReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r.observed.values[0] - 0.46348).abs() < 6e-3);
}

#[test]
fn json_has_histogram_schema() {
    let o = run(&[
        "estimate",
        "--family",
        "disc-eq",
        "--n",
        "2",
        "--samples",
        "5000",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let h = &v["histogram"];
    for key in ["family", "n", "M", "seed", "counts", "indeterminate"] {
        assert!(!h[key].is_null(), "missing {key}");
    }
    assert_eq!(h["family"], "disc-eq");
    assert_eq!(h["M"], 5000);
    let r: EstimateReport = serde_json::from_value(v).unwrap();
    assert_eq!(
        r.histogram.counts.iter().sum::<u64>() + r.histogram.indeterminate,
        5000
    );
}

#[test]
fn output_is_reproducible_and_file_matches_stdout() {
    let args = [
        "estimate",
        "--family",
        "cont-sys",
        "--n",
        "4",
        "--samples",
        "10000",
        "--format",
        "csv",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let path = std::env::temp_dir().join(format!("stabindex-cli-{}.csv", std::process::id()));
    let path_str = path.to_str().unwrap();
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path_str]);
    let c = run(&with_out);
    assert_eq!(code(&c), 0);
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["estimate", "--family", "nope", "--n", "2"],
        vec!["estimate", "--family", "cont-sys", "--n", "0"],
        vec![
            "estimate",
            "--family",
            "cont-sys",
            "--n",
            "2",
            "--samples",
            "0",
        ],
        vec![
            "estimate", "--family", "cont-sys", "--n", "2", "--tol", "-1",
        ],
        vec![
            "estimate", "--family", "cont-sys", "--n", "2", "--format", "xml",
        ],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&run(&args)), 1, "{args:?}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["estimate", "--help"])), 0);
}

#[test]
fn too_many_indeterminate_exits_two() {
    let o = run(&[
        "estimate",
        "--family",
        "disc-eq",
        "--n",
        "10",
        "--samples",
        "20000",
        "--tol",
        "0.5",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn convergence_prints_slope() {
    let o = run(&[
        "convergence",
        "--family",
        "disc-eq",
        "--n",
        "2",
        "--index",
        "0",
        "--min-exp",
        "2",
        "--max-exp",
        "4",
    ]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("10")).count(), 3);
    assert!(s.lines().last().unwrap().starts_with("slope "));
}

#[test]
fn convergence_single_point_has_no_slope() {
    let o = run(&[
        "convergence",
        "--family",
        "cont-sys",
        "--n",
        "1",
        "--index",
        "0",
        "--min-exp",
        "3",
        "--max-exp",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("slope n/a"));
}

#[test]
fn convergence_without_exact_value_is_a_usage_error() {
    let o = run(&[
        "convergence",
        "--family",
        "disc-sys",
        "--n",
        "3",
        "--index",
        "1",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_flags_a_broken_closed_form() {
    let o = run(&["verify", "--samples", "20000", "--arctan-scale", "1.1"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o)
        .lines()
        .any(|l| l.starts_with("FAIL") && l.contains("erf")));
}

#[test]
fn verify_flags_a_loose_tolerance() {
    let o = run(&["verify", "--samples", "20000", "--tol", "1e-2"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o)
        .lines()
        .any(|l| l.starts_with("FAIL indeterminate fraction disc-eq")));
}

use std::path::Path;
use std::process::{Command, Output};

fn weightlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weightlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_eps_minus() {
    let o = weightlab(&["solve", "--equation", "eps-minus", "--q", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["root"].as_f64().unwrap() - 0.465940).abs() < 5e-6);
    assert!(v["residual"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn constant_weight_constants() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "c.json", r#"{"pieces":[{"a":0.0,"b":1.0,"coeff":2.5,"exponent":0.0}]}"#);
    let o = weightlab(&["constants", "--weight", &w]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rh_1"]["value"].as_f64(), Some(0.0));
    assert_eq!(v["a_inf"]["value"].as_f64(), Some(1.0));
}

#[test]
fn constants_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "t.json", r#"{"pieces":[{"a":0.0,"b":1.0,"coeff":1.0,"exponent":1.0}]}"#);
    let out = dir.path().join("r.json");
    let o = weightlab(&[
        "constants",
        "--weight",
        &w,
        "--which",
        "rh1,ainf,rhp,ap",
        "--p",
        "2,3",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let report: weightlab::constants::ConstantsReport = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_value(&report).unwrap();
    assert_eq!(again, serde_json::from_str::<serde_json::Value>(&text).unwrap());
    assert!((report.a_inf.unwrap().value - std::f64::consts::E / 2.0).abs() < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(
        dir.path(),
        "s.json",
        r#"{"pieces":[{"a":0.0,"b":0.3,"coeff":1.0,"exponent":0.0},{"a":0.3,"b":1.0,"coeff":5.0,"exponent":0.0}]}"#,
    );
    for args in [
        vec!["constants", "--weight", &w, "--which", "rh1,ainf,rh1prime", "--nested-resolution", "16"],
        vec!["bellman", "--surface", "gehring", "--q", "1.5", "--verify", "hessian", "--grid", "200"],
        vec![
            "dyadic",
            "--weight",
            &w,
            "--mode",
            "log",
            "--q",
            "2",
            "--q1",
            "2.4",
            "--depth",
            "6",
            "--verify",
            "ainf-upper",
        ],
    ] {
        let (a, b) = (weightlab(&args), weightlab(&args));
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["bellman", "--surface", "ainf-upper", "--q", "2", "--verify", "bounds", "--grid", "40"];
    let one = Command::new(env!("CARGO_BIN_EXE_weightlab"))
        .args(args)
        .env("WEIGHTLAB_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_weightlab"))
        .args(args)
        .env("WEIGHTLAB_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_weightlab"))
        .args(args)
        .env("WEIGHTLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sweep_csv() {
    let o = weightlab(&["sweep", "--qs", "2,1000000", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("Q,e_ratio,funny_ratio"));
    let last: Vec<&str> = lines.last().unwrap().split(',').collect();
    let e_ratio: f64 = last[1].parse().unwrap();
    assert!((e_ratio - std::f64::consts::E).abs() < 0.02 * std::f64::consts::E);
}

#[test]
fn empty_sweep_is_header_only() {
    let o = weightlab(&["sweep", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "Q,e_ratio,funny_ratio\n");
}

#[test]
fn extremal_weight_feeds_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("funny.json");
    let o = weightlab(&[
        "extremal",
        "--family",
        "funny",
        "--q",
        "1",
        "--emit",
        "json",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = weightlab(&["constants", "--weight", out.to_str().unwrap(), "--resolution", "300"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["rh_1"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn extremal_report_passes() {
    let o = weightlab(&[
        "extremal",
        "--family",
        "gehring-interior",
        "--q",
        "1",
        "--x",
        "2",
        "--y",
        "2.5",
        "--emit",
        "report",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn verification_failure_exits_one() {
    // a tolerance below the achievable linearity makes the check fail
    let o = weightlab(&[
        "bellman",
        "--surface",
        "gehring",
        "--q",
        "1",
        "--verify",
        "tangent",
        "--tolerance",
        "1e-30",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn split_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(
        dir.path(),
        "j.json",
        r#"{"pieces":[{"a":0.0,"b":0.7,"coeff":1.0,"exponent":0.0},{"a":0.7,"b":1.0,"coeff":1000.0,"exponent":0.0}]}"#,
    );
    let o = weightlab(&[
        "dyadic", "--weight", &w, "--mode", "entropy", "--q", "3.9695", "--q1", "3.9698", "--depth", "1",
        "--delta0", "0.45",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"pieces":[{"a":0.0,"b":1.0,"coef":1.0,"exponent":0.0}]}"#);
    let gap = write(dir.path(), "gap.json", r#"{"pieces":[{"a":0.0,"b":0.5,"coeff":1.0,"exponent":0.0}]}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["constants", "--weight", &bad],
        vec!["constants", "--weight", &gap],
        vec!["constants", "--weight", "/does/not/exist.json"],
        vec!["solve", "--equation", "gamma-log"],
        vec!["bellman", "--surface", "ainf-upper", "--q", "0.5", "--eval", "1,0"],
        vec!["bellman", "--surface", "ainf-lower", "--q", "2", "--verify", "bounds"],
        vec!["extremal", "--family", "ainf", "--q", "2"],
        vec!["sweep", "--qs", "-1"],
        vec!["nonsense"],
        vec!["solve", "--equation", "funny", "--q", "1", "--resolution", "1"],
    ];
    for args in cases {
        let o = weightlab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = weightlab(&["constants", "--weight", &bad]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `coef`"));
}

#[test]
fn unwritable_output_exits_two() {
    let o = weightlab(&["solve", "--equation", "funny", "--q", "1", "-o", "/nonexistent-dir/x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_reals_have_fifteen_digits() {
    let o = weightlab(&["solve", "--equation", "gamma-entropy", "--q", "1", "--format", "csv"]);
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("gamma_plus.root,")).unwrap();
    assert_eq!(line, "gamma_plus.root,3.14619322062058");
}

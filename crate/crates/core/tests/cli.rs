use std::process::Command;

fn arkc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arkc"))
}

#[test]
fn table2_writes_expected_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.csv");
    let st = arkc().args(["table2", "--a", "1", "--tol", "1e-2", "--out"]).arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "a,tol,steps,fd_evals,fa_evals,s_max,linf_error");
    assert_eq!(lines.count(), 1);
}

#[test]
fn invalid_tolerance_exits_one() {
    let st = arkc().args(["integrate", "--tol", "2"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    let st = arkc().args(["integrate", "--problem", "nope"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
}

#[test]
fn integrate_json_reports_counters() {
    let out = arkc().args(["integrate", "--problem", "burgers", "--tol", "1e-3", "--format", "json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["report"];
    assert!(r["steps_accepted"].as_u64().unwrap() > 0);
    assert!(r["fd_evals"].as_u64().unwrap() > r["fa_evals"].as_u64().unwrap());
    assert!(r["final_error_vs_reference"].as_f64().unwrap() < 1e-2);
}

#[test]
fn fixed_step_run_on_zero_problem_is_exact() {
    let out = arkc()
        .args(["integrate", "--problem", "zero", "--fixed-steps", "4", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["final_error_vs_reference"].as_f64(), Some(0.0));
}

#[test]
fn tampered_table_fails_verification() {
    let ok = arkc().args(["verify-tables"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = arkc().args(["verify-tables", "--tamper", "1:50"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("FAIL"));
}

#[test]
fn empty_table_passes_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(&path, r#"{"bands":[],"s_cap":500}"#).unwrap();
    let out = arkc().args(["verify-tables", "--table"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn check_lemma_is_seeded() {
    let a = arkc().args(["check-lemma", "--samples", "50", "--seed", "7", "--format", "json"]).output().unwrap();
    let b = arkc().args(["check-lemma", "--samples", "50", "--seed", "7", "--format", "json"]).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn stability_json_metrics() {
    let out = arkc()
        .args(["stability", "--stages", "10", "--eta", "3", "--n-p", "200", "--n-q", "100", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.to_string().contains("d_s"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(arkc().arg("--help").output().unwrap().status.code(), Some(0));
}

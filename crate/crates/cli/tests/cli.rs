use std::process::{Command, Output};

fn pythag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pythag"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn coeff_agrees_for_both_algorithms() {
    let o = pythag(&["coeff", "-m", "scalar:0.3", "-g", "((..).)/(.(..))"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.matches("0.977418567191").count(), 2, "{out}");
}

#[test]
fn xj_matches_tree_formula() {
    let o = pythag(&["xj", "-j", "13", "-omega", "0.5i"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(
        out.matches("-0.050000000000+0.100000000000i").count(),
        2,
        "{out}"
    );
}

#[test]
fn reduced_verify_exits_zero() {
    let o = pythag(&["verify", "all", "--reduced"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains(" 0 failed"));
}

#[test]
fn verify_json_is_parseable() {
    let o = pythag(&["verify", "scalar", "--reduced", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.is_object() || v.is_array());
}

#[test]
fn unknown_module_lists_ids() {
    let o = pythag(&["coeff", "-m", "bogus", "-g", "./."]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("lebesgue") && err.contains("connes-landi"),
        "{err}"
    );
}

#[test]
fn parse_error_exits_two() {
    let o = pythag(&["coeff", "-m", "trivial", "-g", "((..)/(.."]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax error"));
}

#[test]
fn rotlimit_csv_header() {
    let o = pythag(&[
        "rotlimit",
        "-m",
        "scalar:0.3",
        "-j",
        "1",
        "-N",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,re,im,abs_y"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn enumerate_counts_f_ball() {
    let o = pythag(&["enumerate", "-leaves", "4", "-flavor", "F"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 17);
    assert!(String::from_utf8_lossy(&o.stderr).contains("17 elements"));
}

#[test]
fn cuntz_skips_non_cuntz_module() {
    let o = pythag(&["cuntz", "-m", "car"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("not Cuntz isometries"));
}

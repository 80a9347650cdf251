use std::process::{Command, Output};

fn dlra(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dlra"));
    cmd.args(args).env_remove("DLRA_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    dlra(args).output().unwrap()
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let out = run(&["lyapunov", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ground-state"));
}

#[test]
fn lyapunov_is_byte_identical() {
    let a = run(&["lyapunov", "--preset", "desk", "--seed", "1"]);
    let b = run(&["lyapunov", "--preset", "desk", "--seed", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: command=lyapunov "));
    assert_eq!(lines.next().unwrap(), "series,rank,h,index,value,max_parity_defect");
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(2).all(|l| l.ends_with(",1")), "{text}");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dlra(&["tucker-add", "--norms", "0,0.01"]).env("DLRA_OUT_DIR", dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("tucker-add.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn out_flag_wins_over_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub").join("x.csv");
    let out = dlra(&["tucker-add", "--norms", "0", "--out", path.to_str().unwrap()]).env("DLRA_OUT_DIR", dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(path.exists());
    assert!(!dir.path().join("tucker-add.csv").exists());
}

#[test]
fn bad_configuration_exits_one() {
    // h must divide T.
    let out = run(&["lyapunov", "--h", "0.03"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["ground-state", "--h", "0.01,0.02"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["ground-state", "--K", "30"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn blow_up_writes_diagnostic_row_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let out = run(&["ground-state", "--h", "2000", "--T", "2000", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l.starts_with("fermion:failed,1,NaN")));
    assert!(text.lines().last().unwrap().starts_with("# failure: "));
}

#[test]
fn explicit_full_rank_is_exact() {
    let out = run(&["matrix-explicit", "--rank", "100", "--h", "0.0125"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("sym_step,100,")).unwrap();
    let err: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!(err <= 1e-6, "{row}");
}

use std::process::Command;

fn lab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_caloric-lab"));
    c.env_remove("CALORIC_OUT_DIR");
    c
}

#[test]
fn list_names_every_experiment() {
    let out = lab().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["soliton-energy", "caloric-gauge-residuals", "poincare-gap", "laplacian-consistency"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn run_writes_a_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab().args(["run", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("soliton-energy.csv")).unwrap();
    assert!(csv.starts_with("experiment,"));
    assert!(csv.contains(",energy,1.2566"));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["run", "--format", "json", "--set", "experiment=laplacian-consistency"])
        .env("CALORIC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("laplacian-consistency.json").exists());
}

#[test]
fn config_files_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("gap.cfg");
    std::fs::write(&file, "experiment = poincare-gap\ngrid.d = 2\n").unwrap();
    let out = lab().arg("run").arg("--config").arg(&file).args(["--set", "d=3", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("poincare-gap.csv")).unwrap();
    let row = csv.lines().find(|l| l.contains(",gap,")).unwrap();
    assert!(row.ends_with(",gap,1.0000000000000000e0"), "{row}");
}

#[test]
fn configuration_errors_exit_one_and_name_the_key() {
    let out = lab().args(["run", "--set", "lambda=1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
    let out = lab().args(["run", "--set", "bogus=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn threshold_violations_exit_two_and_name_the_metric() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab().args(["run", "--set", "n=30", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("relative_error"));
}

#[test]
fn sweep_and_converge_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["sweep", "--set", "experiment=poincare-gap", "--vary", "d=2,3", "--jobs", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = std::fs::read_to_string(dir.path().join("poincare-gap-sweep.csv")).unwrap();
    assert_eq!(sweep.lines().filter(|l| l.contains(",min_rayleigh,")).count(), 2);

    let out = lab()
        .args(["converge", "--set", "experiment=laplacian-consistency", "--levels", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let conv = std::fs::read_to_string(dir.path().join("laplacian-consistency-converge.csv")).unwrap();
    assert!(conv.contains(",order,1.9"));

    let out = lab().args(["converge", "--levels", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_runs_produce_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = lab()
            .args(["run", "--set", "experiment=heat-smoothing", "--format", "json", "--out"])
            .arg(d.path())
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("heat-smoothing.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

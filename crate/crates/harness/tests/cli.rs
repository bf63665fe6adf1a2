use std::path::Path;
use std::process::Command;

fn swlab(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_swlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn swlab");
    status.status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.ini");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn passing_run_exits_zero_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(swlab(&["fixed-point", "--beta", "0.8", "--lambda", "2"], dir.path()), 0);
    assert!(dir.path().join("fixed-point_summary.json").exists());
    assert!(dir.path().join("fixed-point_grid.csv").exists());
}

#[test]
fn tolerance_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // far too few steps to leave a random start
    let code = swlab(
        &["glauber", "--n", "60", "--trials", "2", "--set", "steps=5", "--set", "tolerance=0.01"],
        dir.path(),
    );
    assert_eq!(code, 1);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(swlab(&["no-such-experiment"], dir.path()), 2);
    assert_eq!(swlab(&["glauber", "--trials", "0"], dir.path()), 2);
    assert_eq!(swlab(&["fixed-point", "--beta-grid", "0.5:0.1:0.1"], dir.path()), 2);
    let cfg = write_config(dir.path(), "[glauber]\nnot_a_key = 3\n");
    assert_eq!(swlab(&["glauber", "--config", &cfg], dir.path()), 2);
    let cfg = write_config(dir.path(), "[glauber]\ntrials = 0\n");
    assert_eq!(swlab(&["glauber", "--config", &cfg], dir.path()), 2);
    let missing = dir.path().join("missing.ini").display().to_string();
    assert_eq!(swlab(&["glauber", "--config", &missing], dir.path()), 2);
    // AT condition fails at the warm start
    assert_eq!(
        swlab(&["compare", "--n", "50", "--beta", "3", "--lambda", "0.4", "--set", "warm_start=0.1"], dir.path()),
        2
    );
    assert_eq!(swlab(&["magnetization", "--beta", "1.2", "--n", "50"], dir.path()), 2);
}

#[test]
fn unwritable_summary_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("fixed-point_summary.json")).unwrap();
    assert_eq!(swlab(&["fixed-point"], dir.path()), 3);
}

#[test]
fn shipped_config_parses_for_every_experiment() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.ini");
    for kind in swlab::ExperimentKind::ALL {
        swlab::ExperimentConfig::from_file(&path, kind).unwrap_or_else(|e| panic!("{kind}: {e}"));
    }
}

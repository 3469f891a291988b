use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosparse"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn recover_is_reproducible() {
    let args = ["recover", "--m", "20", "--n", "36", "--d", "24", "--l", "21", "--seed", "5"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run(&args, a.path());
    let second = run(&args, b.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let strip = |o: &Output| {
        String::from_utf8_lossy(&o.stdout).lines().filter(|l| !l.starts_with("wrote")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&first), strip(&second));
    let files = snapshot(a.path());
    assert!(!files.is_empty());
    assert_eq!(files, snapshot(b.path()));
}

#[test]
fn certify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["certify", "--flavor", "nsp", "--order", "2", "--q", "0.5", "--m", "4", "--n", "8", "--d", "6", "--seed", "3"];
    let a = run(&args, dir.path());
    let b = run(&args, dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn infeasible_requests_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // More zero rows than the operator has.
    let too_cosparse = run(&["recover", "--m", "10", "--n", "20", "--d", "16", "--l", "30"], dir.path());
    assert_eq!(too_cosparse.status.code(), Some(2));
    let bad_q = run(&["thresholds", "--extra", "1.5:1:1"], dir.path());
    assert_eq!(bad_q.status.code(), Some(2), "{}", String::from_utf8_lossy(&bad_q.stderr));
}

#[test]
fn config_file_supplies_defaults_that_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"mode": "noisy"}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let noisy = run(&["thresholds", "--config", cfg], dir.path());
    let plain = run(&["thresholds", "--mode", "noisy"], dir.path());
    let overridden = run(&["thresholds", "--config", cfg, "--mode", "noiseless"], dir.path());
    let default = run(&["thresholds"], dir.path());
    assert!(noisy.status.success());
    assert_eq!(noisy.stdout, plain.stdout);
    assert_eq!(overridden.stdout, default.stdout);
    assert_ne!(noisy.stdout, default.stdout);
}

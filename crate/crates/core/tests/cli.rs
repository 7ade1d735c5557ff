use std::process::{Command, Output};

use pnlab::harness::{read_frames, read_results, COMPARISON_HEADER, RESULT_HEADER};

fn pnlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnlab"))
        .args(args)
        .env("PNLAB_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn run_to_stdout_writes_results_table() {
    let out = pnlab(&[
        "run",
        "--snr",
        "10,20",
        "--frames",
        "3",
        "--iters",
        "2",
        "--receiver",
        "eks",
        "--seed",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read_results(&out.stdout[..]).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.n_frames == 3 && r.seed == 4));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULT_HEADER.join(","));
    assert!(!text.contains('\r'));
}

#[test]
fn unknown_config_key_warns_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "snr_db_grid = [20.0]\nn_frames = 1\niters = 1\nreceivers = [\"known_pn\"]\n\
         n_data_symbols = 128\npilot_period = 64\nfrobnicate = 3\n",
    )
    .unwrap();
    let out = pnlab(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobnicate"));
}

#[test]
fn invalid_config_exits_with_field_name() {
    let out = pnlab(&["run", "--frames", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_frames"));
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "snr_db_grid = [12.0]\nn_frames = 6\niters = 2\nreceivers = [\"bpmfep\", \"eks\"]\n\
         n_data_symbols = 128\npilot_period = 64\n",
    )
    .unwrap();
    let results = dir.path().join("res.csv");
    let out = pnlab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        results.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let frames =
        read_frames(std::fs::File::open(dir.path().join("res.frames.csv")).unwrap()).unwrap();
    assert_eq!(frames.len(), 2 * 2 * 6);

    let out = pnlab(&["summarize", "--in", results.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), COMPARISON_HEADER.join(","));
    assert_eq!(lines.count(), 2);
}

#[test]
fn summarize_missing_file_fails() {
    let out = pnlab(&["summarize", "--in", "/nonexistent/r.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = pnlab(&["selftest"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

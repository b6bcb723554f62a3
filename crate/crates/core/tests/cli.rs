use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use guard_can::cli::stages::sha256_file;

fn guard_can(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guard-can"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = guard_can(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &str = "\
window_size = 50
sequence_length = 10
encoder.epochs = 2
detector.epochs = 2
synth.preset = desk-mixed
synth.duration = 30
synth.seed = 4
";

fn setup(dir: &Path, work: &str) -> PathBuf {
    let cfg = dir.join("small.cfg");
    fs::write(&cfg, format!("{SMALL}work_dir = {work}\ninput = corpus.csv\nsynth.output = corpus.csv\n")).unwrap();
    if !dir.join("corpus.csv").exists() {
        ok(dir, &["synth", "--config", "small.cfg"]);
    }
    cfg
}

fn artifacts(root: &Path) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, sha256_file(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn synth_output_is_a_function_of_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = |out: &'static str, seed: &'static str| {
        ["synth", "--synth-preset", "desk-mixed", "--synth-duration", "12", "--synth-seed", seed, "--synth-output", out]
    };
    let table = ok(d, &args("a.csv", "9"));
    ok(d, &args("b.csv", "9"));
    ok(d, &args("c.csv", "10"));
    assert!(table.contains("Flooding"));
    let h = |f: &str| sha256_file(&d.join(f)).unwrap();
    assert_eq!(h("a.csv"), h("b.csv"));
    assert_ne!(h("a.csv"), h("c.csv"));
}

#[test]
fn synth_accepts_custom_ecus_and_attacks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--synth-duration",
            "2",
            "--synth-ecu",
            "0x100 10 c:1 n:0:1",
            "--synth-ecu",
            "0x200 20 w:128:100:150:3",
            "--synth-attack",
            "flooding 0.5 0.2 rate=100",
            "--synth-output",
            "x.csv",
        ],
    );
    let text = fs::read_to_string(d.join("x.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",Flooding")).count(), 20);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(guard_can(d, &["run", "--window-size", "0"]).status.code(), Some(2));
    assert_eq!(guard_can(d, &["run", "--threshold", "1.5"]).status.code(), Some(2));
    assert_eq!(guard_can(d, &["preprocess", "--input", "missing.csv"]).status.code(), Some(3));
    fs::write(d.join("bad.cfg"), "no_such_key = 1\n").unwrap();
    assert_eq!(guard_can(d, &["run", "--config", "bad.cfg"]).status.code(), Some(2));

    setup(d, "w");
    let out = guard_can(d, &["run", "--config", "small.cfg", "--encoder-lr", "1e300"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train-encoder"));
}

#[test]
fn stage_by_stage_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "staged");
    for stage in ["preprocess", "train-encoder", "embed", "train-detector", "detect", "evaluate"] {
        ok(d, &[stage, "--config", "small.cfg"]);
    }
    let summary = ok(d, &["run", "--config", "small.cfg", "--work-dir", "whole"]);
    assert!(summary.starts_with("Win"));
    assert_eq!(artifacts(&d.join("staged")), artifacts(&d.join("whole")));
}

#[test]
fn run_resumes_and_notices_stale_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "w");
    ok(d, &["run", "--config", "small.cfg"]);
    let ckpt = d.join("w/encoder.ckpt");
    let stamp = fs::metadata(&ckpt).unwrap().modified().unwrap();

    let out = guard_can(d, &["run", "--config", "small.cfg"]);
    assert!(out.status.success());
    assert_eq!(fs::metadata(&ckpt).unwrap().modified().unwrap(), stamp);

    // a changed detector setting retrains only the detector side
    let before = sha256_file(&ckpt).unwrap();
    ok(d, &["run", "--config", "small.cfg", "--detector-seed", "1"]);
    assert_eq!(sha256_file(&ckpt).unwrap(), before);

    // a damaged artifact is rebuilt
    fs::write(d.join("w/embeddings/test.csv"), "garbage").unwrap();
    ok(d, &["run", "--config", "small.cfg"]);
    assert!(fs::read_to_string(d.join("w/embeddings/test.csv")).unwrap().starts_with("window_index"));
}

#[test]
fn entropy_writes_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "w");
    ok(d, &["entropy", "--config", "small.cfg", "--entropy-sizes", "10:100:10"]);
    let text = fs::read_to_string(d.join("w/entropy.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "window_size,mean,median,min,max,std,growth_rate");
    assert_eq!(rows.len(), 11);
    assert!(rows[1].ends_with(','));
}

#[test]
fn sweep_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "w");
    ok(
        d,
        &[
            "sweep",
            "--config",
            "small.cfg",
            "--encoder-epochs",
            "1",
            "--detector-epochs",
            "1",
            "--sweep-window-sizes",
            "50,75",
            "--sweep-sequence-lengths",
            "5,10",
        ],
    );
    let text = fs::read_to_string(d.join("w/sweep/summary.csv")).unwrap();
    // header + 2 window sizes × 2 lengths × 3 views
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
}

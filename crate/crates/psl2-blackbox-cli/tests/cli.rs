use psl2bb_cli::bench::HEADER;
use psl2bb_cli::commands::main_with_args;
use std::path::{Path, PathBuf};
use std::process::Command;

fn run(args: &[&str]) -> (u8, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["psl2bb"];
    argv.extend_from_slice(args);
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unipotent_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "g.json", r#"{"type": "PSL2", "field": {"p": 13}}"#);
    let first = run(&["--spec", s(&path), "--seed", "4", "unipotent"]);
    let second = run(&["--spec", s(&path), "--seed", "4", "unipotent"]);
    assert_eq!(first.0, 0, "{}", first.2);
    assert_eq!(first.1, second.1);
    let cert: serde_json::Value = serde_json::from_str(&first.1).unwrap();
    assert_eq!(cert["p"], "13");
}

#[test]
fn unipotent_with_hint_over_an_extension_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "g.json", r#"{"type": "PGL2", "field": {"p": 5, "k": 2}, "seed": 2}"#);
    let (code, out, err) = run(&["--spec", s(&path), "unipotent", "--p-hint", "5"]);
    assert_eq!(code, 0, "{err}");
    let cert: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(cert["p"], "5");
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "g.json", r#"{"type": "PGL2", "field": {"p": 11}}"#);
    let out_path = dir.path().join("cert.json");
    let (code, _, err) = run(&["--spec", s(&path), "--out", s(&out_path), "unipotent"]);
    assert_eq!(code, 0, "{err}");
    let (_, stdout, _) = run(&["--spec", s(&path), "unipotent"]);
    assert_eq!(std::fs::read_to_string(&out_path).unwrap().trim(), stdout.trim());
}

#[test]
fn frame_file_drives_rho() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "g.json", r#"{"type": "PGL2", "field": {"p": 13}, "seed": 1}"#);
    let frame = dir.path().join("frame.json");
    let (code, _, err) = run(&["--spec", s(&path), "--out", s(&frame), "coordinatize"]);
    assert_eq!(code, 0, "{err}");
    for name in ["theta", "e1", "random", "identity"] {
        let (code, out, err) = run(&["rho", "--frame", s(&frame), "--element", name, "--round-trip"]);
        assert_eq!(code, 0, "{name}: {err}");
        assert!(out.contains("matrix"), "{name}: {out}");
    }
    let (code, out, _) = run(&["rho", "--frame", s(&frame), "--element", "e1"]);
    assert_eq!(code, 0);
    let m = dir.path().join("m.json");
    std::fs::write(&m, &out).unwrap();
    let (code, _, err) = run(&["rho", "--frame", s(&frame), "--matrix", s(&m)]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_e = spec(dir.path(), "e.json", r#"{"type": "PSL2", "field": {"p": 13}, "E": "7"}"#);
    let (code, _, err) = run(&["--spec", s(&bad_e), "unipotent"]);
    assert_eq!(code, 1, "{err}");
    let bad_p = spec(dir.path(), "p.json", r#"{"type": "PSL2", "field": {"p": 15}}"#);
    assert_eq!(run(&["--spec", s(&bad_p), "unipotent"]).0, 1);
    let even = spec(dir.path(), "two.json", r#"{"type": "PSL2", "field": {"p": 2, "k": 3}}"#);
    assert_eq!(run(&["--spec", s(&even), "unipotent"]).0, 1);
    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["--spec", s(&missing), "unipotent"]).0, 1);
    assert_eq!(run(&["unipotent", "--bogus"]).0, 1);
}

#[test]
fn exhausted_budget_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "g.json", r#"{"type": "PSL2", "field": {"p": 13}}"#);
    let status = Command::new(env!("CARGO_BIN_EXE_psl2bb"))
        .args(["--spec", s(&path), "--confidence", "1", "unipotent"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2), "{}", String::from_utf8_lossy(&status.stderr));
}

#[test]
fn seed_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "g.json", r#"{"type": "PSL2", "field": {"p": 7}}"#);
    let direct = Command::new(env!("CARGO_BIN_EXE_psl2bb")).args(["--spec", s(&path), "--seed", "9", "unipotent"]).output().unwrap();
    let via_env = Command::new(env!("CARGO_BIN_EXE_psl2bb"))
        .args(["--spec", s(&path), "unipotent"])
        .env("PSL2BB_SEED", "9")
        .output()
        .unwrap();
    assert!(direct.status.success());
    assert_eq!(direct.stdout, via_env.stdout);
}

#[test]
fn bench_writes_one_row_per_procedure() {
    let (code, out, err) = run(&["bench", "--sweep", "13", "--reps", "2"]);
    assert_eq!(code, 0, "{err}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), psl2bb_cli::bench::PROCEDURES.len());
    for row in rows {
        assert_eq!(row.split(',').count(), HEADER.split(',').count(), "{row}");
        assert!(row.starts_with("13,"));
    }
}

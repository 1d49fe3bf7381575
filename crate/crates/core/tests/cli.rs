//! End-to-end checks of the command-line surface: flags, exit codes, and
//! byte-level determinism through the binary.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aliassr"))
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn usage_errors_exit_1() {
    let out = bin().arg("simulate").arg("--bogus-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(1), "unknown flag should exit 1");

    let out = bin().arg("no-such-subcommand").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "--help is a success");
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = bin()
        .args(["simulate", "--hr-dir"])
        .arg(&empty)
        .args(["--config", "alias:none", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "empty input dir is a data error");

    let out = bin()
        .args(["eval", "--ckpt"])
        .arg(dir.path().join("missing.srw"))
        .arg("--manifest")
        .arg(dir.path().join("missing"))
        .args(["--report"])
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--hr-dir"])
        .arg(dir.path())
        .args(["--config", "alias:diagonal", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("shift mode"), "stderr: {stderr}");
}

#[test]
fn full_pipeline_and_determinism_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    let hr = dir.path().join("hr");
    let status = bin()
        .args(["corpus", "--out"])
        .arg(&hr)
        .args(["--count", "2", "--size", "96", "--seed", "3"])
        .status()
        .unwrap();
    assert!(status.success());

    for run in ["ds_a", "ds_b"] {
        let status = bin()
            .args(["simulate", "--hr-dir"])
            .arg(&hr)
            .args(["--config", "alias:fixed", "--out"])
            .arg(dir.path().join(run))
            .args(["--crop", "24", "--max-crops", "2", "--seed", "11"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        tree_bytes(&dir.path().join("ds_a")),
        tree_bytes(&dir.path().join("ds_b")),
        "simulate must be byte-identical per seed"
    );

    for run in ["m_a.srw", "m_b.srw"] {
        let status = bin()
            .args(["train", "--manifest"])
            .arg(dir.path().join("ds_a"))
            .args(["--iters", "10", "--batch", "1", "--crop", "12", "--seed", "5", "--out"])
            .arg(dir.path().join(run))
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        std::fs::read(dir.path().join("m_a.srw")).unwrap(),
        std::fs::read(dir.path().join("m_b.srw")).unwrap(),
        "training must be byte-identical per seed"
    );

    for run in ["r_a.json", "r_b.json"] {
        let status = bin()
            .args(["eval", "--ckpt"])
            .arg(dir.path().join("m_a.srw"))
            .arg("--manifest")
            .arg(dir.path().join("ds_a"))
            .args(["--split", "train", "--report"])
            .arg(dir.path().join(run))
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        std::fs::read(dir.path().join("r_a.json")).unwrap(),
        std::fs::read(dir.path().join("r_b.json")).unwrap(),
        "eval reports must be byte-identical per seed"
    );
}

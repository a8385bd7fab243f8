use std::process::Command;

fn cellmix() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cellmix"))
}

#[test]
fn dilation_below_the_floor_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = cellmix()
        .args(["decay", "--tau", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("floor"));
}

#[test]
fn bad_grid_and_lambda_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    for args in [["--grid", "100"], ["--lambda", "0.25"]] {
        let out = cellmix()
            .arg("decay")
            .args(args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn unreadable_config_exits_with_three() {
    let out = cellmix()
        .args(["scaling", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn small_decay_run_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    // the subcommand overrides any kind in the file
    std::fs::write(
        &config,
        r#"{"kind": "mincost", "stages": 3, "grid": 128, "budget": {"s": 2.0, "p": 2.0, "cells": 32, "samples": 2}}"#,
    )
    .unwrap();
    let out = cellmix()
        .arg("decay")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    for f in ["decay.csv", "decay.json", "decay.svg"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }
    assert!(stdout
        .lines()
        .any(|l| l.starts_with("PASS geometric_exponent")));
}

//! Drives the `onhbf` binary end to end on a small cohort.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use onh_cli::stages::AblationArtifact;
use tempfile::TempDir;

const SMALL: &str = r#"{
  "out_dir": "run",
  "cohort": { "n_subjects": 10 },
  "training": { "folds": 2, "epochs": 2, "points": 400 }
}"#;

fn onhbf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onhbf"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn workspace(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cfg.json"), config).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn dvc_before_cohort_names_the_missing_volume() {
    let ws = workspace(SMALL);
    let o = onhbf(ws.path(), &["dvc", "--config", "cfg.json"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let msg = stderr(&o);
    assert!(msg.contains("s0000/baseline.json"), "{msg}");
    assert!(msg.contains("gen-cohort"), "{msg}");
}

#[test]
fn malformed_config_reports_the_field_path() {
    let ws = workspace(r#"{ "dvc": { "stride": "four" } }"#);
    let o = onhbf(ws.path(), &["extract", "--config", "cfg.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dvc.stride"), "{}", stderr(&o));

    let ws = workspace(r#"{ "geometry": { "radius": 1.0 } }"#);
    let o = onhbf(ws.path(), &["extract", "--config", "cfg.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geometry.radius"), "{}", stderr(&o));
}

#[test]
fn invalid_values_are_config_errors() {
    let ws = workspace(r#"{ "geometry": { "crop_radius_mm": -1.0 } }"#);
    let o = onhbf(ws.path(), &["extract", "--config", "cfg.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn stages_rerun_to_identical_bytes_and_skip_when_current() {
    let ws = workspace(SMALL);
    let dir = ws.path();
    for stage in ["gen-cohort", "extract"] {
        let o = onhbf(dir, &[stage, "--config", "cfg.json"]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    let clouds = dir.join("run/clouds");
    let before: Vec<(PathBuf, Vec<u8>)> =
        files_under(&clouds).into_iter().map(|p| (p.clone(), fs::read(&p).unwrap())).collect();
    assert_eq!(before.len(), 20);

    let o = onhbf(dir, &["extract", "--config", "cfg.json"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("up to date"), "{}", stderr(&o));

    for (p, _) in &before {
        fs::remove_file(p).unwrap();
    }
    let o = onhbf(dir, &["extract", "--config", "cfg.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (p, bytes) in &before {
        assert_eq!(&fs::read(p).unwrap(), bytes, "{}", p.display());
    }
}

#[test]
fn upstream_from_another_config_is_stale() {
    let ws = workspace(SMALL);
    let dir = ws.path();
    assert!(onhbf(dir, &["gen-cohort", "--config", "cfg.json"]).status.success());
    let o = onhbf(dir, &["extract", "--config", "cfg.json", "--seed", "99"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("stale"), "{}", stderr(&o));
}

#[test]
fn no_strain_ablation_compares_identical_arms() {
    let ws = workspace(SMALL);
    let dir = ws.path();
    let o = onhbf(dir, &["run", "--config", "cfg.json", "--no-strain"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a: AblationArtifact =
        serde_json::from_slice(&fs::read(dir.join("run/ablation/report.json")).unwrap()).unwrap();
    let r = &a.report;
    assert!(!r.strain.use_strain && !r.no_strain.use_strain);
    assert_eq!(r.strain.f1, r.no_strain.f1);
    assert_eq!(r.t_test.p, 1.0);
    assert!(!r.pass);
    let text = fs::read_to_string(dir.join("run/report.txt")).unwrap();
    assert!(text.contains("FAIL"), "{text}");
    assert!(text.contains("[timing] gen-cohort"), "{text}");
}

#[test]
fn train_writes_a_checkpoint_per_fold() {
    let ws = workspace(SMALL);
    let dir = ws.path();
    for stage in ["gen-cohort", "extract", "dvc", "attach", "train"] {
        let o = onhbf(dir, &[stage, "--config", "cfg.json"]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    for f in 0..2 {
        let path = dir.join(format!("run/train/strain/fold{f}.json"));
        let (params, meta) = onh_core::io::read_checkpoint(&path).unwrap();
        assert_eq!(meta.meta.fold, f);
        assert_eq!(params.len(), meta.meta.parameters);
    }
    assert!(dir.join("run/train/strain/reports.json").exists());
}

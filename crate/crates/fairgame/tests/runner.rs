use std::fs;
use std::path::Path;

use fairgame::config::ExperimentConfig;
use fairgame::runner::{run_sweep, verify_manifest, RunManifest, RunStatus, LOG_HEADER};

fn pd_config(out: &Path, alphas: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{
            "env": {{"kind": "repeated_matrix", "payoffs": {{"T": 5, "R": 3, "S": 1, "P": 2}}, "episode_length": 20}},
            "alpha": {alphas},
            "seed": 3,
            "train": {{"learning_rate": 0.5, "critic_learning_rate": 0.1, "gamma": 0.9,
                       "num_envs": 2, "total_steps": 400, "critic_init": 10.0}},
            "output": {out:?}
        }}"#
    );
    serde_json::from_str(&text).unwrap()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn sweep_writes_one_run_directory_per_alpha() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_sweep(&pd_config(tmp.path(), "[0.0, 0.5, 1.0]"), 1).unwrap();
    assert_eq!((report.succeeded, report.failed), (3, 0));
    for run in &report.runs {
        for f in ["config.json", "manifest.json", "log.csv", "snapshot.json"] {
            assert!(run.dir.join(f).is_file(), "{f} missing in {}", run.dir.display());
        }
        for panel in ["panel_total", "panel_per_agent", "panel_gini"] {
            assert!(run.dir.join("panels").join(format!("{panel}.csv")).is_file());
            assert!(run.dir.join("panels").join(format!("{panel}.svg")).is_file());
        }
        let log = fs::read_to_string(run.dir.join("log.csv")).unwrap();
        assert_eq!(log.lines().next().unwrap(), LOG_HEADER.join(","));
        // 400 steps of 20-step episodes, two agents per episode
        assert_eq!(log.lines().count(), 1 + 20 * 2);
        assert!(verify_manifest(&run.dir).unwrap().is_empty());
        let m = manifest(&run.dir);
        assert_eq!(m.status, RunStatus::Ok);
        assert_eq!(m.files.len(), 9);
        assert_eq!(m.steps, 400);
    }
    let seeds: Vec<u64> = report.runs.iter().map(|r| manifest(&r.dir).seed).collect();
    assert_eq!(seeds, vec![3, 4, 5]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_sweep(&pd_config(a.path(), "[0.2, 0.9]"), 1).unwrap();
    let rb = run_sweep(&pd_config(b.path(), "[0.2, 0.9]"), 2).unwrap();
    for (x, y) in ra.runs.iter().zip(&rb.runs) {
        for f in ["log.csv", "snapshot.json", "config.json", "panels/panel_gini.svg"] {
            assert_eq!(fs::read(x.dir.join(f)).unwrap(), fs::read(y.dir.join(f)).unwrap(), "{f}");
        }
        let mut mx = manifest(&x.dir);
        let mut my = manifest(&y.dir);
        for m in [&mut mx, &mut my] {
            m.started_unix_ms = 0;
            m.finished_unix_ms = 0;
        }
        assert_eq!(mx, my);
    }
}

#[test]
fn tampering_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_sweep(&pd_config(tmp.path(), "[1.0]"), 1).unwrap();
    let dir = &report.runs[0].dir;
    fs::write(dir.join("log.csv"), "step\n").unwrap();
    fs::remove_file(dir.join("panels/panel_total.svg")).unwrap();
    let bad = verify_manifest(dir).unwrap();
    assert_eq!(bad.len(), 2, "{bad:?}");
}

#[test]
fn invalid_configs_stop_before_training() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = pd_config(&tmp.path().join("out"), "[0.5, 2.0]");
    assert_eq!(run_sweep(&cfg, 1).unwrap_err().exit_code(), 2);
    assert!(!tmp.path().join("out").exists());

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    cfg.alpha = vec![0.5];
    cfg.output = blocker.join("runs");
    let err = run_sweep(&cfg, 1).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("output"), "{err}");
}

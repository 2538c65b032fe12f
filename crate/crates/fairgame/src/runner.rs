//! Training sweeps, run directories and manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use fairgame_core::learning::{train, LogRow, TrainConfig, TrainOutput};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{EnvSpec, ExperimentConfig, RunPlan};
use crate::error::{Error, Result};
use crate::formats::{policy_to_json, write_text};
use crate::plot::{emit_plot_data, DEFAULT_WINDOW};

pub const LOG_HEADER: [&str; 10] = [
    "step",
    "episode",
    "agent",
    "return",
    "apples",
    "gini",
    "actor_loss",
    "critic_loss",
    "entropy",
    "floor_hits",
];

const STEP_COUNTING: &str = "total_steps counts environment steps summed over all collectors; \
     a batch of num_envs episodes is never cut short, so a run may overshoot by less than \
     num_envs * episode_length";

/// Writes the training log. Floats use the shortest representation that
/// round-trips, so equal logs give equal bytes.
pub fn write_log_csv<W: Write>(rows: &[LogRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOG_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.episode.to_string(),
            r.agent.to_string(),
            r.ret.to_string(),
            r.apples.map(|a| a.to_string()).unwrap_or_default(),
            r.gini.to_string(),
            r.actor_loss.to_string(),
            r.critic_loss.to_string(),
            r.entropy.to_string(),
            r.floor_hits.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// What a run was trained with; written to `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub library_version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub steps: u64,
    pub episodes: u64,
    pub floor_hits: u64,
    pub step_counting: String,
    pub files: Vec<FileEntry>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn hash_file(dir: &Path, rel: &str) -> Result<FileEntry> {
    let path = dir.join(rel);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(FileEntry {
        path: rel.to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Files whose current hash differs from the manifest, or that are gone.
pub fn verify_manifest(run_dir: &Path) -> Result<Vec<String>> {
    let path = run_dir.join("manifest.json");
    let text = crate::formats::read_text(&path)?;
    let manifest: RunManifest = crate::formats::parse_json(&path, &text)?;
    let mut bad = Vec::new();
    for entry in &manifest.files {
        match fs::read(run_dir.join(&entry.path)) {
            Ok(bytes) if sha256_hex(&bytes) == entry.sha256 => {}
            Ok(_) => bad.push(format!("{}: hash mismatch", entry.path)),
            Err(e) => bad.push(format!("{}: {e}", entry.path)),
        }
    }
    Ok(bad)
}

/// Creates `dir` and proves it is writable.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    let fail = |e: std::io::Error| {
        Error::invalid(format!("output: {} is not writable: {e}", dir.display()))
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".fairgame-write-probe");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run_id: String,
    pub dir: PathBuf,
    pub status: RunStatus,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<RunOutcome>,
    pub succeeded: usize,
    pub failed: usize,
}

fn write_outputs(dir: &Path, output: &TrainOutput) -> Result<Vec<String>> {
    let log_path = dir.join("log.csv");
    let file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    write_log_csv(&output.log, std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
        path: log_path.clone(),
        source,
    })?;
    write_text(&dir.join("snapshot.json"), &policy_to_json(&output.learner.policies))?;
    let panels = emit_plot_data(&[log_path.as_path()], &dir.join("panels"), DEFAULT_WINDOW)?;
    let mut files = vec!["log.csv".to_string(), "snapshot.json".to_string()];
    files.extend(panels.iter().map(|name| format!("panels/{name}")));
    Ok(files)
}

/// Trains one sweep item into `<output>/<run_id>/`. Failures are recorded in
/// the manifest rather than returned.
pub fn execute_run(env: &EnvSpec, plan: &RunPlan, output: &Path) -> Result<RunOutcome> {
    let dir = output.join(&plan.run_id);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let started = now_ms();
    let config = RunConfig {
        env: env.clone(),
        train: plan.train.clone(),
    };
    let config_text = serde_json::to_string_pretty(&config).expect("plain data serialises");
    write_text(&dir.join("config.json"), &config_text)?;

    let result = train(|_| env.build().map_err(core_error), &plan.train)
        .map_err(Error::from)
        .and_then(|out| write_outputs(&dir, &out).map(|files| (out, files)));
    let (status, error, steps, episodes, floor_hits, mut files) = match result {
        Ok((out, files)) => (RunStatus::Ok, None, out.steps, out.episodes, out.floor_hits, files),
        Err(e) => (RunStatus::Failed, Some(e.to_string()), 0, 0, 0, Vec::new()),
    };
    files.insert(0, "config.json".to_string());
    let files = files
        .iter()
        .map(|rel| hash_file(&dir, rel))
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        run_id: plan.run_id.clone(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: plan.train.seed,
        config,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        status,
        error: error.clone(),
        steps,
        episodes,
        floor_hits,
        step_counting: STEP_COUNTING.to_string(),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("plain data serialises");
    write_text(&dir.join("manifest.json"), &text)?;
    Ok(RunOutcome {
        run_id: plan.run_id.clone(),
        dir,
        status,
        error,
    })
}

// `EnvSpec::build` reports std errors; training wants core ones.
fn core_error(e: Error) -> fairgame_core::Error {
    match e {
        Error::Core(inner) => inner,
        other => fairgame_core::Error::InvalidParameter {
            name: "env",
            reason: other.to_string(),
        },
    }
}

/// Validates the config, then trains every sweep item on up to `jobs`
/// threads. Results do not depend on `jobs`.
pub fn run_sweep(config: &ExperimentConfig, jobs: usize) -> Result<SweepReport> {
    config.validate()?;
    ensure_writable(&config.output)?;
    let plans = config.plans();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunOutcome>>>> =
        Mutex::new((0..plans.len()).map(|_| None).collect());
    let workers = jobs.clamp(1, plans.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(plan) = plans.get(k) else { break };
                let outcome = execute_run(&config.env, plan, &config.output);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(outcome);
            });
        }
    });
    let mut runs = Vec::with_capacity(plans.len());
    for slot in slots.into_inner().expect("workers finished") {
        runs.push(slot.expect("every plan was executed")?);
    }
    let succeeded = runs.iter().filter(|r| r.status == RunStatus::Ok).count();
    let failed = runs.len() - succeeded;
    Ok(SweepReport {
        runs,
        succeeded,
        failed,
    })
}

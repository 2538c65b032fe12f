//! Scripted mini-CleanUp trajectories as JSON lines.

use fairgame_core::env::{Environment, MiniCleanup, MiniCleanupConfig};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// State after step `t` (counted from 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub t: usize,
    pub positions: Vec<usize>,
    pub pollution: f64,
    /// Cells holding an apple, ascending.
    pub apples: Vec<usize>,
    pub rewards: Vec<f64>,
}

/// Resets with `seed` and plays `actions[t]` at step `t`, stopping early if
/// the episode ends.
pub fn record(
    config: &MiniCleanupConfig,
    seed: u64,
    actions: &[Vec<usize>],
) -> Result<Vec<TrajectoryStep>> {
    let mut env = MiniCleanup::new(config.clone())?;
    env.reset(seed);
    let mut out = Vec::with_capacity(actions.len());
    for (k, joint) in actions.iter().enumerate() {
        let step = env.step(joint)?;
        out.push(TrajectoryStep {
            t: k + 1,
            positions: env.positions().to_vec(),
            pollution: env.pollution(),
            apples: env.apple_cells(),
            rewards: step.rewards,
        });
        if step.done {
            break;
        }
    }
    Ok(out)
}

pub fn to_jsonl(steps: &[TrajectoryStep]) -> String {
    let mut out = String::new();
    for s in steps {
        out.push_str(&serde_json::to_string(s).expect("plain data serialises"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> serde_json::Result<Vec<TrajectoryStep>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

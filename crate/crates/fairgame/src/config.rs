//! Experiment configuration files.

use std::path::{Path, PathBuf};

use fairgame_core::env::{EnvStep, Environment, MiniCleanup, MiniCleanupConfig, RepeatedMatrixEnv};
use fairgame_core::game::DilemmaPayoffs;
use fairgame_core::learning::{Objective, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{parse_json, read_text};

/// Overrides the configured seed when set.
pub const SEED_ENV_VAR: &str = "FAIRGAME_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analyze,
    #[default]
    Train,
    Eval,
    Verify,
}

/// Parses the value of `FAIRGAME_SEED`.
pub fn seed_override(value: Option<&str>) -> Result<Option<u64>> {
    value
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{SEED_ENV_VAR}={v:?} is not a u64")))
        })
        .transpose()
}

fn default_episode_length() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    RepeatedMatrix {
        payoffs: DilemmaPayoffs,
        #[serde(default = "default_episode_length")]
        episode_length: usize,
    },
    MiniCleanup(MiniCleanupConfig),
}

impl EnvSpec {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            EnvSpec::RepeatedMatrix {
                payoffs,
                episode_length,
            } => {
                if let Err(e) = payoffs.validate() {
                    out.push(format!("env.payoffs: {e}"));
                }
                if *episode_length == 0 {
                    out.push("env.episode_length must be positive".to_string());
                }
            }
            EnvSpec::MiniCleanup(cfg) => {
                if let Err(e) = cfg.validate() {
                    out.push(format!("env: {e}"));
                }
            }
        }
        out
    }

    pub fn build(&self) -> Result<AnyEnv> {
        Ok(match self {
            EnvSpec::RepeatedMatrix {
                payoffs,
                episode_length,
            } => AnyEnv::Matrix(RepeatedMatrixEnv::new(*payoffs, *episode_length)?),
            EnvSpec::MiniCleanup(cfg) => AnyEnv::Cleanup(MiniCleanup::new(cfg.clone())?),
        })
    }

    /// Reads an environment spec given inline as JSON or as a file path.
    pub fn from_arg(arg: &str) -> Result<Self> {
        let (path, text) = if arg.trim_start().starts_with('{') {
            (PathBuf::from("<inline env spec>"), arg.to_string())
        } else {
            let path = PathBuf::from(arg);
            let text = read_text(&path)?;
            (path, text)
        };
        let spec: EnvSpec = parse_json(&path, &text)?;
        let problems = spec.problems();
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Invalid(problems))
        }
    }
}

/// Either built-in environment.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    Matrix(RepeatedMatrixEnv),
    Cleanup(MiniCleanup),
}

macro_rules! delegate {
    ($self:ident, $env:ident => $body:expr) => {
        match $self {
            AnyEnv::Matrix($env) => $body,
            AnyEnv::Cleanup($env) => $body,
        }
    };
}

impl Environment for AnyEnv {
    fn num_agents(&self) -> usize {
        delegate!(self, e => e.num_agents())
    }
    fn action_counts(&self) -> &[usize] {
        delegate!(self, e => e.action_counts())
    }
    fn observation_count(&self) -> usize {
        delegate!(self, e => e.observation_count())
    }
    fn episode_length(&self) -> usize {
        delegate!(self, e => e.episode_length())
    }
    fn reset(&mut self, seed: u64) -> Vec<usize> {
        delegate!(self, e => e.reset(seed))
    }
    fn step(&mut self, actions: &[usize]) -> fairgame_core::Result<EnvStep> {
        delegate!(self, e => e.step(actions))
    }
    fn tracks_apples(&self) -> bool {
        delegate!(self, e => e.tracks_apples())
    }
}

fn default_alpha() -> Vec<f64> {
    vec![1.0]
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

/// One JSON document describing a training sweep. `alpha`, `objective` and
/// `seed` take precedence over the same fields inside `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    pub env: EnvSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

/// A single sweep item ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub index: usize,
    pub run_id: String,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        parse_json(path, &text)
    }

    /// Every problem with the config, each naming its field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.mode != Mode::Train {
            out.push(format!("mode: {:?} configs cannot be trained", self.mode));
        }
        out.extend(self.env.problems());
        if self.alpha.is_empty() {
            out.push("alpha: sweep is empty".to_string());
        }
        for (k, a) in self.alpha.iter().enumerate() {
            if !(0.0..=1.0).contains(a) {
                out.push(format!("alpha[{k}] = {a} is outside [0, 1]"));
            }
        }
        let mut train = self.train.clone();
        train.alpha = 1.0;
        out.extend(train.problems().into_iter().map(|p| format!("train.{p}")));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(problems))
        }
    }

    /// Applies `FAIRGAME_SEED` if present.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(seed) = seed_override(value)? {
            self.seed = seed;
        }
        Ok(())
    }

    /// Sweep item `k` trains with `alpha[k]` and seed `seed + k`.
    pub fn plans(&self) -> Vec<RunPlan> {
        self.alpha
            .iter()
            .enumerate()
            .map(|(index, &alpha)| {
                let seed = self.seed.wrapping_add(index as u64);
                let train = TrainConfig {
                    alpha,
                    objective: self.objective,
                    seed,
                    ..self.train.clone()
                };
                let tag = match self.objective {
                    Objective::ProportionalFair => "pf",
                    Objective::UtilitarianWelfare => "uw",
                };
                RunPlan {
                    index,
                    run_id: format!("{index:03}-{tag}-alpha{alpha}-seed{seed}"),
                    train,
                }
            })
            .collect()
    }
}

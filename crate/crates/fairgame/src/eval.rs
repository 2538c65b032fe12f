//! Frozen-policy evaluation reports.

use fairgame_core::env::Environment;
use fairgame_core::game::COOPERATE;
use fairgame_core::learning::evaluate;
use fairgame_core::markov::SoftmaxPolicyProfile;
use serde::Serialize;

use crate::config::{AnyEnv, EnvSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (n > 0).then(|| Summary {
            mean: sum / n as f64,
            min,
            max,
        })
    }
}

/// Matrix-game statistics over all joint steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CooperationReport {
    /// Frequencies of `(C,C), (C,D), (D,C), (D,D)`.
    pub joint_action_frequencies: Vec<f64>,
    /// Fraction of joint steps where both agents cooperated.
    pub cooperation_rate: f64,
    /// Standard error of `cooperation_rate`, treating steps as independent.
    pub cooperation_rate_std_err: f64,
    /// Per-agent fraction of steps playing C.
    pub per_agent_cooperation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub steps: u64,
    /// Undiscounted episode returns, pooled over agents.
    pub returns: Summary,
    pub per_agent_mean_return: Vec<f64>,
    /// Apples per agent and episode; `null` where apples are not tracked.
    pub apples: Option<Summary>,
    pub gini: Summary,
    pub cooperation: Option<CooperationReport>,
}

/// Rejects snapshots whose tables do not fit the environment.
pub fn check_shape(policies: &SoftmaxPolicyProfile, env: &AnyEnv) -> Result<()> {
    let mut problems = Vec::new();
    if policies.num_agents() != env.num_agents() {
        problems.push(format!(
            "snapshot has {} agents, environment has {}",
            policies.num_agents(),
            env.num_agents()
        ));
    } else if policies.action_counts() != env.action_counts() {
        problems.push(format!(
            "snapshot action counts {:?}, environment {:?}",
            policies.action_counts(),
            env.action_counts()
        ));
    }
    if policies.num_states() != env.observation_count() {
        problems.push(format!(
            "snapshot has {} states, environment has {} observations",
            policies.num_states(),
            env.observation_count()
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(problems))
    }
}

pub fn eval_snapshot(
    policies: &SoftmaxPolicyProfile,
    spec: &EnvSpec,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::invalid("--episodes must be positive"));
    }
    let mut env = spec.build()?;
    check_shape(policies, &env)?;
    let n = env.num_agents();
    let report = evaluate(&mut env, policies, episodes, seed)?;

    let returns = Summary::of(report.returns.iter().flatten().copied())
        .expect("at least one episode and agent");
    let per_agent_mean_return = (0..n)
        .map(|i| report.returns.iter().map(|r| r[i]).sum::<f64>() / episodes as f64)
        .collect();
    let apples = if env.tracks_apples() {
        Summary::of(report.apples.iter().flatten().map(|&a| a as f64))
    } else {
        None
    };
    let gini = Summary::of(report.gini.iter().copied()).expect("at least one episode");

    let cooperation = match env {
        AnyEnv::Matrix(_) if report.steps > 0 => {
            let total = report.steps as f64;
            let freq: Vec<f64> = report
                .joint_action_counts
                .iter()
                .map(|&c| c as f64 / total)
                .collect();
            let both = freq[2 * COOPERATE + COOPERATE];
            let per_agent = vec![freq[0] + freq[1], freq[0] + freq[2]];
            Some(CooperationReport {
                cooperation_rate: both,
                cooperation_rate_std_err: (both * (1.0 - both) / total).sqrt(),
                joint_action_frequencies: freq,
                per_agent_cooperation: per_agent,
            })
        }
        _ => None,
    };

    Ok(EvalSummary {
        episodes,
        steps: report.steps,
        returns,
        per_agent_mean_return,
        apples,
        gini,
        cooperation,
    })
}

//! Fair MAA2C and Fair MAPPO with tabular softmax actors and tabular critics.
//!
//! Each agent owns an actor and a critic indexed by its own observation.
//! After every batch of episodes the per-agent GAE advantages are combined
//! into fair advantages
//! `A^F_{i,t} = sum_j c_i(j) A_{j,t} / max(V_j(o_{j,0}), v_floor)`
//! and each actor ascends its own surrogate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::markov::{AltruismWeights, SoftmaxPolicyProfile};
use crate::metrics::gini;
use crate::rng::{sample_categorical, seeded_stream};

/// Learning rates decay linearly to this value over the run.
pub const FINAL_LEARNING_RATE: f64 = 1e-5;

// stream offset separating environment seeds from action sampling
const ENV_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Algorithm {
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "FairMAA2C"))]
    FairMaa2c,
    #[cfg_attr(feature = "serde", serde(rename = "FairMAPPO"))]
    FairMappo,
}

/// What each actor's advantage is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Objective {
    /// Fair advantages normalised by initial-state values.
    #[default]
    ProportionalFair,
    /// `sum_j c_i(j) A_j` without normalisation.
    UtilitarianWelfare,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub objective: Objective,
    pub alpha: f64,
    /// Initial actor learning rate.
    pub learning_rate: f64,
    /// Initial critic learning rate; the actor rate when absent.
    pub critic_learning_rate: Option<f64>,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub ppo_clip: f64,
    pub ppo_epochs: usize,
    /// Episodes collected per update.
    pub num_envs: usize,
    pub episode_length: usize,
    /// Global environment-step budget, summed over collectors.
    pub total_steps: u64,
    pub seed: u64,
    pub v_floor: f64,
    /// Starting value of every critic entry.
    pub critic_init: f64,
    /// Standardise fair advantages per agent and batch.
    pub normalize_advantages: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::FairMaa2c,
            objective: Objective::ProportionalFair,
            alpha: 1.0,
            learning_rate: 0.01,
            critic_learning_rate: None,
            gamma: 0.99,
            gae_lambda: 0.95,
            entropy_coef: 0.01,
            ppo_clip: 0.2,
            ppo_epochs: 4,
            num_envs: 10,
            episode_length: 100,
            total_steps: 300_000,
            seed: 0,
            v_floor: 1e-3,
            critic_init: 0.0,
            normalize_advantages: false,
        }
    }
}

impl TrainConfig {
    /// Every violated constraint, in field order.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                out.push(String::from(msg));
            }
        };
        check((0.0..=1.0).contains(&self.alpha), "alpha: must lie in [0, 1]");
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning_rate: must be positive",
        );
        check(
            self.critic_learning_rate
                .is_none_or(|lr| lr > 0.0 && lr < 0.5),
            "critic_learning_rate: must lie in (0, 0.5)",
        );
        check(
            self.critic_learning_rate.is_some() || self.learning_rate < 0.5,
            "learning_rate: doubles as critic rate and must then be below 0.5",
        );
        check((0.0..1.0).contains(&self.gamma), "gamma: must lie in [0, 1)");
        check(
            (0.0..=1.0).contains(&self.gae_lambda),
            "gae_lambda: must lie in [0, 1]",
        );
        check(
            self.entropy_coef >= 0.0 && self.entropy_coef.is_finite(),
            "entropy_coef: must be nonnegative",
        );
        check(
            self.ppo_clip > 0.0 && self.ppo_clip < 1.0,
            "ppo_clip: must lie in (0, 1)",
        );
        check(self.ppo_epochs > 0, "ppo_epochs: must be positive");
        check(self.num_envs > 0, "num_envs: must be positive");
        check(self.episode_length > 0, "episode_length: must be positive");
        check(
            self.v_floor > 0.0 && self.v_floor.is_finite(),
            "v_floor: must be positive",
        );
        check(self.critic_init.is_finite(), "critic_init: must be finite");
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "train config",
                reason: problems.join("; "),
            })
        }
    }

    fn critic_rate(&self) -> f64 {
        self.critic_learning_rate.unwrap_or(self.learning_rate)
    }

    /// Linearly decayed rate after `steps` environment steps.
    pub fn decayed(&self, initial: f64, steps: u64) -> f64 {
        if self.total_steps == 0 {
            return initial;
        }
        let frac = (steps as f64 / self.total_steps as f64).min(1.0);
        (1.0 - frac) * initial + frac * FINAL_LEARNING_RATE
    }
}

/// Per-agent value tables `V_i(o)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticTable {
    pub values: Vec<Vec<f64>>,
}

impl CriticTable {
    pub fn new(num_agents: usize, num_observations: usize, init: f64) -> Self {
        Self {
            values: vec![vec![init; num_observations]; num_agents],
        }
    }

    #[inline]
    pub fn value(&self, agent: usize, observation: usize) -> f64 {
        self.values[agent][observation]
    }
}

/// Actors, critics and the policy version they correspond to.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub policies: SoftmaxPolicyProfile,
    pub critics: CriticTable,
    version: u64,
}

impl Learner {
    pub fn new(num_observations: usize, action_counts: &[usize], critic_init: f64) -> Self {
        Self {
            policies: SoftmaxPolicyProfile::uniform(num_observations, action_counts),
            critics: CriticTable::new(action_counts.len(), num_observations, critic_init),
            version: 0,
        }
    }

    pub fn from_parts(policies: SoftmaxPolicyProfile, critics: CriticTable) -> Result<Self> {
        if critics.values.len() != policies.num_agents()
            || critics
                .values
                .iter()
                .any(|v| v.len() != policies.num_states())
        {
            return Err(Error::Shape("critic tables do not match the policies".into()));
        }
        Ok(Self {
            policies,
            critics,
            version: 0,
        })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    fn check_fresh(&self, buffer: &RolloutBuffer) -> Result<()> {
        if buffer.policy_version != self.version {
            return Err(Error::StaleBuffer {
                expected: self.version,
                found: buffer.policy_version,
            });
        }
        if buffer.num_agents != self.policies.num_agents() {
            return Err(Error::Shape(format!(
                "buffer has {} agents, learner {}",
                buffer.num_agents,
                self.policies.num_agents()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_observations: Vec<usize>,
    pub done: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    /// Apples per agent over the episode; empty when not tracked.
    pub apples: Vec<u32>,
}

impl Episode {
    pub fn initial_observations(&self) -> Option<&[usize]> {
        self.transitions.first().map(|t| t.observations.as_slice())
    }

    pub fn returns(&self, num_agents: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_agents];
        for t in &self.transitions {
            for (o, r) in out.iter_mut().zip(&t.rewards) {
                *o += r;
            }
        }
        out
    }

    /// Apples when tracked, undiscounted returns otherwise.
    pub fn consumptions(&self, num_agents: usize) -> Vec<f64> {
        if self.apples.is_empty() {
            self.returns(num_agents)
        } else {
            self.apples.iter().map(|&a| a as f64).collect()
        }
    }
}

/// On-policy batch tagged with the policy version that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub policy_version: u64,
    pub num_agents: usize,
    pub max_episode_length: usize,
    pub episodes: Vec<Episode>,
}

impl RolloutBuffer {
    pub fn new(policy_version: u64, num_agents: usize, max_episode_length: usize) -> Self {
        Self {
            policy_version,
            num_agents,
            max_episode_length,
            episodes: Vec::new(),
        }
    }

    pub fn push(&mut self, episode: Episode) -> Result<()> {
        if episode.transitions.is_empty() {
            return Err(Error::Empty("episode"));
        }
        if episode.transitions.len() > self.max_episode_length {
            return Err(Error::Shape(format!(
                "episode of length {} exceeds {}",
                episode.transitions.len(),
                self.max_episode_length
            )));
        }
        for t in &episode.transitions {
            if t.observations.len() != self.num_agents
                || t.actions.len() != self.num_agents
                || t.rewards.len() != self.num_agents
                || t.next_observations.len() != self.num_agents
            {
                return Err(Error::Shape("transition width differs from agent count".into()));
            }
            if let Some(&r) = t.rewards.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
                return Err(Error::NonPositivePayoff(r));
            }
        }
        self.episodes.push(episode);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.episodes.iter().map(|e| e.transitions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    fn samples(&self) -> impl Iterator<Item = &Transition> {
        self.episodes.iter().flat_map(|e| e.transitions.iter())
    }
}

/// Per-agent advantages and regression targets, flattened over the buffer
/// in episode order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gae {
    pub advantages: Vec<Vec<f64>>,
    pub returns: Vec<Vec<f64>>,
}

/// GAE(lambda) per agent. Truncated episodes bootstrap from the critic;
/// only terminal transitions drop the next value.
pub fn compute_gae(
    buffer: &RolloutBuffer,
    critics: &CriticTable,
    gamma: f64,
    lambda: f64,
) -> Result<Gae> {
    if buffer.is_empty() {
        return Err(Error::Empty("rollout buffer"));
    }
    let n = buffer.num_agents;
    if critics.values.len() != n {
        return Err(Error::Shape("critic count differs from agent count".into()));
    }
    let total = buffer.len();
    let mut advantages = vec![vec![0.0; total]; n];
    let mut returns = vec![vec![0.0; total]; n];
    let mut offset = 0;
    for episode in &buffer.episodes {
        let len = episode.transitions.len();
        for i in 0..n {
            let mut running = 0.0;
            for (k, t) in episode.transitions.iter().enumerate().rev() {
                let v = critics.value(i, t.observations[i]);
                let next = if t.terminal {
                    0.0
                } else {
                    critics.value(i, t.next_observations[i])
                };
                let delta = t.rewards[i] + gamma * next - v;
                if t.done {
                    running = 0.0;
                }
                running = delta + gamma * lambda * running;
                advantages[i][offset + k] = running;
                returns[i][offset + k] = running + v;
            }
        }
        offset += len;
    }
    Ok(Gae {
        advantages,
        returns,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairAdvantages {
    pub values: Vec<Vec<f64>>,
    /// How many `(episode, agent)` initial values were below the floor.
    pub floor_hits: u64,
}

/// `A^F_{i,t} = sum_j c_i(j) A_{j,t} / max(V_j(o_{j,0}), v_floor)` for the
/// proportional-fair objective, `sum_j c_i(j) A_{j,t}` for the utilitarian
/// one. The initial values are read once and treated as constants.
pub fn combine_fair_advantages(
    buffer: &RolloutBuffer,
    advantages: &[Vec<f64>],
    critics: &CriticTable,
    weights: &AltruismWeights,
    objective: Objective,
    v_floor: f64,
) -> Result<FairAdvantages> {
    let n = buffer.num_agents;
    let total = buffer.len();
    if advantages.len() != n || advantages.iter().any(|a| a.len() != total) {
        return Err(Error::Shape("advantages must be num_agents x buffer length".into()));
    }
    let mut values = vec![vec![0.0; total]; n];
    let mut floor_hits = 0;
    let mut scale = vec![1.0; n];
    let mut offset = 0;
    for episode in &buffer.episodes {
        let len = episode.transitions.len();
        if objective == Objective::ProportionalFair {
            let first = &episode.transitions[0].observations;
            for j in 0..n {
                let v0 = critics.value(j, first[j]);
                scale[j] = if v0 >= v_floor {
                    1.0 / v0
                } else {
                    floor_hits += 1;
                    1.0 / v_floor
                };
            }
        }
        for i in 0..n {
            for t in offset..offset + len {
                values[i][t] = (0..n)
                    .map(|j| weights.coefficient(i, j) * advantages[j][t] * scale[j])
                    .sum();
            }
        }
        offset += len;
    }
    Ok(FairAdvantages { values, floor_hits })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateStats {
    /// Per-agent actor loss of the last pass (negated surrogate).
    pub actor_loss: Vec<f64>,
    /// Per-agent mean squared return error before the critic step.
    pub critic_loss: Vec<f64>,
    /// Per-agent mean policy entropy over sampled observations.
    pub entropy: Vec<f64>,
    pub floor_hits: u64,
}

/// Current actor and critic step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub actor: f64,
    pub critic: f64,
}

impl StepSizes {
    pub fn initial(config: &TrainConfig) -> Self {
        Self {
            actor: config.learning_rate,
            critic: config.critic_rate(),
        }
    }

    pub fn at(config: &TrainConfig, steps: u64) -> Self {
        Self {
            actor: config.decayed(config.learning_rate, steps),
            critic: config.decayed(config.critic_rate(), steps),
        }
    }
}

fn prepare(
    learner: &Learner,
    buffer: &RolloutBuffer,
    config: &TrainConfig,
) -> Result<(Gae, FairAdvantages)> {
    learner.check_fresh(buffer)?;
    let weights = AltruismWeights::new(config.alpha)?;
    let gae = compute_gae(buffer, &learner.critics, config.gamma, config.gae_lambda)?;
    let mut fair = combine_fair_advantages(
        buffer,
        &gae.advantages,
        &learner.critics,
        &weights,
        config.objective,
        config.v_floor,
    )?;
    if config.normalize_advantages {
        for a in fair.values.iter_mut() {
            standardize(a);
        }
    }
    Ok((gae, fair))
}

fn standardize(x: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = libm::sqrt(var) + 1e-8;
    for v in x.iter_mut() {
        *v = (*v - mean) / sd;
    }
}

/// Gradient-descent step on `mean_t (V(o_t) - R_t)^2`, averaged separately
/// at every visited observation. Returns the per-agent loss before the step.
fn critic_step(
    critics: &mut CriticTable,
    buffer: &RolloutBuffer,
    returns: &[Vec<f64>],
    lr: f64,
) -> Vec<f64> {
    let n = buffer.num_agents;
    let total = buffer.len() as f64;
    let mut losses = vec![0.0; n];
    for i in 0..n {
        // (observation, sum of residuals, count), in first-visit order
        let mut visits: Vec<(usize, f64, u32)> = Vec::new();
        let mut slot_of = alloc::collections::BTreeMap::new();
        for (t, tr) in buffer.samples().enumerate() {
            let o = tr.observations[i];
            let residual = critics.value(i, o) - returns[i][t];
            losses[i] += residual * residual / total;
            let k = *slot_of.entry(o).or_insert_with(|| {
                visits.push((o, 0.0, 0));
                visits.len() - 1
            });
            visits[k].1 += residual;
            visits[k].2 += 1;
        }
        for (o, sum, count) in visits {
            critics.values[i][o] -= lr * 2.0 * sum / count as f64;
        }
    }
    losses
}

fn entropy_of(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * libm::log(x))
        .sum::<f64>()
}

/// One Fair MAA2C update: an ascent step on
/// `mean_t A^F_{i,t} log pi_i(a_{i,t} | o_{i,t})` per actor and a descent
/// step on the squared return error per critic.
pub fn a2c_update(
    learner: &mut Learner,
    buffer: &RolloutBuffer,
    config: &TrainConfig,
    steps: StepSizes,
) -> Result<UpdateStats> {
    let (gae, fair) = prepare(learner, buffer, config)?;
    let n = buffer.num_agents;
    let total = buffer.len() as f64;
    let mut stats = UpdateStats {
        actor_loss: vec![0.0; n],
        critic_loss: Vec::new(),
        entropy: vec![0.0; n],
        floor_hits: fair.floor_hits,
    };
    let mut grads: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![0.0; learner.policies.logits(i).len()])
        .collect();
    let mut probs = Vec::new();
    for (t, tr) in buffer.samples().enumerate() {
        for i in 0..n {
            let a_count = learner.policies.action_counts()[i];
            probs.resize(a_count, 0.0);
            let o = tr.observations[i];
            learner.policies.probs_into(i, o, &mut probs);
            let adv = fair.values[i][t];
            let a = tr.actions[i];
            stats.actor_loss[i] -= adv * libm::log(probs[a]) / total;
            stats.entropy[i] += entropy_of(&probs) / total;
            if adv != 0.0 {
                let row = &mut grads[i][o * a_count..(o + 1) * a_count];
                for (b, g) in row.iter_mut().enumerate() {
                    let score = if b == a { 1.0 } else { 0.0 } - probs[b];
                    *g += adv * score / total;
                }
            }
        }
    }
    for (i, g) in grads.iter().enumerate() {
        for (theta, &d) in learner.policies.logits_mut(i).iter_mut().zip(g) {
            *theta += steps.actor * d;
        }
    }
    stats.critic_loss = critic_step(&mut learner.critics, buffer, &gae.returns, steps.critic);
    learner.version += 1;
    Ok(stats)
}

/// Fair MAPPO: `ppo_epochs` full-batch ascent steps on the clipped
/// surrogate plus entropy bonus, with a critic step after each.
pub fn ppo_update(
    learner: &mut Learner,
    buffer: &RolloutBuffer,
    config: &TrainConfig,
    steps: StepSizes,
) -> Result<UpdateStats> {
    let (gae, fair) = prepare(learner, buffer, config)?;
    let n = buffer.num_agents;
    let total = buffer.len() as f64;
    let (lo, hi) = (1.0 - config.ppo_clip, 1.0 + config.ppo_clip);

    let old: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            buffer
                .samples()
                .map(|tr| learner.policies.probs(i, tr.observations[i])[tr.actions[i]])
                .collect()
        })
        .collect();

    let mut stats = UpdateStats {
        floor_hits: fair.floor_hits,
        ..Default::default()
    };
    let mut probs = Vec::new();
    for epoch in 0..config.ppo_epochs {
        let mut actor_loss = vec![0.0; n];
        let mut entropy = vec![0.0; n];
        let mut grads: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![0.0; learner.policies.logits(i).len()])
            .collect();
        for (t, tr) in buffer.samples().enumerate() {
            for i in 0..n {
                let a_count = learner.policies.action_counts()[i];
                probs.resize(a_count, 0.0);
                let o = tr.observations[i];
                learner.policies.probs_into(i, o, &mut probs);
                let a = tr.actions[i];
                let adv = fair.values[i][t];
                let ratio = probs[a] / old[i][t];
                let clipped = ratio.clamp(lo, hi);
                let h = entropy_of(&probs);
                actor_loss[i] -= ((ratio * adv).min(clipped * adv) + config.entropy_coef * h) / total;
                entropy[i] += h / total;

                let row = &mut grads[i][o * a_count..(o + 1) * a_count];
                // the min picks the clipped branch, which is flat in theta
                let saturated = (adv > 0.0 && ratio > hi) || (adv < 0.0 && ratio < lo);
                if !saturated && adv != 0.0 {
                    for (b, g) in row.iter_mut().enumerate() {
                        let score = if b == a { 1.0 } else { 0.0 } - probs[b];
                        *g += adv * ratio * score / total;
                    }
                }
                if config.entropy_coef > 0.0 {
                    for (b, g) in row.iter_mut().enumerate() {
                        let p = probs[b];
                        let dh = if p > 0.0 { -p * (libm::log(p) + h) } else { 0.0 };
                        *g += config.entropy_coef * dh / total;
                    }
                }
            }
        }
        for (i, g) in grads.iter().enumerate() {
            for (theta, &d) in learner.policies.logits_mut(i).iter_mut().zip(g) {
                *theta += steps.actor * d;
            }
        }
        let critic_loss = critic_step(&mut learner.critics, buffer, &gae.returns, steps.critic);
        if epoch == 0 {
            stats.critic_loss = critic_loss;
        }
        stats.actor_loss = actor_loss;
        stats.entropy = entropy;
    }
    learner.version += 1;
    Ok(stats)
}

/// Seed handed to the environment for global episode `episode`.
pub fn episode_env_seed(seed: u64, episode: u64) -> u64 {
    seeded_stream(seed, ENV_STREAM_BASE + episode).next_u64()
}

/// Runs one episode with the current policies. Actions for episode `e`
/// come from stream `e` of `seed`, the environment from
/// [`episode_env_seed`].
pub fn collect_episode<E: Environment + ?Sized>(
    env: &mut E,
    policies: &SoftmaxPolicyProfile,
    max_length: usize,
    seed: u64,
    episode: u64,
) -> Result<Episode> {
    let n = env.num_agents();
    if policies.num_agents() != n
        || policies.action_counts() != env.action_counts()
        || policies.num_states() != env.observation_count()
    {
        return Err(Error::Shape("policies do not match the environment".into()));
    }
    let mut rng = seeded_stream(seed, episode);
    let mut obs = env.reset(episode_env_seed(seed, episode));
    let mut out = Episode {
        transitions: Vec::with_capacity(max_length.min(env.episode_length())),
        apples: if env.tracks_apples() {
            vec![0; n]
        } else {
            Vec::new()
        },
    };
    let mut probs = Vec::new();
    for t in 0..max_length {
        let actions: Vec<usize> = (0..n)
            .map(|i| {
                probs.resize(env.action_counts()[i], 0.0);
                policies.probs_into(i, obs[i], &mut probs);
                sample_categorical(&mut rng, &probs)
            })
            .collect();
        let step = env.step(&actions)?;
        for (total, &a) in out.apples.iter_mut().zip(&step.info.apples) {
            *total += a;
        }
        let done = step.done || t + 1 == max_length;
        out.transitions.push(Transition {
            observations: core::mem::replace(&mut obs, step.observations.clone()),
            actions,
            rewards: step.rewards,
            next_observations: step.observations,
            done,
            terminal: step.terminal,
        });
        if done {
            break;
        }
    }
    Ok(out)
}

/// One CSV row: one agent in one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    /// Global environment steps when the episode's batch finished.
    pub step: u64,
    pub episode: u64,
    pub agent: usize,
    pub ret: f64,
    pub apples: Option<u32>,
    pub gini: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub floor_hits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub learner: Learner,
    pub log: Vec<LogRow>,
    pub steps: u64,
    pub episodes: u64,
    pub floor_hits: u64,
}

/// Collects `num_envs` episodes, updates, and repeats until the global
/// step budget is spent. `make_env(k)` builds collector `k`.
pub fn train<E, F>(make_env: F, config: &TrainConfig) -> Result<TrainOutput>
where
    E: Environment,
    F: FnMut(usize) -> Result<E>,
{
    config.validate()?;
    let mut envs: Vec<E> = (0..config.num_envs).map(make_env).collect::<Result<_>>()?;
    let first = &envs[0];
    let mut learner = Learner::new(
        first.observation_count(),
        first.action_counts(),
        config.critic_init,
    );
    let n = first.num_agents();
    let max_len = config.episode_length.min(first.episode_length());

    let mut log = Vec::new();
    let mut steps = 0u64;
    let mut episodes = 0u64;
    let mut floor_hits = 0u64;
    while steps < config.total_steps {
        let rates = StepSizes::at(config, steps);
        let mut buffer = RolloutBuffer::new(learner.version(), n, max_len);
        for env in envs.iter_mut() {
            let ep = collect_episode(env, &learner.policies, max_len, config.seed, episodes)?;
            episodes += 1;
            steps += ep.transitions.len() as u64;
            buffer.push(ep)?;
        }
        let stats = match config.algorithm {
            Algorithm::FairMaa2c => a2c_update(&mut learner, &buffer, config, rates)?,
            Algorithm::FairMappo => ppo_update(&mut learner, &buffer, config, rates)?,
        };
        floor_hits += stats.floor_hits;
        let first_episode = episodes - buffer.episodes.len() as u64;
        for (k, ep) in buffer.episodes.iter().enumerate() {
            let returns = ep.returns(n);
            let g = gini(&ep.consumptions(n))?;
            for i in 0..n {
                log.push(LogRow {
                    step: steps,
                    episode: first_episode + k as u64,
                    agent: i,
                    ret: returns[i],
                    apples: ep.apples.get(i).copied(),
                    gini: g,
                    actor_loss: stats.actor_loss[i],
                    critic_loss: stats.critic_loss[i],
                    entropy: stats.entropy[i],
                    floor_hits: stats.floor_hits,
                });
            }
        }
    }
    Ok(TrainOutput {
        learner,
        log,
        steps,
        episodes,
        floor_hits,
    })
}

/// Outcome of running frozen policies.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `returns[e][i]`
    pub returns: Vec<Vec<f64>>,
    /// `apples[e][i]`; empty rows when not tracked.
    pub apples: Vec<Vec<u32>>,
    pub gini: Vec<f64>,
    /// Visit counts of every joint action, row-major with the last agent
    /// fastest.
    pub joint_action_counts: Vec<u64>,
    pub steps: u64,
}

/// Runs `episodes` episodes with frozen policies. Episode `e` uses the same
/// seed derivation as training.
pub fn evaluate<E: Environment + ?Sized>(
    env: &mut E,
    policies: &SoftmaxPolicyProfile,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    let n = env.num_agents();
    let joint: usize = env.action_counts().iter().product();
    let mut report = EvalReport {
        returns: Vec::with_capacity(episodes),
        apples: Vec::with_capacity(episodes),
        gini: Vec::with_capacity(episodes),
        joint_action_counts: vec![0; joint],
        steps: 0,
    };
    let max_len = env.episode_length();
    for e in 0..episodes {
        let ep = collect_episode(env, policies, max_len, seed, e as u64)?;
        for t in &ep.transitions {
            let mut index = 0;
            for (&a, &c) in t.actions.iter().zip(env.action_counts()) {
                index = index * c + a;
            }
            report.joint_action_counts[index] += 1;
        }
        report.steps += ep.transitions.len() as u64;
        report.gini.push(gini(&ep.consumptions(n))?);
        report.returns.push(ep.returns(n));
        report.apples.push(ep.apples);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::RepeatedMatrixEnv;
    use crate::game::DilemmaPayoffs;

    fn transition(obs: usize, next: usize, action: usize, reward: f64, done: bool) -> Transition {
        Transition {
            observations: vec![obs],
            actions: vec![action],
            rewards: vec![reward],
            next_observations: vec![next],
            done,
            terminal: false,
        }
    }

    fn single_agent_buffer(transitions: Vec<Transition>) -> RolloutBuffer {
        let mut b = RolloutBuffer::new(0, 1, 100);
        b.push(Episode {
            transitions,
            apples: Vec::new(),
        })
        .unwrap();
        b
    }

    #[test]
    fn gae_single_transition() {
        let b = single_agent_buffer(vec![transition(0, 1, 0, 1.0, false)]);
        let critics = CriticTable {
            values: vec![vec![2.0, 3.0]],
        };
        let gae = compute_gae(&b, &critics, 0.9, 0.95).unwrap();
        assert!((gae.advantages[0][0] - 1.7).abs() < 1e-12);
        assert!((gae.returns[0][0] - 3.7).abs() < 1e-12);
    }

    #[test]
    fn gae_lambda_zero_is_td_residual() {
        let b = single_agent_buffer(vec![
            transition(0, 1, 0, 1.0, false),
            transition(1, 0, 0, 0.5, false),
            transition(0, 1, 0, 2.0, true),
        ]);
        let critics = CriticTable {
            values: vec![vec![0.3, -0.4]],
        };
        let gae = compute_gae(&b, &critics, 0.8, 0.0).unwrap();
        let expected = [1.0 + 0.8 * -0.4 - 0.3, 0.5 + 0.8 * 0.3 + 0.4, 2.0 + 0.8 * -0.4 - 0.3];
        for (a, e) in gae.advantages[0].iter().zip(expected) {
            assert_eq!(*a, e);
        }
    }

    #[test]
    fn gae_lambda_one_zero_critic_is_reward_to_go() {
        let mut last = transition(0, 0, 0, 3.0, true);
        last.terminal = true;
        let b = single_agent_buffer(vec![
            transition(0, 0, 0, 1.0, false),
            transition(0, 0, 0, 2.0, false),
            last,
        ]);
        let critics = CriticTable::new(1, 1, 0.0);
        let gae = compute_gae(&b, &critics, 0.5, 1.0).unwrap();
        let expected = [1.0 + 0.5 * 2.0 + 0.25 * 3.0, 2.0 + 0.5 * 3.0, 3.0];
        for (a, e) in gae.advantages[0].iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!(compute_gae(&RolloutBuffer::new(0, 1, 5), &critics, 0.5, 1.0).is_err());
    }

    fn two_agent_buffer() -> RolloutBuffer {
        let mut b = RolloutBuffer::new(0, 2, 10);
        b.push(Episode {
            transitions: vec![Transition {
                observations: vec![0, 1],
                actions: vec![0, 0],
                rewards: vec![1.0, 1.0],
                next_observations: vec![0, 1],
                done: true,
                terminal: false,
            }],
            apples: Vec::new(),
        })
        .unwrap();
        b
    }

    #[test]
    fn fair_advantage_combination() {
        let b = two_agent_buffer();
        let critics = CriticTable {
            values: vec![vec![10.0, 0.0], vec![0.0, 8.0]],
        };
        let adv = vec![vec![2.0], vec![-4.0]];
        let w = AltruismWeights::new(0.5).unwrap();
        let fair = combine_fair_advantages(&b, &adv, &critics, &w, Objective::ProportionalFair, 1e-3)
            .unwrap();
        assert!((fair.values[0][0] + 0.05).abs() < 1e-15);
        assert_eq!(fair.floor_hits, 0);

        let selfish = AltruismWeights::new(0.0).unwrap();
        let fair =
            combine_fair_advantages(&b, &adv, &critics, &selfish, Objective::ProportionalFair, 1e-3)
                .unwrap();
        assert_eq!(fair.values[0][0], 2.0 / 10.0);
        assert_eq!(fair.values[1][0], -4.0 / 8.0);

        let zero = vec![vec![0.0], vec![0.0]];
        let fair = combine_fair_advantages(&b, &zero, &critics, &w, Objective::ProportionalFair, 1e-3)
            .unwrap();
        assert!(fair.values.iter().flatten().all(|&x| x == 0.0));

        let full = AltruismWeights::new(1.0).unwrap();
        let uw = combine_fair_advantages(&b, &adv, &critics, &full, Objective::UtilitarianWelfare, 1e-3)
            .unwrap();
        assert_eq!(uw.values, vec![vec![-2.0], vec![-2.0]]);
    }

    #[test]
    fn floor_hits_are_counted() {
        let b = two_agent_buffer();
        let critics = CriticTable::new(2, 2, -1.0);
        let w = AltruismWeights::new(1.0).unwrap();
        let fair = combine_fair_advantages(
            &b,
            &[vec![1.0], vec![1.0]],
            &critics,
            &w,
            Objective::ProportionalFair,
            0.5,
        )
        .unwrap();
        assert_eq!(fair.floor_hits, 2);
        assert_eq!(fair.values[0][0], 4.0);
    }

    fn config() -> TrainConfig {
        TrainConfig {
            alpha: 0.0,
            gamma: 0.9,
            gae_lambda: 0.0,
            critic_init: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn critic_contracts_toward_constant_returns() {
        // gamma = 0 makes every return equal the reward
        let cfg = TrainConfig {
            gamma: 0.0,
            ..config()
        };
        let mut learner = Learner::new(1, &[1], 0.0);
        let lr = 0.1;
        for k in 0..20 {
            let b = RolloutBuffer {
                policy_version: learner.version(),
                ..single_agent_buffer(vec![
                    transition(0, 0, 0, 2.0, false),
                    transition(0, 0, 0, 2.0, true),
                ])
            };
            a2c_update(&mut learner, &b, &cfg, StepSizes { actor: 0.1, critic: lr }).unwrap();
            let expected = 2.0 * (1.0 - libm::pow(1.0 - 2.0 * lr, (k + 1) as f64));
            assert!((learner.critics.value(0, 0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_advantage_leaves_actor_unchanged() {
        let mut learner = Learner::new(1, &[2], 5.0);
        // reward equals V(1 - gamma) so every TD residual is zero
        let b = single_agent_buffer(vec![
            transition(0, 0, 1, 0.5, false),
            transition(0, 0, 0, 0.5, true),
        ]);
        let cfg = config();
        let before = learner.policies.clone();
        a2c_update(&mut learner, &b, &cfg, StepSizes::initial(&cfg)).unwrap();
        assert_eq!(learner.policies, before);

        let mut learner = Learner::new(1, &[2], 5.0);
        let cfg = TrainConfig {
            entropy_coef: 0.0,
            ..config()
        };
        ppo_update(&mut learner, &b, &cfg, StepSizes::initial(&cfg)).unwrap();
        assert_eq!(learner.policies, before);
    }

    #[test]
    fn positive_advantage_raises_logit() {
        let mut learner = Learner::new(1, &[3], 0.0);
        let b = single_agent_buffer(vec![transition(0, 0, 2, 1.0, true)]);
        let cfg = config();
        a2c_update(&mut learner, &b, &cfg, StepSizes::initial(&cfg)).unwrap();
        let row = learner.policies.row(0, 0);
        assert!(row[2] > 0.0 && row[0] < 0.0 && row[1] < 0.0);
    }

    #[test]
    fn stale_buffers_are_rejected() {
        let mut learner = Learner::new(1, &[2], 1.0);
        let b = single_agent_buffer(vec![transition(0, 0, 0, 1.0, true)]);
        let cfg = config();
        a2c_update(&mut learner, &b, &cfg, StepSizes::initial(&cfg)).unwrap();
        assert_eq!(
            a2c_update(&mut learner, &b, &cfg, StepSizes::initial(&cfg)),
            Err(Error::StaleBuffer {
                expected: 1,
                found: 0
            })
        );
    }

    #[test]
    fn buffer_rejects_bad_episodes() {
        let mut b = RolloutBuffer::new(0, 1, 1);
        assert!(b
            .push(Episode {
                transitions: vec![transition(0, 0, 0, 0.0, true)],
                apples: Vec::new()
            })
            .is_err());
        assert!(b
            .push(Episode {
                transitions: vec![transition(0, 0, 0, 1.0, false); 2],
                apples: Vec::new()
            })
            .is_err());
    }

    #[test]
    fn config_problems_are_listed() {
        let cfg = TrainConfig {
            ppo_clip: 1.5,
            gae_lambda: 2.0,
            num_envs: 0,
            ..Default::default()
        };
        let p = cfg.problems();
        assert_eq!(p.len(), 3);
        assert!(p[0].starts_with("gae_lambda"));
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn learning_rate_decays_to_floor() {
        let cfg = TrainConfig {
            total_steps: 100,
            ..Default::default()
        };
        assert_eq!(cfg.decayed(0.01, 0), 0.01);
        assert_eq!(cfg.decayed(0.01, 100), FINAL_LEARNING_RATE);
        assert_eq!(cfg.decayed(0.01, 500), FINAL_LEARNING_RATE);
    }

    #[test]
    fn zero_budget_returns_initial_policies() {
        let cfg = TrainConfig {
            total_steps: 0,
            ..Default::default()
        };
        let pd = DilemmaPayoffs::new(5.0, 3.0, 1.0, 2.0).unwrap();
        let out = train(|_| RepeatedMatrixEnv::new(pd, 100), &cfg).unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.learner.policies, SoftmaxPolicyProfile::uniform(1, &[2, 2]));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            total_steps: 2_000,
            num_envs: 2,
            episode_length: 50,
            ..Default::default()
        };
        let pd = DilemmaPayoffs::new(5.0, 3.0, 1.0, 2.0).unwrap();
        let a = train(|_| RepeatedMatrixEnv::new(pd, 50), &cfg).unwrap();
        let b = train(|_| RepeatedMatrixEnv::new(pd, 50), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps, 2_000);
        assert_eq!(a.log.len(), 40 * 2);
    }
}

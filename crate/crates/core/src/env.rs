//! Environments: a repeated 2x2 matrix game, the mini-CleanUp gridworld and
//! a random tabular Markov game generator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::DilemmaPayoffs;
use crate::markov::TabularMarkovGame;
use crate::rng::{flat_simplex, seeded_stream};

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    /// Encoded observation index per agent.
    pub observations: Vec<usize>,
    /// Strictly positive per-agent rewards.
    pub rewards: Vec<f64>,
    /// Episode over (truncated or terminal).
    pub done: bool,
    /// Episode ended in a true terminal state; truncation leaves this false.
    pub terminal: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepInfo {
    /// Apples collected this step, per agent. Empty for matrix games.
    pub apples: Vec<u32>,
    pub pollution: Option<f64>,
}

/// Simultaneous-move environment with per-agent tabular observations.
pub trait Environment {
    fn num_agents(&self) -> usize;
    fn action_counts(&self) -> &[usize];
    /// Size of every agent's observation space.
    fn observation_count(&self) -> usize;
    fn episode_length(&self) -> usize;
    /// Starts a new episode and returns the initial observations.
    fn reset(&mut self, seed: u64) -> Vec<usize>;
    fn step(&mut self, actions: &[usize]) -> Result<EnvStep>;
    /// Whether consumption is counted in apples rather than returns.
    fn tracks_apples(&self) -> bool {
        false
    }
}

fn check_actions(actions: &[usize], counts: &[usize]) -> Result<()> {
    if actions.len() != counts.len() {
        return Err(Error::Shape(format!(
            "{} actions for {} agents",
            actions.len(),
            counts.len()
        )));
    }
    for (&a, &c) in actions.iter().zip(counts) {
        crate::error::check_index("action", a, c)?;
    }
    Ok(())
}

/// Two agents playing the same 2x2 dilemma every step.
#[derive(Debug, Clone)]
pub struct RepeatedMatrixEnv {
    payoffs: DilemmaPayoffs,
    episode_length: usize,
    t: usize,
}

const MATRIX_ACTIONS: [usize; 2] = [2, 2];

impl RepeatedMatrixEnv {
    pub fn new(payoffs: DilemmaPayoffs, episode_length: usize) -> Result<Self> {
        payoffs.validate()?;
        if episode_length == 0 {
            return Err(Error::InvalidParameter {
                name: "episode_length",
                reason: "must be positive".into(),
            });
        }
        Ok(Self {
            payoffs,
            episode_length,
            t: 0,
        })
    }

    pub fn payoffs(&self) -> &DilemmaPayoffs {
        &self.payoffs
    }

    /// The stage game as a one-state Markov game.
    pub fn to_markov_game(&self, discount: f64) -> Result<TabularMarkovGame> {
        let mut rewards = Vec::with_capacity(8);
        for row in 0..2 {
            for col in 0..2 {
                let (a, b) = self.payoffs.rewards(row, col);
                rewards.push(a);
                rewards.push(b);
            }
        }
        TabularMarkovGame::new(1, vec![2, 2], vec![1.0; 4], rewards, vec![1.0], discount)
    }
}

impl Environment for RepeatedMatrixEnv {
    fn num_agents(&self) -> usize {
        2
    }

    fn action_counts(&self) -> &[usize] {
        &MATRIX_ACTIONS
    }

    fn observation_count(&self) -> usize {
        1
    }

    fn episode_length(&self) -> usize {
        self.episode_length
    }

    fn reset(&mut self, _seed: u64) -> Vec<usize> {
        self.t = 0;
        vec![0, 0]
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        check_actions(actions, &MATRIX_ACTIONS)?;
        let (a, b) = self.payoffs.rewards(actions[0], actions[1]);
        self.t += 1;
        Ok(EnvStep {
            observations: vec![0, 0],
            rewards: vec![a, b],
            done: self.t >= self.episode_length,
            terminal: false,
            info: StepInfo::default(),
        })
    }
}

/// Parameters of the mini-CleanUp gridworld.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MiniCleanupConfig {
    pub width: usize,
    pub height: usize,
    pub num_agents: usize,
    /// Top rows form the river; the rest is orchard.
    pub river_rows: usize,
    /// Spawn probability per empty orchard cell per step.
    pub regen_rate: f64,
    pub pollution_increment: f64,
    /// Removed per agent that cleans while standing in the river.
    pub clean_amount: f64,
    /// At or above this pollution no apples spawn.
    pub pollution_threshold: f64,
    pub initial_pollution: f64,
    pub episode_length: usize,
    pub apple_reward: f64,
    /// Paid to every agent every step.
    pub base_reward: f64,
}

impl Default for MiniCleanupConfig {
    fn default() -> Self {
        Self {
            width: 8,
            height: 8,
            num_agents: 3,
            river_rows: 2,
            regen_rate: 0.05,
            pollution_increment: 0.02,
            clean_amount: 0.05,
            pollution_threshold: 0.6,
            initial_pollution: 0.5,
            episode_length: 100,
            apple_reward: 1.0,
            base_reward: 0.01,
        }
    }
}

impl MiniCleanupConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if self.width == 0 || self.height == 0 {
            return bad("grid", "width and height must be positive");
        }
        if self.num_agents == 0 {
            return bad("num_agents", "must be positive");
        }
        if self.num_agents > self.width * self.height {
            return bad("num_agents", "more agents than free cells");
        }
        if self.river_rows >= self.height {
            return bad("river_rows", "must leave at least one orchard row");
        }
        if !(self.regen_rate >= 0.0 && self.regen_rate <= 1.0) {
            return bad("regen_rate", "must lie in [0, 1]");
        }
        if !(self.pollution_threshold > 0.0 && self.pollution_threshold <= 1.0) {
            return bad("pollution_threshold", "must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.initial_pollution) {
            return bad("initial_pollution", "must lie in [0, 1]");
        }
        if !(self.pollution_increment >= 0.0) || !(self.clean_amount >= 0.0) {
            return bad("pollution dynamics", "increment and clean amount must be nonnegative");
        }
        if self.episode_length == 0 {
            return bad("episode_length", "must be positive");
        }
        if !(self.apple_reward >= 0.0) || !self.apple_reward.is_finite() {
            return bad("apple_reward", "must be finite and nonnegative");
        }
        if !(self.base_reward > 0.0) || !self.base_reward.is_finite() {
            return bad("base_reward", "must be finite and strictly positive");
        }
        Ok(())
    }
}

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const CLEAN: usize = 4;
pub const NOOP: usize = 5;

const POLLUTION_BUCKETS: usize = 4;
const BITMAP_STATES: usize = 512;

/// Small harvest-versus-clean gridworld with a global pollution level.
///
/// Cells are indexed `row * width + col`; row 0 is the top of the river.
#[derive(Debug, Clone)]
pub struct MiniCleanup {
    config: MiniCleanupConfig,
    action_counts: Vec<usize>,
    rng: ChaCha8Rng,
    positions: Vec<usize>,
    apples: Vec<bool>,
    pollution: f64,
    t: usize,
    spawned: u64,
    harvested: u64,
}

impl MiniCleanup {
    pub fn new(config: MiniCleanupConfig) -> Result<Self> {
        config.validate()?;
        let cells = config.width * config.height;
        Ok(Self {
            action_counts: vec![6; config.num_agents],
            positions: vec![0; config.num_agents],
            apples: vec![false; cells],
            pollution: config.initial_pollution,
            rng: seeded_stream(0, 0),
            t: 0,
            spawned: 0,
            harvested: 0,
            config,
        })
    }

    pub fn config(&self) -> &MiniCleanupConfig {
        &self.config
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn pollution(&self) -> f64 {
        self.pollution
    }

    /// Indices of cells currently holding an apple.
    pub fn apple_cells(&self) -> Vec<usize> {
        self.apples
            .iter()
            .enumerate()
            .filter_map(|(c, &a)| a.then_some(c))
            .collect()
    }

    /// Apples spawned and harvested since the last reset.
    pub fn spawned(&self) -> u64 {
        self.spawned
    }

    pub fn harvested(&self) -> u64 {
        self.harvested
    }

    pub fn in_river(&self, cell: usize) -> bool {
        cell / self.config.width < self.config.river_rows
    }

    fn moved(&self, cell: usize, action: usize) -> usize {
        let w = self.config.width;
        let (row, col) = (cell / w, cell % w);
        match action {
            UP if row > 0 => cell - w,
            DOWN if row + 1 < self.config.height => cell + w,
            LEFT if col > 0 => cell - 1,
            RIGHT if col + 1 < w => cell + 1,
            _ => cell,
        }
    }

    fn observe(&self, agent: usize) -> usize {
        let (w, h) = (self.config.width as isize, self.config.height as isize);
        let cell = self.positions[agent];
        let (row, col) = ((cell as isize) / w, (cell as isize) % w);
        let mut bitmap = 0;
        let mut bit = 0;
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (r, c) = (row + dr, col + dc);
                if r >= 0 && r < h && c >= 0 && c < w && self.apples[(r * w + c) as usize] {
                    bitmap |= 1 << bit;
                }
                bit += 1;
            }
        }
        let bucket = ((self.pollution * POLLUTION_BUCKETS as f64) as usize).min(POLLUTION_BUCKETS - 1);
        (cell * POLLUTION_BUCKETS + bucket) * BITMAP_STATES + bitmap
    }

    fn observations(&self) -> Vec<usize> {
        (0..self.config.num_agents).map(|i| self.observe(i)).collect()
    }
}

impl Environment for MiniCleanup {
    fn num_agents(&self) -> usize {
        self.config.num_agents
    }

    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn observation_count(&self) -> usize {
        self.config.width * self.config.height * POLLUTION_BUCKETS * BITMAP_STATES
    }

    fn episode_length(&self) -> usize {
        self.config.episode_length
    }

    fn tracks_apples(&self) -> bool {
        true
    }

    /// Clears apples, restores the initial pollution and draws distinct
    /// starting cells uniformly at random.
    fn reset(&mut self, seed: u64) -> Vec<usize> {
        self.rng = seeded_stream(seed, 0);
        self.apples.iter_mut().for_each(|a| *a = false);
        self.pollution = self.config.initial_pollution;
        self.t = 0;
        self.spawned = 0;
        self.harvested = 0;
        let mut free: Vec<usize> = (0..self.apples.len()).collect();
        for i in 0..self.config.num_agents {
            let k = self.rng.random_range(0..free.len());
            self.positions[i] = free.swap_remove(k);
        }
        self.observations()
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        check_actions(actions, &self.action_counts)?;
        let cfg = &self.config;
        let n = cfg.num_agents;
        let mut rewards = vec![cfg.base_reward; n];
        let mut apples = vec![0u32; n];

        for i in 0..n {
            self.positions[i] = self.moved(self.positions[i], actions[i]);
        }
        // lower index harvests first on shared cells
        for i in 0..n {
            let cell = self.positions[i];
            if self.apples[cell] {
                self.apples[cell] = false;
                apples[i] += 1;
                rewards[i] += self.config.apple_reward;
                self.harvested += 1;
            }
        }
        let cleaners = (0..n)
            .filter(|&i| actions[i] == CLEAN && self.in_river(self.positions[i]))
            .count() as f64;
        let cfg = &self.config;
        self.pollution = (self.pollution + cfg.pollution_increment - cfg.clean_amount * cleaners)
            .clamp(0.0, 1.0);

        if self.pollution < cfg.pollution_threshold && cfg.regen_rate > 0.0 {
            let orchard_start = cfg.river_rows * cfg.width;
            for cell in orchard_start..self.apples.len() {
                if self.apples[cell] || self.positions.contains(&cell) {
                    continue;
                }
                if self.rng.random::<f64>() < cfg.regen_rate {
                    self.apples[cell] = true;
                    self.spawned += 1;
                }
            }
        }

        self.t += 1;
        Ok(EnvStep {
            observations: self.observations(),
            rewards,
            done: self.t >= self.config.episode_length,
            terminal: false,
            info: StepInfo {
                apples,
                pollution: Some(self.pollution),
            },
        })
    }
}

/// Random game with flat-simplex transition rows and initial distribution,
/// and rewards uniform on `(0.1, 1.0]`.
pub fn random_markov_game(
    num_agents: usize,
    num_states: usize,
    action_counts: &[usize],
    gamma: f64,
    seed: u64,
) -> Result<TabularMarkovGame> {
    if action_counts.len() != num_agents {
        return Err(Error::Shape(format!(
            "{} action counts for {num_agents} agents",
            action_counts.len()
        )));
    }
    if num_states == 0 || action_counts.iter().any(|&a| a == 0) {
        return Err(Error::Empty("state or action space"));
    }
    let mut rng = seeded_stream(seed, 0);
    let joint: usize = action_counts.iter().product();
    let mut transitions = Vec::with_capacity(num_states * joint * num_states);
    for _ in 0..num_states * joint {
        transitions.extend(flat_simplex(&mut rng, num_states));
    }
    let rewards = (0..num_states * joint * num_agents)
        .map(|_| 1.0 - 0.9 * rng.random::<f64>())
        .collect();
    let initial = flat_simplex(&mut rng, num_states);
    TabularMarkovGame::new(
        num_states,
        action_counts.to_vec(),
        transitions,
        rewards,
        initial,
        gamma,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{COOPERATE, DEFECT};
    use crate::markov::{solve_values, SoftmaxPolicyProfile};

    fn pd() -> DilemmaPayoffs {
        DilemmaPayoffs::new(5.0, 3.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn matrix_rewards() {
        let mut env = RepeatedMatrixEnv::new(pd(), 3).unwrap();
        env.reset(0);
        assert_eq!(env.step(&[COOPERATE, COOPERATE]).unwrap().rewards, vec![3.0, 3.0]);
        assert_eq!(env.step(&[DEFECT, COOPERATE]).unwrap().rewards, vec![5.0, 1.0]);
        let last = env.step(&[DEFECT, DEFECT]).unwrap();
        assert_eq!(last.rewards, vec![2.0, 2.0]);
        assert!(last.done && !last.terminal);
        assert!(env.step(&[2, 0]).is_err());
    }

    #[test]
    fn matrix_export_values() {
        let env = RepeatedMatrixEnv::new(pd(), 100).unwrap();
        let game = env.to_markov_game(0.9).unwrap();
        let big = 40.0;
        let pol = SoftmaxPolicyProfile::from_logits(
            1,
            vec![2, 2],
            vec![vec![big, -big], vec![big, -big]],
        )
        .unwrap();
        let v = solve_values(&game, &pol).unwrap();
        assert!((v.v(0, 0) - 30.0).abs() < 1e-9);
        assert!((v.v(1, 0) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn cleanup_without_regen_has_no_apples() {
        let cfg = MiniCleanupConfig {
            regen_rate: 0.0,
            ..Default::default()
        };
        let mut env = MiniCleanup::new(cfg).unwrap();
        env.reset(3);
        for t in 0..100 {
            let step = env.step(&[t % 6, (t + 1) % 6, (t + 2) % 6]).unwrap();
            assert!(step.rewards.iter().all(|&r| r == 0.01));
        }
        assert_eq!(env.spawned(), 0);
    }

    #[test]
    fn cleanup_heavy_pollution_blocks_growth() {
        let cfg = MiniCleanupConfig {
            initial_pollution: 1.0,
            regen_rate: 1.0,
            ..Default::default()
        };
        let mut env = MiniCleanup::new(cfg).unwrap();
        env.reset(1);
        for _ in 0..50 {
            env.step(&[NOOP, NOOP, NOOP]).unwrap();
            assert!(env.pollution() >= 0.6);
        }
        assert!(env.apple_cells().is_empty());
    }

    #[test]
    fn cleaning_only_counts_in_river() {
        let cfg = MiniCleanupConfig {
            num_agents: 1,
            pollution_increment: 0.0,
            ..Default::default()
        };
        let mut env = MiniCleanup::new(cfg).unwrap();
        env.reset(0);
        // walk to the top row
        for _ in 0..8 {
            env.step(&[UP]).unwrap();
        }
        let before = env.pollution();
        env.step(&[CLEAN]).unwrap();
        assert!((before - env.pollution() - 0.05).abs() < 1e-12);
        for _ in 0..8 {
            env.step(&[DOWN]).unwrap();
        }
        let before = env.pollution();
        env.step(&[CLEAN]).unwrap();
        assert_eq!(before, env.pollution());
    }

    #[test]
    fn cleanup_rejects_crowding() {
        let cfg = MiniCleanupConfig {
            width: 1,
            height: 2,
            river_rows: 1,
            num_agents: 3,
            ..Default::default()
        };
        assert!(MiniCleanup::new(cfg).is_err());
    }

    #[test]
    fn random_games_are_valid_and_seeded() {
        let a = random_markov_game(2, 3, &[2, 3], 0.9, 7).unwrap();
        let b = random_markov_game(2, 3, &[2, 3], 0.9, 7).unwrap();
        assert_eq!(a, b);
        let one = random_markov_game(2, 1, &[2, 2], 0.5, 1).unwrap();
        for j in 0..4 {
            assert_eq!(one.transition_row(0, j), &[1.0]);
        }
        assert!(random_markov_game(3, 2, &[2, 2], 0.5, 1).is_err());
    }
}

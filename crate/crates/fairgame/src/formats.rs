//! JSON game files and policy snapshots.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fairgame_core::game::{DilemmaPayoffs, NormalFormGame, COOPERATE, DEFECT};
use fairgame_core::markov::{SoftmaxPolicyProfile, TabularMarkovGame};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses `text` as `T`, reporting syntax and type errors with positions.
pub(crate) fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(path, &e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalFormFile {
    players: usize,
    strategies: Vec<usize>,
    payoffs: Vec<f64>,
}

/// A game read from disk. `dilemma` is set for symmetric 2x2 games.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGame {
    pub game: NormalFormGame,
    pub dilemma: Option<DilemmaPayoffs>,
}

pub fn load_game(path: &Path) -> Result<LoadedGame> {
    parse_game(path, &read_text(path)?)
}

/// Accepts `{"players", "strategies", "payoffs"}` or `{"T", "R", "S", "P"}`.
/// Payoffs must be strictly positive.
pub fn parse_game(path: &Path, text: &str) -> Result<LoadedGame> {
    let value: serde_json::Value = parse_json(path, text)?;
    if value.get("T").is_some() {
        let d: DilemmaPayoffs = parse_json(path, text)?;
        d.validate().map_err(Error::rejected)?;
        return Ok(LoadedGame {
            game: d.to_game(),
            dilemma: Some(d),
        });
    }
    let file: NormalFormFile = parse_json(path, text)?;
    if file.players != file.strategies.len() {
        return Err(Error::invalid(format!(
            "players = {} but {} strategy counts given",
            file.players,
            file.strategies.len()
        )));
    }
    let game = NormalFormGame::new(file.strategies, file.payoffs).map_err(Error::rejected)?;
    game.ensure_positive().map_err(Error::rejected)?;
    let dilemma = symmetric_dilemma(&game);
    Ok(LoadedGame { game, dilemma })
}

/// Reads `(T, R, S, P)` off a symmetric two-player 2x2 game.
fn symmetric_dilemma(game: &NormalFormGame) -> Option<DilemmaPayoffs> {
    if game.strategy_counts() != [2, 2] {
        return None;
    }
    let at = |a: usize, b: usize, player: usize| game.payoff(2 * a + b, player);
    let r = at(COOPERATE, COOPERATE, 0);
    let s = at(COOPERATE, DEFECT, 0);
    let t = at(DEFECT, COOPERATE, 0);
    let p = at(DEFECT, DEFECT, 0);
    let symmetric = at(COOPERATE, COOPERATE, 1) == r
        && at(DEFECT, COOPERATE, 1) == s
        && at(COOPERATE, DEFECT, 1) == t
        && at(DEFECT, DEFECT, 1) == p;
    symmetric.then_some(DilemmaPayoffs { t, r, s, p })
}

pub fn game_to_json(game: &NormalFormGame) -> String {
    let file = NormalFormFile {
        players: game.num_players(),
        strategies: game.strategy_counts().to_vec(),
        payoffs: game.payoffs().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serialises")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkovGameFile {
    agents: usize,
    states: usize,
    actions: Vec<usize>,
    gamma: f64,
    rho0: Vec<f64>,
    transitions: BTreeMap<String, Vec<f64>>,
    rewards: BTreeMap<String, f64>,
}

fn joint_key(prefix: &[usize], actions: &[usize]) -> String {
    prefix
        .iter()
        .chain(actions)
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn load_markov_game(path: &Path) -> Result<TabularMarkovGame> {
    parse_markov_game(path, &read_text(path)?)
}

/// Every `(s, joint)` transition row and every `(i, s, joint)` reward must
/// be present; unknown keys are rejected.
pub fn parse_markov_game(path: &Path, text: &str) -> Result<TabularMarkovGame> {
    let file: MarkovGameFile = parse_json(path, text)?;
    let mut problems = Vec::new();
    if file.actions.len() != file.agents {
        problems.push(format!(
            "agents = {} but {} action counts given",
            file.agents,
            file.actions.len()
        ));
    }
    if file.actions.iter().any(|&a| a == 0) || file.states == 0 {
        problems.push("state and action counts must be positive".to_string());
    }
    if !problems.is_empty() {
        return Err(Error::Invalid(problems));
    }
    let joint: usize = file.actions.iter().product();
    let s_count = file.states;
    let decode = |mut a: usize| {
        let mut out = vec![0; file.actions.len()];
        for (slot, &c) in out.iter_mut().zip(&file.actions).rev() {
            *slot = a % c;
            a /= c;
        }
        out
    };

    let mut transitions = Vec::with_capacity(s_count * joint * s_count);
    let mut rewards = Vec::with_capacity(s_count * joint * file.agents);
    let mut used_t = 0;
    let mut used_r = 0;
    for s in 0..s_count {
        for a in 0..joint {
            let acts = decode(a);
            let key = joint_key(&[s], &acts);
            match file.transitions.get(&key) {
                Some(row) if row.len() == s_count => {
                    transitions.extend_from_slice(row);
                    used_t += 1;
                }
                Some(row) => {
                    problems.push(format!(
                        "transitions[\"{key}\"] has {} entries, expected {s_count}",
                        row.len()
                    ));
                    transitions.extend(std::iter::repeat_n(0.0, s_count));
                }
                None => {
                    problems.push(format!("transitions[\"{key}\"] is missing"));
                    transitions.extend(std::iter::repeat_n(0.0, s_count));
                }
            }
            for i in 0..file.agents {
                let key = joint_key(&[i, s], &acts);
                match file.rewards.get(&key) {
                    Some(&r) => {
                        rewards.push(r);
                        used_r += 1;
                    }
                    None => {
                        problems.push(format!("rewards[\"{key}\"] is missing"));
                        rewards.push(0.0);
                    }
                }
            }
        }
    }
    if used_t != file.transitions.len() {
        problems.push("transitions has keys outside the state/action ranges".to_string());
    }
    if used_r != file.rewards.len() {
        problems.push("rewards has keys outside the agent/state/action ranges".to_string());
    }
    if !problems.is_empty() {
        return Err(Error::Invalid(problems));
    }
    TabularMarkovGame::new(
        s_count,
        file.actions,
        transitions,
        rewards,
        file.rho0,
        file.gamma,
    )
    .map_err(Error::rejected)
}

pub fn markov_game_to_json(game: &TabularMarkovGame) -> String {
    let mut transitions = BTreeMap::new();
    let mut rewards = BTreeMap::new();
    for s in 0..game.num_states() {
        for a in 0..game.num_joint_actions() {
            let acts = game.decode_joint(a);
            transitions.insert(joint_key(&[s], &acts), game.transition_row(s, a).to_vec());
            for i in 0..game.num_agents() {
                rewards.insert(joint_key(&[i, s], &acts), game.reward(i, s, a));
            }
        }
    }
    let file = MarkovGameFile {
        agents: game.num_agents(),
        states: game.num_states(),
        actions: game.action_counts().to_vec(),
        gamma: game.discount(),
        rho0: game.initial_dist().to_vec(),
        transitions,
        rewards,
    };
    serde_json::to_string_pretty(&file).expect("plain data serialises")
}

/// `snapshot[i][s][a]`: logit of agent `i` for action `a` in state `s`.
pub fn policy_to_json(policies: &SoftmaxPolicyProfile) -> String {
    let tables: Vec<Vec<&[f64]>> = (0..policies.num_agents())
        .map(|i| (0..policies.num_states()).map(|s| policies.row(i, s)).collect())
        .collect();
    serde_json::to_string(&tables).expect("plain data serialises")
}

pub fn parse_policy(path: &Path, text: &str) -> Result<SoftmaxPolicyProfile> {
    let tables: Vec<Vec<Vec<f64>>> = parse_json(path, text)?;
    let states = tables.first().map_or(0, Vec::len);
    if tables.is_empty() || states == 0 {
        return Err(Error::invalid("policy snapshot has no agents or no states"));
    }
    let mut counts = Vec::with_capacity(tables.len());
    let mut logits = Vec::with_capacity(tables.len());
    for (i, table) in tables.into_iter().enumerate() {
        if table.len() != states {
            return Err(Error::invalid(format!(
                "agent {i} has {} states, agent 0 has {states}",
                table.len()
            )));
        }
        let width = table[0].len();
        if table.iter().any(|row| row.len() != width) {
            return Err(Error::invalid(format!("agent {i} has ragged logit rows")));
        }
        counts.push(width);
        logits.push(table.into_iter().flatten().collect());
    }
    SoftmaxPolicyProfile::from_logits(states, counts, logits).map_err(Error::rejected)
}

pub fn load_policy(path: &Path) -> Result<SoftmaxPolicyProfile> {
    parse_policy(path, &read_text(path)?)
}

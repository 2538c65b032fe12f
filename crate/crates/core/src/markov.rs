//! Tabular Markov games and the exact (oracle) layer: policy evaluation by
//! linear solve, the fair log-value objective and its exact gradient.
//!
//! Joint actions are encoded row-major with the last agent varying fastest,
//! the same convention as joint profiles in [`crate::game`].
//!
//! The fair objective of agent `i` is
//! `J_i = E_{s0 ~ rho0} [ sum_j c_i(j) log V_j(s0) ]` with `c_i(i) = 1` and
//! `c_i(j) = alpha` otherwise. Its gradient with respect to agent `m`'s
//! logits is assembled from `grad_m V_j`, which is the unique fixed point of
//! the affine contraction `g = G_mj + gamma P_pi g`; with tabular softmax
//! policies that fixed point is a linear solve against `I - gamma P_pi`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_index, Error, Result};
use crate::linalg::Lu;
use crate::rng::{sample_categorical, seeded_stream};

const SUM_TOLERANCE: f64 = 1e-12;

fn check_distribution(what: &'static str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::NotADistribution(what));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotADistribution(what));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMarkovGame {
    num_states: usize,
    action_counts: Vec<usize>,
    num_joint: usize,
    // [(s * num_joint + a) * num_states + s']
    transitions: Vec<f64>,
    // [(s * num_joint + a) * num_agents + i]
    rewards: Vec<f64>,
    initial_dist: Vec<f64>,
    discount: f64,
}

impl TabularMarkovGame {
    /// Builds and validates a game.
    ///
    /// `transitions` is indexed `[(state * num_joint + joint) * num_states + next]`
    /// and `rewards` `[(state * num_joint + joint) * num_agents + agent]`.
    pub fn new(
        num_states: usize,
        action_counts: Vec<usize>,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial_dist: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::Empty("state space"));
        }
        if action_counts.is_empty() {
            return Err(Error::Empty("agent list"));
        }
        if action_counts.iter().any(|&c| c == 0) {
            return Err(Error::Shape("every agent needs at least one action".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidParameter {
                name: "discount",
                reason: format!("{discount} is not in [0, 1)"),
            });
        }
        let num_joint: usize = action_counts.iter().product();
        let n = action_counts.len();
        if transitions.len() != num_states * num_joint * num_states {
            return Err(Error::Shape(format!(
                "transition table has {} entries, expected {}",
                transitions.len(),
                num_states * num_joint * num_states
            )));
        }
        if rewards.len() != num_states * num_joint * n {
            return Err(Error::Shape(format!(
                "reward table has {} entries, expected {}",
                rewards.len(),
                num_states * num_joint * n
            )));
        }
        if initial_dist.len() != num_states {
            return Err(Error::Shape(format!(
                "initial distribution has {} entries for {num_states} states",
                initial_dist.len()
            )));
        }
        for row in transitions.chunks_exact(num_states) {
            check_distribution("transition row", row)?;
        }
        check_distribution("initial distribution", &initial_dist)?;
        if let Some(&r) = rewards.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::NonPositivePayoff(r));
        }
        Ok(Self {
            num_states,
            action_counts,
            num_joint,
            transitions,
            rewards,
            initial_dist,
            discount,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_joint_actions(&self) -> usize {
        self.num_joint
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Largest immediate reward.
    pub fn r_max(&self) -> f64 {
        self.rewards.iter().copied().fold(0.0, f64::max)
    }

    #[inline]
    pub fn transition_row(&self, state: usize, joint: usize) -> &[f64] {
        let base = (state * self.num_joint + joint) * self.num_states;
        &self.transitions[base..base + self.num_states]
    }

    #[inline]
    pub fn reward(&self, agent: usize, state: usize, joint: usize) -> f64 {
        self.rewards[(state * self.num_joint + joint) * self.num_agents() + agent]
    }

    pub fn joint_index(&self, actions: &[usize]) -> Result<usize> {
        if actions.len() != self.num_agents() {
            return Err(Error::Shape(format!(
                "{} actions for {} agents",
                actions.len(),
                self.num_agents()
            )));
        }
        let mut index = 0;
        for (&a, &count) in actions.iter().zip(&self.action_counts) {
            check_index("action", a, count)?;
            index = index * count + a;
        }
        Ok(index)
    }

    pub fn decode_joint(&self, mut joint: usize) -> Vec<usize> {
        let mut out = vec![0; self.num_agents()];
        for (slot, &count) in out.iter_mut().zip(&self.action_counts).rev() {
            *slot = joint % count;
            joint /= count;
        }
        out
    }

    /// Samples the next state.
    pub fn sample_next<R: Rng + ?Sized>(&self, rng: &mut R, state: usize, joint: usize) -> usize {
        sample_categorical(rng, self.transition_row(state, joint))
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_categorical(rng, &self.initial_dist)
    }

    fn check_policies(&self, policies: &SoftmaxPolicyProfile) -> Result<()> {
        if policies.num_states() != self.num_states || policies.action_counts() != self.action_counts
        {
            return Err(Error::Shape(format!(
                "policy profile ({} states, actions {:?}) does not match game ({} states, actions {:?})",
                policies.num_states(),
                policies.action_counts(),
                self.num_states,
                self.action_counts
            )));
        }
        Ok(())
    }

    /// Policy-averaged transition matrix, row-major `num_states x num_states`.
    fn averaged_transitions(&self, policies: &SoftmaxPolicyProfile) -> Vec<f64> {
        let s_count = self.num_states;
        let mut out = vec![0.0; s_count * s_count];
        for s in 0..s_count {
            let joint = policies.joint_distribution(s);
            let row = &mut out[s * s_count..(s + 1) * s_count];
            for (a, &pa) in joint.iter().enumerate() {
                for (acc, &p) in row.iter_mut().zip(self.transition_row(s, a)) {
                    *acc += pa * p;
                }
            }
        }
        out
    }

    /// LU factors of `I - gamma P_pi`.
    fn resolvent(&self, policies: &SoftmaxPolicyProfile) -> Result<Lu> {
        let s_count = self.num_states;
        let mut m = self.averaged_transitions(policies);
        for (k, x) in m.iter_mut().enumerate() {
            *x *= -self.discount;
            if k / s_count == k % s_count {
                *x += 1.0;
            }
        }
        Lu::new(s_count, m)
    }
}

/// Per-agent tabular softmax policies, one logit per (state, action).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SoftmaxPolicyProfile {
    num_states: usize,
    action_counts: Vec<usize>,
    // logits[i][s * action_counts[i] + a]
    logits: Vec<Vec<f64>>,
}

impl SoftmaxPolicyProfile {
    pub fn uniform(num_states: usize, action_counts: &[usize]) -> Self {
        Self {
            num_states,
            action_counts: action_counts.to_vec(),
            logits: action_counts
                .iter()
                .map(|&a| vec![0.0; num_states * a])
                .collect(),
        }
    }

    pub fn from_logits(
        num_states: usize,
        action_counts: Vec<usize>,
        logits: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if logits.len() != action_counts.len() {
            return Err(Error::Shape(format!(
                "{} logit tables for {} agents",
                logits.len(),
                action_counts.len()
            )));
        }
        for (table, &a) in logits.iter().zip(&action_counts) {
            if a == 0 || table.len() != num_states * a {
                return Err(Error::Shape(format!(
                    "logit table of length {} for {num_states} states x {a} actions",
                    table.len()
                )));
            }
            if table.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("logit"));
            }
        }
        Ok(Self {
            num_states,
            action_counts,
            logits,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn logits(&self, agent: usize) -> &[f64] {
        &self.logits[agent]
    }

    pub fn logits_mut(&mut self, agent: usize) -> &mut [f64] {
        &mut self.logits[agent]
    }

    pub fn into_logits(self) -> Vec<Vec<f64>> {
        self.logits
    }

    /// Logit row of `agent` at `state`.
    pub fn row(&self, agent: usize, state: usize) -> &[f64] {
        let a = self.action_counts[agent];
        &self.logits[agent][state * a..(state + 1) * a]
    }

    pub fn row_mut(&mut self, agent: usize, state: usize) -> &mut [f64] {
        let a = self.action_counts[agent];
        &mut self.logits[agent][state * a..(state + 1) * a]
    }

    /// `pi_i(. | s)` written into `out`.
    pub fn probs_into(&self, agent: usize, state: usize, out: &mut [f64]) {
        softmax_into(self.row(agent, state), out);
    }

    pub fn probs(&self, agent: usize, state: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.action_counts[agent]];
        self.probs_into(agent, state, &mut out);
        out
    }

    /// Product-form probability of a joint action.
    pub fn joint_policy_prob(&self, state: usize, joint_action: &[usize]) -> Result<f64> {
        check_index("state", state, self.num_states)?;
        if joint_action.len() != self.num_agents() {
            return Err(Error::Shape(format!(
                "{} actions for {} agents",
                joint_action.len(),
                self.num_agents()
            )));
        }
        let mut p = 1.0;
        for (agent, &a) in joint_action.iter().enumerate() {
            check_index("action", a, self.action_counts[agent])?;
            p *= self.probs(agent, state)[a];
        }
        Ok(p)
    }

    /// Distribution over encoded joint actions at `state`.
    pub fn joint_distribution(&self, state: usize) -> Vec<f64> {
        let mut dist = vec![1.0];
        for agent in 0..self.num_agents() {
            let p = self.probs(agent, state);
            let mut next = Vec::with_capacity(dist.len() * p.len());
            for &d in &dist {
                for &q in &p {
                    next.push(d * q);
                }
            }
            dist = next;
        }
        dist
    }

    /// Analytic `E_{a ~ pi_i(.|s)} [ grad log pi_i(a|s) ] * f`, restricted to
    /// the logit row of `state` (all other coordinates are zero).
    ///
    /// The expected score is `pi - pi * sum_b pi_b`, and `sum_b pi_b` is one
    /// by construction of the distribution.
    pub fn expected_baseline_term(&self, agent: usize, state: usize, baseline: f64) -> Vec<f64> {
        let p = self.probs(agent, state);
        p.iter().map(|&pc| baseline * (pc - pc * 1.0)).collect()
    }
}

/// Numerically stable softmax.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = libm::exp(l - max);
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}

/// Exact values of a joint policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueBundle {
    num_states: usize,
    num_joint: usize,
    /// `state_values[i][s]`
    pub state_values: Vec<Vec<f64>>,
    /// `action_values[i][s * num_joint + a]`
    pub action_values: Vec<Vec<f64>>,
    /// `advantages[i][s * num_joint + a]`
    pub advantages: Vec<Vec<f64>>,
}

impl ValueBundle {
    pub fn v(&self, agent: usize, state: usize) -> f64 {
        self.state_values[agent][state]
    }

    pub fn q(&self, agent: usize, state: usize, joint: usize) -> f64 {
        self.action_values[agent][state * self.num_joint + joint]
    }

    pub fn advantage(&self, agent: usize, state: usize, joint: usize) -> f64 {
        self.advantages[agent][state * self.num_joint + joint]
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
}

/// One application of every agent's Bellman operator.
pub fn bellman_apply(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    values: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    game.check_policies(policies)?;
    if values.len() != game.num_agents() || values.iter().any(|v| v.len() != game.num_states) {
        return Err(Error::Shape("value tables must be num_agents x num_states".into()));
    }
    let gamma = game.discount;
    let mut out = vec![vec![0.0; game.num_states]; game.num_agents()];
    for s in 0..game.num_states {
        let joint = policies.joint_distribution(s);
        for (a, &pa) in joint.iter().enumerate() {
            let row = game.transition_row(s, a);
            for (i, v) in values.iter().enumerate() {
                let future: f64 = row.iter().zip(v).map(|(p, x)| p * x).sum();
                out[i][s] += pa * (game.reward(i, s, a) + gamma * future);
            }
        }
    }
    Ok(out)
}

/// Solves `(I - gamma P_pi) V_i = r_{i,pi}` for every agent and fills in
/// action values and advantages.
pub fn solve_values(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
) -> Result<ValueBundle> {
    game.check_policies(policies)?;
    let lu = game.resolvent(policies)?;
    solve_values_with(game, policies, &lu)
}

fn solve_values_with(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    lu: &Lu,
) -> Result<ValueBundle> {
    let (s_count, j_count, n) = (game.num_states, game.num_joint, game.num_agents());
    let mut expected_reward = vec![vec![0.0; s_count]; n];
    for s in 0..s_count {
        for (a, &pa) in policies.joint_distribution(s).iter().enumerate() {
            for (i, r) in expected_reward.iter_mut().enumerate() {
                r[s] += pa * game.reward(i, s, a);
            }
        }
    }
    let mut state_values = Vec::with_capacity(n);
    for r in &expected_reward {
        state_values.push(lu.solve(r)?);
    }
    let mut action_values = vec![vec![0.0; s_count * j_count]; n];
    let mut advantages = vec![vec![0.0; s_count * j_count]; n];
    for i in 0..n {
        for s in 0..s_count {
            for a in 0..j_count {
                let future: f64 = game
                    .transition_row(s, a)
                    .iter()
                    .zip(&state_values[i])
                    .map(|(p, v)| p * v)
                    .sum();
                let q = game.reward(i, s, a) + game.discount * future;
                action_values[i][s * j_count + a] = q;
                advantages[i][s * j_count + a] = q - state_values[i][s];
            }
        }
    }
    Ok(ValueBundle {
        num_states: s_count,
        num_joint: j_count,
        state_values,
        action_values,
        advantages,
    })
}

/// Altruism weight `alpha` and the coefficients `c_i(j)` it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltruismWeights {
    alpha: f64,
}

impl AltruismWeights {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self { alpha })
        } else {
            Err(Error::AlphaOutOfRange(alpha))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            self.alpha
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairObjective {
    /// `J_i` for every agent.
    pub per_agent: Vec<f64>,
    /// `sum_j log V_j(s)` for every state.
    pub proportional_value: Vec<f64>,
    pub values: ValueBundle,
}

pub fn fair_objective(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    weights: &AltruismWeights,
) -> Result<FairObjective> {
    let values = solve_values(game, policies)?;
    let n = game.num_agents();
    let logs: Vec<Vec<f64>> = values
        .state_values
        .iter()
        .map(|v| v.iter().map(|&x| log_positive(x)).collect())
        .collect::<Result<_>>()?;
    let per_agent = (0..n)
        .map(|i| {
            game.initial_dist
                .iter()
                .enumerate()
                .map(|(s, &rho)| {
                    rho * (0..n)
                        .map(|j| weights.coefficient(i, j) * logs[j][s])
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    let proportional_value = (0..game.num_states)
        .map(|s| logs.iter().map(|l| l[s]).sum())
        .collect();
    Ok(FairObjective {
        per_agent,
        proportional_value,
        values,
    })
}

fn log_positive(v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(libm::log(v))
    } else {
        Err(Error::InvalidParameter {
            name: "state value",
            reason: format!("{v} is not positive"),
        })
    }
}

/// Gradient of every agent's fair objective with respect to its own logits.
#[derive(Debug, Clone, PartialEq)]
pub struct FairGradient {
    /// `per_agent[i]` has the shape of agent `i`'s logit table.
    pub per_agent: Vec<Vec<f64>>,
}

impl FairGradient {
    pub fn zeros_like(policies: &SoftmaxPolicyProfile) -> Self {
        Self {
            per_agent: (0..policies.num_agents())
                .map(|i| vec![0.0; policies.logits(i).len()])
                .collect(),
        }
    }
}

/// Immediate gradient term `G_{m,j}(s)` as a row-major
/// `num_states x dim(theta_m)` matrix:
/// `G[s][(s', b)] = sum_a pi(a|s) d/dtheta_m[s', b] log pi_m(a_m|s) Q_j(s, a)`.
pub fn immediate_gradient(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    values: &ValueBundle,
    param_agent: usize,
    value_agent: usize,
) -> Vec<f64> {
    let s_count = game.num_states;
    let a_count = game.action_counts[param_agent];
    let dim = s_count * a_count;
    let mut out = vec![0.0; s_count * dim];
    for s in 0..s_count {
        let own = policies.probs(param_agent, s);
        let joint = policies.joint_distribution(s);
        let row = &mut out[s * dim + s * a_count..s * dim + (s + 1) * a_count];
        for (a, &pa) in joint.iter().enumerate() {
            let taken = game.decode_joint(a)[param_agent];
            let q = values.q(value_agent, s, a);
            for (b, slot) in row.iter_mut().enumerate() {
                let score = if b == taken { 1.0 } else { 0.0 } - own[b];
                *slot += pa * score * q;
            }
        }
    }
    out
}

/// One application of the gradient fixed-point map `g -> G + gamma P_pi g`,
/// on row-major `num_states x dim` matrices.
pub fn gradient_operator_apply(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    immediate: &[f64],
    g: &[f64],
) -> Result<Vec<f64>> {
    game.check_policies(policies)?;
    let s_count = game.num_states;
    if immediate.len() != g.len() || g.len() % s_count != 0 {
        return Err(Error::Shape("gradient fields must be num_states x dim".into()));
    }
    let dim = g.len() / s_count;
    let p = game.averaged_transitions(policies);
    let mut out = immediate.to_vec();
    for s in 0..s_count {
        for s2 in 0..s_count {
            let w = game.discount * p[s * s_count + s2];
            if w != 0.0 {
                for k in 0..dim {
                    out[s * dim + k] += w * g[s2 * dim + k];
                }
            }
        }
    }
    Ok(out)
}

/// `grad_{theta_m} V_j` for all states: fixed point of
/// [`gradient_operator_apply`], obtained column by column from the LU
/// factors of `I - gamma P_pi`.
fn value_gradient(lu: &Lu, immediate: &[f64], s_count: usize) -> Result<Vec<f64>> {
    let dim = immediate.len() / s_count;
    let mut out = vec![0.0; immediate.len()];
    let mut rhs = vec![0.0; s_count];
    for k in 0..dim {
        for s in 0..s_count {
            rhs[s] = immediate[s * dim + k];
        }
        if rhs.iter().all(|&x| x == 0.0) {
            continue;
        }
        let col = lu.solve(&rhs)?;
        for s in 0..s_count {
            out[s * dim + k] = col[s];
        }
    }
    Ok(out)
}

/// `grad_{theta_m} J_i` for an arbitrary objective index `i` and parameter
/// owner `m`.
pub fn objective_gradient(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    weights: &AltruismWeights,
    objective_agent: usize,
    param_agent: usize,
) -> Result<Vec<f64>> {
    game.check_policies(policies)?;
    check_index("agent", objective_agent, game.num_agents())?;
    check_index("agent", param_agent, game.num_agents())?;
    let lu = game.resolvent(policies)?;
    let values = solve_values_with(game, policies, &lu)?;
    objective_gradient_with(game, policies, weights, &values, &lu, objective_agent, param_agent)
}

fn objective_gradient_with(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    weights: &AltruismWeights,
    values: &ValueBundle,
    lu: &Lu,
    objective_agent: usize,
    param_agent: usize,
) -> Result<Vec<f64>> {
    let s_count = game.num_states;
    let dim = s_count * game.action_counts[param_agent];
    let mut grad = vec![0.0; dim];
    for j in 0..game.num_agents() {
        let c = weights.coefficient(objective_agent, j);
        if c == 0.0 {
            continue;
        }
        let g = value_gradient(
            lu,
            &immediate_gradient(game, policies, values, param_agent, j),
            s_count,
        )?;
        for (s0, &rho) in game.initial_dist.iter().enumerate() {
            if rho == 0.0 {
                continue;
            }
            let scale = rho * c / values.v(j, s0);
            for (out, &x) in grad.iter_mut().zip(&g[s0 * dim..(s0 + 1) * dim]) {
                *out += scale * x;
            }
        }
    }
    Ok(grad)
}

/// `grad_{theta_i} J_i` for every agent `i`.
pub fn exact_fair_gradient(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    weights: &AltruismWeights,
) -> Result<FairGradient> {
    game.check_policies(policies)?;
    let lu = game.resolvent(policies)?;
    let values = solve_values_with(game, policies, &lu)?;
    let per_agent = (0..game.num_agents())
        .map(|i| objective_gradient_with(game, policies, weights, &values, &lu, i, i))
        .collect::<Result<_>>()?;
    Ok(FairGradient { per_agent })
}

/// Fair advantage `sum_j c_i(j) A_j(s, a) / V_j(s0)` for agent `i`.
///
/// Values at `initial_state` below `v_floor` are replaced by the floor; the
/// second element reports whether that happened.
pub fn fair_advantage(
    values: &ValueBundle,
    weights: &AltruismWeights,
    agent: usize,
    state: usize,
    joint: usize,
    initial_state: usize,
    v_floor: f64,
) -> Result<(f64, bool)> {
    let n = values.state_values.len();
    check_index("agent", agent, n)?;
    check_index("state", state, values.num_states)?;
    check_index("state", initial_state, values.num_states)?;
    check_index("joint action", joint, values.num_joint)?;
    let mut floored = false;
    let mut total = 0.0;
    for j in 0..n {
        let mut v0 = values.v(j, initial_state);
        if !(v0 >= v_floor) {
            v0 = v_floor;
            floored = true;
        }
        total += weights.coefficient(agent, j) * values.advantage(j, state, joint) / v0;
    }
    Ok((total, floored))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCheck {
    /// Exact `E[grad log pi_i(a_i|s) f(s)]`, one entry per logit.
    pub analytic: FairGradient,
    pub mean: FairGradient,
    pub std_err: FairGradient,
    pub samples: usize,
}

/// Monte Carlo and analytic values of the baseline term
/// `E_{a ~ pi(.|s)} [grad_{theta_i} log pi_i(a_i|s) f(s)]` at every state.
///
/// Sample `k` at state `s` draws from stream `s * num_samples + k`.
pub fn baseline_zero_check<F: Fn(usize) -> f64>(
    policies: &SoftmaxPolicyProfile,
    baseline: F,
    num_samples: usize,
    seed: u64,
) -> Result<BaselineCheck> {
    if num_samples == 0 {
        return Err(Error::Empty("sample set"));
    }
    let n = policies.num_agents();
    let zeros = FairGradient::zeros_like(policies);
    let mut analytic = zeros.clone();
    let mut mean = zeros.clone();
    let mut std_err = zeros;
    let count = num_samples as f64;
    for s in 0..policies.num_states() {
        let f = baseline(s);
        let probs: Vec<Vec<f64>> = (0..n).map(|i| policies.probs(i, s)).collect();
        for i in 0..n {
            let a = policies.action_counts[i];
            analytic.per_agent[i][s * a..(s + 1) * a]
                .copy_from_slice(&policies.expected_baseline_term(i, s, f));
        }
        let mut sums: Vec<Vec<(f64, f64)>> =
            probs.iter().map(|p| vec![(0.0, 0.0); p.len()]).collect();
        for k in 0..num_samples {
            let mut rng = seeded_stream(seed, (s * num_samples + k) as u64);
            for (i, p) in probs.iter().enumerate() {
                let taken = sample_categorical(&mut rng, p);
                for (b, acc) in sums[i].iter_mut().enumerate() {
                    let x = (if b == taken { 1.0 } else { 0.0 } - p[b]) * f;
                    acc.0 += x;
                    acc.1 += x * x;
                }
            }
        }
        for i in 0..n {
            let a = policies.action_counts[i];
            for (b, &(sx, sxx)) in sums[i].iter().enumerate() {
                let m = sx / count;
                let var = if num_samples > 1 {
                    ((sxx - count * m * m) / (count - 1.0)).max(0.0)
                } else {
                    0.0
                };
                mean.per_agent[i][s * a + b] = m;
                std_err.per_agent[i][s * a + b] = libm::sqrt(var / count);
            }
        }
    }
    Ok(BaselineCheck {
        analytic,
        mean,
        std_err,
        samples: num_samples,
    })
}

/// Baseline subtracted inside the Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Baseline {
    /// Raw `sum_j c_i(j) Q_j(s_t, a_t) / V_j(s0)`.
    #[default]
    None,
    /// `sum_j c_i(j) V_j(s_t) / V_j(s0)`, giving the fair-advantage form.
    FairValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McGradient {
    pub mean: FairGradient,
    pub std_err: FairGradient,
    pub rollouts: usize,
    pub horizon: usize,
}

/// Truncation horizon whose tail `gamma^H R_max / (1 - gamma)` is below `tol`.
pub fn default_horizon(gamma: f64, r_max: f64, tol: f64) -> usize {
    if gamma <= 0.0 {
        return 1;
    }
    let h = libm::ceil(libm::log(tol * (1.0 - gamma) / r_max) / libm::log(gamma));
    if h < 1.0 {
        1
    } else {
        h as usize
    }
}

/// Monte Carlo estimate of every `grad_{theta_i} J_i` from truncated
/// rollouts, with exact `Q` and `V` as critics.
///
/// Rollout `k` draws from stream `k` of `seed`, so the estimate does not
/// depend on how rollouts are scheduled.
pub fn mc_fair_gradient(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    weights: &AltruismWeights,
    num_rollouts: usize,
    horizon: usize,
    seed: u64,
) -> Result<McGradient> {
    mc_fair_gradient_with_baseline(
        game,
        policies,
        weights,
        num_rollouts,
        horizon,
        seed,
        Baseline::None,
    )
}

pub fn mc_fair_gradient_with_baseline(
    game: &TabularMarkovGame,
    policies: &SoftmaxPolicyProfile,
    weights: &AltruismWeights,
    num_rollouts: usize,
    horizon: usize,
    seed: u64,
    baseline: Baseline,
) -> Result<McGradient> {
    if num_rollouts == 0 {
        return Err(Error::Empty("rollout set"));
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least one step".into(),
        });
    }
    game.check_policies(policies)?;
    let values = solve_values(game, policies)?;
    let n = game.num_agents();
    let s_count = game.num_states;

    let probs: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| (0..s_count).map(|s| policies.probs(i, s)).collect())
        .collect();
    let zeros = FairGradient::zeros_like(policies);
    let mut sum = zeros.clone();
    let mut sum_sq = zeros.clone();
    let mut sample = zeros;
    let mut actions = vec![0; n];
    let mut weight = vec![0.0; n];

    for k in 0..num_rollouts {
        let mut rng = seeded_stream(seed, k as u64);
        for x in sample.per_agent.iter_mut() {
            x.iter_mut().for_each(|v| *v = 0.0);
        }
        let s0 = game.sample_initial(&mut rng);
        let mut s = s0;
        let mut discount = 1.0;
        for _ in 0..horizon {
            for (i, a) in actions.iter_mut().enumerate() {
                *a = sample_categorical(&mut rng, &probs[i][s]);
            }
            let joint = game.joint_index(&actions)?;
            for (i, w) in weight.iter_mut().enumerate() {
                *w = (0..n)
                    .map(|j| {
                        let b = match baseline {
                            Baseline::None => 0.0,
                            Baseline::FairValue => values.v(j, s),
                        };
                        weights.coefficient(i, j) * (values.q(j, s, joint) - b) / values.v(j, s0)
                    })
                    .sum();
            }
            for i in 0..n {
                let a_count = game.action_counts[i];
                let row = &mut sample.per_agent[i][s * a_count..(s + 1) * a_count];
                for (b, slot) in row.iter_mut().enumerate() {
                    let score = if b == actions[i] { 1.0 } else { 0.0 } - probs[i][s][b];
                    *slot += discount * weight[i] * score;
                }
            }
            s = game.sample_next(&mut rng, s, joint);
            discount *= game.discount;
        }
        for i in 0..n {
            for ((acc, acc2), &x) in sum.per_agent[i]
                .iter_mut()
                .zip(sum_sq.per_agent[i].iter_mut())
                .zip(&sample.per_agent[i])
            {
                *acc += x;
                *acc2 += x * x;
            }
        }
    }

    let count = num_rollouts as f64;
    let mut mean = sum;
    let mut std_err = sum_sq;
    for i in 0..n {
        for (m, se) in mean.per_agent[i].iter_mut().zip(std_err.per_agent[i].iter_mut()) {
            *m /= count;
            let var = if num_rollouts > 1 {
                ((*se - count * *m * *m) / (count - 1.0)).max(0.0)
            } else {
                0.0
            };
            *se = libm::sqrt(var / count);
        }
    }
    Ok(McGradient {
        mean,
        std_err,
        rollouts: num_rollouts,
        horizon,
    })
}

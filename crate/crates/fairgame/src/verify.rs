//! Fixed-seed oracle suites behind `fairgame verify`.

use fairgame_core::env::random_markov_game;
use fairgame_core::game::{
    altruism_level_bruteforce, altruism_level_closed_form, altruistic_extension,
    check_consistency_ts_r2, classify_social_dilemma, find_pure_nash, DilemmaPayoffs,
};
use fairgame_core::markov::{
    baseline_zero_check, bellman_apply, default_horizon, exact_fair_gradient, fair_objective,
    mc_fair_gradient, solve_values, AltruismWeights, SoftmaxPolicyProfile, TabularMarkovGame,
};
use fairgame_core::metrics::gini;
use fairgame_core::seeded_stream;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SUITES: [&str; 6] = ["gradients", "bellman", "baseline", "estimator", "altruism", "gini"];

const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub cases: usize,
    pub checks: usize,
    pub failed_checks: usize,
    /// The first violations, in the order found.
    pub failures: Vec<String>,
}

struct Tally(SuiteReport);

impl Tally {
    fn new(suite: &str) -> Self {
        Self(SuiteReport {
            suite: suite.to_string(),
            passed: true,
            cases: 0,
            checks: 0,
            failed_checks: 0,
            failures: Vec::new(),
        })
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.0.checks += 1;
        if !ok {
            self.0.passed = false;
            self.0.failed_checks += 1;
            if self.0.failures.len() < MAX_LISTED {
                self.0.failures.push(describe());
            }
        }
    }
}

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let report = match name {
        "gradients" => gradients()?,
        "bellman" => bellman()?,
        "baseline" => baseline()?,
        "estimator" => estimator()?,
        "altruism" => altruism()?,
        "gini" => gini_suite()?,
        other => {
            return Err(Error::invalid(format!(
                "unknown suite {other:?}; expected one of {} or all",
                SUITES.join(", ")
            )))
        }
    };
    Ok(report)
}

/// `"all"` runs every suite in order.
pub fn run_suites(name: &str) -> Result<Vec<SuiteReport>> {
    if name == "all" {
        SUITES.iter().map(|s| run_suite(s)).collect()
    } else {
        Ok(vec![run_suite(name)?])
    }
}

fn random_policies<R: Rng>(rng: &mut R, states: usize, actions: &[usize]) -> SoftmaxPolicyProfile {
    let logits = actions
        .iter()
        .map(|&a| (0..states * a).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    SoftmaxPolicyProfile::from_logits(states, actions.to_vec(), logits)
        .expect("shapes agree by construction")
}

/// Case `k` of a suite: up to 3 agents, 5 states and 3 actions each.
fn random_case(
    suite_seed: u64,
    k: u64,
    gamma: (f64, f64),
) -> Result<(TabularMarkovGame, SoftmaxPolicyProfile, u64)> {
    let mut rng = seeded_stream(suite_seed, k);
    let agents = rng.random_range(2..=3);
    let states = rng.random_range(1..=5);
    let actions: Vec<usize> = (0..agents).map(|_| rng.random_range(2..=3)).collect();
    let g = rng.random_range(gamma.0..gamma.1);
    let game = random_markov_game(agents, states, &actions, g, rng.random())?;
    let policies = random_policies(&mut rng, states, &actions);
    Ok((game, policies, rng.random()))
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Exact fair gradients against central differences of the objective.
fn gradients() -> Result<SuiteReport> {
    let mut t = Tally::new("gradients");
    let h = 1e-5;
    for k in 0..50 {
        let (game, policies, extra) = random_case(0xA11CE, k, (0.0, 0.95))?;
        let alpha = (extra % 1001) as f64 / 1000.0;
        let w = AltruismWeights::new(alpha)?;
        let exact = exact_fair_gradient(&game, &policies, &w)?;
        let mut worst = 0.0f64;
        let mut ok = true;
        for i in 0..game.num_agents() {
            for c in 0..policies.logits(i).len() {
                let mut plus = policies.clone();
                plus.logits_mut(i)[c] += h;
                let mut minus = policies.clone();
                minus.logits_mut(i)[c] -= h;
                let fd = (fair_objective(&game, &plus, &w)?.per_agent[i]
                    - fair_objective(&game, &minus, &w)?.per_agent[i])
                    / (2.0 * h);
                let g = exact.per_agent[i][c];
                if g.abs() < 1e-8 {
                    ok &= (g - fd).abs() < 1e-8;
                } else {
                    worst = worst.max(((g - fd) / g).abs());
                }
            }
        }
        ok &= worst <= 1e-4;
        t.0.cases += 1;
        t.check(ok, || format!("game {k}: worst relative error {worst:.3e}, limit 1e-4"));
    }
    Ok(t.0)
}

/// Linear-solve values are Bellman fixed points; the operator contracts.
fn bellman() -> Result<SuiteReport> {
    let mut t = Tally::new("bellman");
    for k in 0..50 {
        let (game, policies, extra) = random_case(0xBE11, k, (0.0, 0.99))?;
        let n = game.num_agents();
        let s = game.num_states();
        let v = solve_values(&game, &policies)?;
        let tv = bellman_apply(&game, &policies, &v.state_values)?;
        let residual = (0..n)
            .map(|i| sup(&tv[i], &v.state_values[i]))
            .fold(0.0, f64::max);
        t.0.cases += 1;
        t.check(residual <= 1e-9, || {
            format!("game {k}: fixed-point residual {residual:.3e} > 1e-9")
        });
        let mut rng = seeded_stream(extra, 0);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let mut draw = || -> Vec<Vec<f64>> {
                (0..n)
                    .map(|_| (0..s).map(|_| rng.random_range(-50.0..50.0)).collect())
                    .collect()
            };
            let (a, b) = (draw(), draw());
            let (ta, tb) = (bellman_apply(&game, &policies, &a)?, bellman_apply(&game, &policies, &b)?);
            for i in 0..n {
                let before = sup(&a[i], &b[i]);
                if before > 0.0 {
                    worst = worst.max(sup(&ta[i], &tb[i]) - game.discount() * before);
                }
            }
        }
        t.check(worst <= 1e-12, || {
            format!("game {k}: contraction exceeded gamma by {worst:.3e}")
        });
    }
    Ok(t.0)
}

/// The score-times-baseline term has zero mean.
fn baseline() -> Result<SuiteReport> {
    let mut t = Tally::new("baseline");
    for k in 0..10 {
        let (game, policies, extra) = random_case(0xBA5E, k, (0.0, 0.9))?;
        let values = solve_values(&game, &policies)?;
        let agent = (extra % game.num_agents() as u64) as usize;
        let f = |s: usize| values.v(agent, s);
        let check = baseline_zero_check(&policies, f, 100_000, extra)?;
        t.0.cases += 1;
        let exact_zero = check.analytic.per_agent.iter().flatten().all(|&x| x == 0.0);
        t.check(exact_zero, || format!("case {k}: analytic baseline term is not exactly zero"));
        let pairs = check.mean.per_agent.iter().flatten().zip(check.std_err.per_agent.iter().flatten());
        for (c, (&m, &se)) in pairs.enumerate() {
            t.check(m.abs() < 3.0 * se || (se == 0.0 && m == 0.0), || {
                format!("case {k}, coordinate {c}: |mean| {:.3e} >= 3 SE {:.3e}", m.abs(), 3.0 * se)
            });
        }
    }
    Ok(t.0)
}

/// Monte Carlo fair gradients against the exact ones for alpha 0 and 1.
fn estimator() -> Result<SuiteReport> {
    let mut t = Tally::new("estimator");
    for k in 0..10 {
        let (game, policies, extra) = random_case(0xE57, k, (0.2, 0.8))?;
        let horizon = default_horizon(game.discount(), game.r_max(), 1e-6);
        for alpha in [0.0, 1.0] {
            let w = AltruismWeights::new(alpha)?;
            let exact = exact_fair_gradient(&game, &policies, &w)?;
            let mc = mc_fair_gradient(&game, &policies, &w, 100_000, horizon, extra)?;
            t.0.cases += 1;
            let coords = exact
                .per_agent
                .iter()
                .flatten()
                .zip(mc.mean.per_agent.iter().flatten())
                .zip(mc.std_err.per_agent.iter().flatten());
            for (c, ((&e, &m), &se)) in coords.enumerate() {
                t.check((m - e).abs() <= 3.0 * se, || {
                    format!(
                        "game {k}, alpha {alpha}, coordinate {c}: |{m:.4e} - {e:.4e}| > 3 SE {:.3e}",
                        3.0 * se
                    )
                });
            }
        }
    }
    Ok(t.0)
}

/// A random 2x2 social dilemma with strictly positive payoffs and
/// `2R > T + S`.
pub fn random_dilemma<R: Rng>(rng: &mut R) -> DilemmaPayoffs {
    loop {
        let d = DilemmaPayoffs {
            t: rng.random_range(0.1..10.0),
            r: rng.random_range(0.1..10.0),
            s: rng.random_range(0.1..10.0),
            p: rng.random_range(0.1..10.0),
        };
        let strict = 2.0 * d.r > d.t + d.s;
        if strict && classify_social_dilemma(&d).is_ok_and(|c| c.is_dilemma()) {
            return d;
        }
    }
}

fn cc_is_nash(d: &DilemmaPayoffs, alpha: f64) -> Result<bool> {
    Ok(find_pure_nash(&altruistic_extension(&d.to_game(), alpha)?).contains(&0))
}

/// Closed form against bisection, threshold behaviour and `TS <= R^2`.
fn altruism() -> Result<SuiteReport> {
    let mut t = Tally::new("altruism");
    let mut rng = seeded_stream(0xA17, 0);
    for k in 0..200 {
        let d = random_dilemma(&mut rng);
        t.0.cases += 1;
        let closed = altruism_level_closed_form(&d)?;
        let brute = altruism_level_bruteforce(&d.to_game(), 1e-6)?;
        t.check((closed - brute).abs() <= 2e-6, || {
            format!("dilemma {k} {d:?}: closed {closed} vs brute force {brute}")
        });
        t.check(check_consistency_ts_r2(&d), || format!("dilemma {k} {d:?}: TS > R^2"));
        if d.t > d.r {
            let above = (closed + 1e-4).min(1.0);
            t.check(cc_is_nash(&d, above)?, || {
                format!("dilemma {k} {d:?}: (C,C) not Nash at alpha_G + 1e-4")
            });
            if closed >= 1e-4 {
                t.check(!cc_is_nash(&d, closed - 1e-4)?, || {
                    format!("dilemma {k} {d:?}: (C,C) already Nash at alpha_G - 1e-4")
                });
            }
        }
    }
    let mut rng = seeded_stream(0xA17, 1);
    for k in 0..10_000 {
        let d = random_dilemma(&mut rng);
        t.check(check_consistency_ts_r2(&d), || format!("tuple {k} {d:?}: TS > R^2"));
    }
    Ok(t.0)
}

/// Gini invariants over random vectors plus spot values.
fn gini_suite() -> Result<SuiteReport> {
    let mut t = Tally::new("gini");
    let mut rng = seeded_stream(0x6141, 0);
    for k in 0..10_000 {
        let n = rng.random_range(1..=12);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let g = gini(&c)?;
        t.0.cases += 1;

        let scale = rng.random_range(0.01..100.0);
        let scaled: Vec<f64> = c.iter().map(|x| x * scale).collect();
        t.check((gini(&scaled)? - g).abs() <= 1e-12, || format!("vector {k}: scale changed gini"));

        let mut permuted = c.clone();
        permuted.rotate_left(rng.random_range(0..n));
        permuted.reverse();
        t.check((gini(&permuted)? - g).abs() <= 1e-12, || {
            format!("vector {k}: permutation changed gini")
        });

        let upper = (n as f64 - 1.0) / n as f64;
        t.check((0.0..=upper + 1e-12).contains(&g), || {
            format!("vector {k}: gini {g} outside [0, {upper}]")
        });

        if n >= 2 {
            let (mut rich, mut poor) = (rng.random_range(0..n), rng.random_range(0..n));
            if c[rich] < c[poor] {
                std::mem::swap(&mut rich, &mut poor);
            }
            let delta = rng.random_range(0.0..=0.5) * (c[rich] - c[poor]);
            let mut moved = c.clone();
            moved[rich] -= delta;
            moved[poor] += delta;
            t.check(gini(&moved)? <= g + 1e-12, || {
                format!("vector {k}: transfer to the poorer raised gini")
            });
        }
    }
    t.check(gini(&[1.0; 4])? == 0.0, || "gini(1,1,1,1) != 0".into());
    let one_hot = gini(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])?;
    t.check((one_hot - 6.0 / 7.0).abs() <= 1e-15, || {
        format!("7-agent one-hot gini {one_hot} != 6/7")
    });
    Ok(t.0)
}

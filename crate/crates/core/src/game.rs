//! Normal-form games and their fair-altruistic extension.
//!
//! Payoffs are stored row-major over joint pure strategies with the player
//! index innermost: the payoff of player `i` at joint profile `k` lives at
//! `payoffs[k * num_players + i]`. Joint profiles are themselves row-major,
//! the last player's strategy varying fastest.
//!
//! The altruistic extension works in log-payoff space,
//! `u_i(s) = log p_i(s) + alpha * sum_{j != i} log p_j(s)`, so every payoff has
//! to be strictly positive. [`shift_payoffs`] is available for games that
//! are not.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Ties closer than this are treated as equal when picking a single optimum.
const TIE_TOLERANCE: f64 = 1e-12;

/// Strategy index of "cooperate" in 2x2 dilemmas.
pub const COOPERATE: usize = 0;
/// Strategy index of "defect" in 2x2 dilemmas.
pub const DEFECT: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    strategy_counts: Vec<usize>,
    payoffs: Vec<f64>,
}

impl NormalFormGame {
    pub fn new(strategy_counts: Vec<usize>, payoffs: Vec<f64>) -> Result<Self> {
        if strategy_counts.is_empty() {
            return Err(Error::Empty("player list"));
        }
        if strategy_counts.iter().any(|&c| c == 0) {
            return Err(Error::Shape("every player needs at least one strategy".into()));
        }
        let profiles: usize = strategy_counts.iter().product();
        let expected = profiles * strategy_counts.len();
        if payoffs.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} payoff entries, found {}",
                payoffs.len()
            )));
        }
        if payoffs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("payoff"));
        }
        Ok(Self {
            strategy_counts,
            payoffs,
        })
    }

    pub fn num_players(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn num_profiles(&self) -> usize {
        self.payoffs.len() / self.num_players()
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    #[inline]
    pub fn payoff(&self, profile: usize, player: usize) -> f64 {
        self.payoffs[profile * self.num_players() + player]
    }

    /// Decodes a joint profile index into per-player strategies.
    pub fn profile(&self, mut index: usize) -> Vec<usize> {
        let mut out = alloc::vec![0; self.num_players()];
        for (slot, &count) in out.iter_mut().zip(&self.strategy_counts).rev() {
            *slot = index % count;
            index /= count;
        }
        out
    }

    pub fn profile_index(&self, strategies: &[usize]) -> Result<usize> {
        if strategies.len() != self.num_players() {
            return Err(Error::Shape(format!(
                "profile has {} entries for {} players",
                strategies.len(),
                self.num_players()
            )));
        }
        let mut index = 0;
        for (&s, &count) in strategies.iter().zip(&self.strategy_counts) {
            crate::error::check_index("strategy", s, count)?;
            index = index * count + s;
        }
        Ok(index)
    }

    /// Index of the profile reached when `player` switches to `strategy`.
    fn deviate(&self, profile: usize, player: usize, strategy: usize) -> usize {
        let stride: usize = self.strategy_counts[player + 1..].iter().product();
        let current = (profile / stride) % self.strategy_counts[player];
        profile - current * stride + strategy * stride
    }

    pub fn ensure_positive(&self) -> Result<()> {
        match self.payoffs.iter().find(|&&p| p <= 0.0) {
            Some(&p) => Err(Error::NonPositivePayoff(p)),
            None => Ok(()),
        }
    }

    fn social_welfare(&self, profile: usize) -> f64 {
        let n = self.num_players();
        self.payoffs[profile * n..(profile + 1) * n].iter().sum()
    }
}

/// Temptation, reward, sucker and punishment payoffs of a symmetric 2x2 game.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DilemmaPayoffs {
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub t: f64,
    #[cfg_attr(feature = "serde", serde(rename = "R"))]
    pub r: f64,
    #[cfg_attr(feature = "serde", serde(rename = "S"))]
    pub s: f64,
    #[cfg_attr(feature = "serde", serde(rename = "P"))]
    pub p: f64,
}

impl DilemmaPayoffs {
    pub fn new(t: f64, r: f64, s: f64, p: f64) -> Result<Self> {
        let payoffs = Self { t, r, s, p };
        payoffs.validate()?;
        Ok(payoffs)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.t, self.r, self.s, self.p] {
            if !v.is_finite() {
                return Err(Error::NonFinite("payoff"));
            }
            if v <= 0.0 {
                return Err(Error::NonPositivePayoff(v));
            }
        }
        Ok(())
    }

    /// Payoffs `(row player, column player)` for a pair of moves.
    pub fn rewards(&self, row: usize, col: usize) -> (f64, f64) {
        match (row, col) {
            (COOPERATE, COOPERATE) => (self.r, self.r),
            (COOPERATE, _) => (self.s, self.t),
            (_, COOPERATE) => (self.t, self.s),
            _ => (self.p, self.p),
        }
    }

    /// The 2x2 normal-form game with strategies `[C, D]` for both players.
    pub fn to_game(&self) -> NormalFormGame {
        let mut payoffs = Vec::with_capacity(8);
        for row in [COOPERATE, DEFECT] {
            for col in [COOPERATE, DEFECT] {
                let (a, b) = self.rewards(row, col);
                payoffs.push(a);
                payoffs.push(b);
            }
        }
        NormalFormGame {
            strategy_counts: alloc::vec![2, 2],
            payoffs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DilemmaKind {
    PrisonersDilemma,
    StagHunt,
    Chicken,
    NotADilemma,
}

/// Outcome of each of the four social-dilemma inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DilemmaInequalities {
    /// `R > P`
    pub reward_over_punishment: bool,
    /// `R > S`
    pub reward_over_sucker: bool,
    /// `2R >= T + S`. The boundary is admitted so that the canonical
    /// `(T, R, S, P) = (5, 3, 1, 2)` prisoner's dilemma classifies.
    pub group_prefers_cooperation: bool,
    /// `T > R` (greed) or `P > S` (fear)
    pub greed_or_fear: bool,
}

impl DilemmaInequalities {
    pub fn all(&self) -> bool {
        self.reward_over_punishment
            && self.reward_over_sucker
            && self.group_prefers_cooperation
            && self.greed_or_fear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DilemmaClass {
    pub kind: DilemmaKind,
    pub inequalities: DilemmaInequalities,
}

impl DilemmaClass {
    pub fn is_dilemma(&self) -> bool {
        self.kind != DilemmaKind::NotADilemma
    }
}

pub fn classify_social_dilemma(payoffs: &DilemmaPayoffs) -> Result<DilemmaClass> {
    payoffs.validate()?;
    let DilemmaPayoffs { t, r, s, p } = *payoffs;
    let inequalities = DilemmaInequalities {
        reward_over_punishment: r > p,
        reward_over_sucker: r > s,
        group_prefers_cooperation: 2.0 * r >= t + s,
        greed_or_fear: t > r || p > s,
    };
    // Given the four inequalities the three orderings below are exhaustive:
    // T > R splits on P > S (PD) vs S >= P (Chicken); T <= R forces P > S.
    let kind = if !inequalities.all() {
        DilemmaKind::NotADilemma
    } else if t > r && r > p && p > s {
        DilemmaKind::PrisonersDilemma
    } else if t > r && r > s && s >= p {
        DilemmaKind::Chicken
    } else {
        DilemmaKind::StagHunt
    };
    Ok(DilemmaClass { kind, inequalities })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Fair-altruistic extension `G(alpha)` in log-payoff space.
pub fn altruistic_extension(game: &NormalFormGame, alpha: f64) -> Result<NormalFormGame> {
    check_alpha(alpha)?;
    game.ensure_positive()?;
    let n = game.num_players();
    let mut payoffs = Vec::with_capacity(game.payoffs.len());
    let mut logs = alloc::vec![0.0; n];
    for row in game.payoffs.chunks_exact(n) {
        for (l, &p) in logs.iter_mut().zip(row) {
            *l = libm::log(p);
        }
        let total: f64 = logs.iter().sum();
        for &own in &logs {
            payoffs.push((1.0 - alpha) * own + alpha * total);
        }
    }
    Ok(NormalFormGame {
        strategy_counts: game.strategy_counts.clone(),
        payoffs,
    })
}

/// Subtracts the smallest raw payoff and adds `epsilon`, making every payoff
/// strictly positive.
pub fn shift_payoffs(game: &NormalFormGame, epsilon: f64) -> Result<NormalFormGame> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("{epsilon} is not a positive finite number"),
        });
    }
    let min = game.payoffs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(NormalFormGame {
        strategy_counts: game.strategy_counts.clone(),
        payoffs: game.payoffs.iter().map(|p| p - min + epsilon).collect(),
    })
}

fn is_pure_nash(game: &NormalFormGame, profile: usize) -> bool {
    (0..game.num_players()).all(|player| {
        let current = game.payoff(profile, player);
        (0..game.strategy_counts[player])
            .all(|alt| game.payoff(game.deviate(profile, player, alt), player) <= current)
    })
}

/// All joint profiles from which no player has a strictly profitable
/// unilateral deviation, in increasing index order.
pub fn find_pure_nash(game: &NormalFormGame) -> Vec<usize> {
    (0..game.num_profiles())
        .filter(|&k| is_pure_nash(game, k))
        .collect()
}

/// All joint profiles maximising the utilitarian sum of payoffs.
pub fn social_optima(game: &NormalFormGame) -> Vec<usize> {
    let welfare: Vec<f64> = (0..game.num_profiles())
        .map(|k| game.social_welfare(k))
        .collect();
    let best = welfare.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    welfare
        .iter()
        .enumerate()
        .filter(|(_, &w)| w == best)
        .map(|(k, _)| k)
        .collect()
}

pub fn check_consistency_ts_r2(payoffs: &DilemmaPayoffs) -> bool {
    payoffs.t * payoffs.s <= payoffs.r * payoffs.r
}

/// Smallest altruism weight making mutual cooperation a pure equilibrium of
/// the log-rescaled game: `0` if `T <= R`, else `ln(T/R) / ln(R/S)`.
pub fn altruism_level_closed_form(payoffs: &DilemmaPayoffs) -> Result<f64> {
    let class = classify_social_dilemma(payoffs)?;
    if !class.is_dilemma() {
        return Err(Error::NotADilemma);
    }
    if !check_consistency_ts_r2(payoffs) {
        return Err(Error::InconsistentThreshold {
            ts: payoffs.t * payoffs.s,
            r_squared: payoffs.r * payoffs.r,
        });
    }
    let DilemmaPayoffs { t, r, s, .. } = *payoffs;
    if t <= r {
        return Ok(0.0);
    }
    Ok((libm::log(t) - libm::log(r)) / (libm::log(r) - libm::log(s)))
}

/// Whether some pure Nash equilibrium of `G(alpha)` is a social optimum of
/// `G`.
fn is_alpha_altruistic(game: &NormalFormGame, optima: &[usize], alpha: f64) -> Result<bool> {
    let extended = altruistic_extension(game, alpha)?;
    Ok(optima.iter().any(|&k| is_pure_nash(&extended, k)))
}

/// Numerical altruism level: the smallest `alpha` in `[0, 1]` (to within
/// `resolution`) for which [`is_alpha_altruistic`] holds.
///
/// 2x2 games are bisected, the predicate being monotone there; larger games
/// fall back to a forward scan on a grid of step `resolution`.
pub fn altruism_level_bruteforce(game: &NormalFormGame, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "grid_resolution",
            reason: format!("{resolution} is not a positive finite number"),
        });
    }
    game.ensure_positive()?;
    let optima = social_optima(game);
    if is_alpha_altruistic(game, &optima, 0.0)? {
        return Ok(0.0);
    }
    if !is_alpha_altruistic(game, &optima, 1.0)? {
        return Err(Error::NotAltruistic);
    }
    if game.strategy_counts() == [2, 2] {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > resolution {
            let mid = 0.5 * (lo + hi);
            if is_alpha_altruistic(game, &optima, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Ok(hi);
    }
    let steps = libm::ceil(1.0 / resolution) as usize;
    for k in 1..=steps {
        let alpha = (k as f64 * resolution).min(1.0);
        if is_alpha_altruistic(game, &optima, alpha)? {
            return Ok(alpha);
        }
    }
    Ok(1.0)
}

/// A vector of strictly positive per-agent utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    utilities: Vec<f64>,
}

impl Allocation {
    pub fn new(utilities: Vec<f64>) -> Result<Self> {
        if utilities.is_empty() {
            return Err(Error::Empty("allocation"));
        }
        if let Some(&u) = utilities.iter().find(|&&u| !(u > 0.0) || !u.is_finite()) {
            return Err(Error::NonPositiveUtility(u));
        }
        Ok(Self { utilities })
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn log_welfare(&self) -> f64 {
        self.utilities.iter().map(|&u| libm::log(u)).sum()
    }
}

/// `true` iff no feasible allocation has a positive sum of proportional
/// variations relative to `candidate`.
pub fn check_proportionally_fair(candidate: &Allocation, feasible: &[Allocation]) -> Result<bool> {
    let n = candidate.utilities.len();
    for x in feasible {
        if x.utilities.len() != n {
            return Err(Error::Shape(format!(
                "allocation of {} agents compared with one of {n}",
                x.utilities.len()
            )));
        }
        let variation: f64 = x
            .utilities
            .iter()
            .zip(&candidate.utilities)
            .map(|(u, star)| (u - star) / star)
            .sum();
        if variation > TIE_TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Index of the allocation maximising the sum of log utilities; ties go to
/// the lowest index.
pub fn pf_optimum_index(feasible: &[Allocation]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, x) in feasible.iter().enumerate() {
        let value = x.log_welfare();
        match best {
            Some((_, b)) if value <= b + TIE_TOLERANCE * b.abs().max(1.0) => {}
            _ => best = Some((k, value)),
        }
    }
    best.map(|(k, _)| k).ok_or(Error::Empty("feasible set"))
}

pub fn pf_optimum(feasible: &[Allocation]) -> Result<&Allocation> {
    pf_optimum_index(feasible).map(|k| &feasible[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pd() -> DilemmaPayoffs {
        DilemmaPayoffs::new(5.0, 3.0, 1.0, 2.0).unwrap()
    }

    fn stag() -> DilemmaPayoffs {
        DilemmaPayoffs::new(3.0, 4.0, 1.0, 2.0).unwrap()
    }

    fn chicken() -> DilemmaPayoffs {
        DilemmaPayoffs::new(7.0, 5.0, 2.0, 1.0).unwrap()
    }

    fn cc(game: &NormalFormGame) -> usize {
        game.profile_index(&[COOPERATE, COOPERATE]).unwrap()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_social_dilemma(&pd()).unwrap().kind,
            DilemmaKind::PrisonersDilemma
        );
        assert_eq!(
            classify_social_dilemma(&stag()).unwrap().kind,
            DilemmaKind::StagHunt
        );
        assert_eq!(
            classify_social_dilemma(&chicken()).unwrap().kind,
            DilemmaKind::Chicken
        );
        let flat = classify_social_dilemma(&DilemmaPayoffs::new(1.0, 1.0, 1.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(flat.kind, DilemmaKind::NotADilemma);
        assert!(!flat.inequalities.reward_over_punishment);
    }

    #[test]
    fn non_positive_payoffs_rejected() {
        assert_eq!(
            DilemmaPayoffs::new(5.0, 3.0, 0.0, 2.0),
            Err(Error::NonPositivePayoff(0.0))
        );
        let bad = DilemmaPayoffs {
            t: 5.0,
            r: -1.0,
            s: 1.0,
            p: 2.0,
        };
        assert!(classify_social_dilemma(&bad).is_err());
    }

    #[test]
    fn layout_is_row_major_player_innermost() {
        let g = pd().to_game();
        // (D, C): row defects, column cooperates
        let k = g.profile_index(&[DEFECT, COOPERATE]).unwrap();
        assert_eq!(k, 2);
        assert_eq!(&g.payoffs()[k * 2..k * 2 + 2], &[5.0, 1.0]);
        assert_eq!(g.profile(k), vec![1, 0]);
    }

    #[test]
    fn extension_examples() {
        let e = core::f64::consts::E;
        let g = NormalFormGame::new(vec![2, 2], vec![e; 8]).unwrap();
        let ext = altruistic_extension(&g, 0.5).unwrap();
        for &u in ext.payoffs() {
            assert!((u - 1.5).abs() < 1e-15);
        }

        let g = pd().to_game();
        let ext0 = altruistic_extension(&g, 0.0).unwrap();
        for (u, p) in ext0.payoffs().iter().zip(g.payoffs()) {
            assert_eq!(*u, libm::log(*p));
        }

        let ext1 = altruistic_extension(&g, 1.0).unwrap();
        let k = cc(&g);
        assert!((ext1.payoff(k, 0) - 2.0 * libm::log(3.0)).abs() < 1e-12);
        assert!((ext1.payoff(k, 0) - 2.1972245773362196).abs() < 1e-12);
    }

    #[test]
    fn extension_rejects_bad_inputs() {
        let g = pd().to_game();
        assert_eq!(
            altruistic_extension(&g, 1.5),
            Err(Error::AlphaOutOfRange(1.5))
        );
        let zero = NormalFormGame::new(vec![1], vec![0.0]).unwrap();
        assert!(matches!(
            altruistic_extension(&zero, 0.5),
            Err(Error::NonPositivePayoff(_))
        ));
    }

    #[test]
    fn shift_makes_payoffs_positive() {
        let g = NormalFormGame::new(vec![2], vec![-3.0, 1.0]).unwrap();
        let shifted = shift_payoffs(&g, 0.5).unwrap();
        assert_eq!(shifted.payoffs(), &[0.5, 4.5]);
        assert!(shift_payoffs(&g, 0.0).is_err());
    }

    #[test]
    fn nash_examples() {
        let g = pd().to_game();
        assert_eq!(find_pure_nash(&g), vec![g.profile_index(&[1, 1]).unwrap()]);

        let g = stag().to_game();
        assert_eq!(
            find_pure_nash(&g),
            vec![
                g.profile_index(&[0, 0]).unwrap(),
                g.profile_index(&[1, 1]).unwrap()
            ]
        );

        let single = NormalFormGame::new(vec![1], vec![4.0]).unwrap();
        assert_eq!(find_pure_nash(&single), vec![0]);
    }

    #[test]
    fn three_player_nash_uses_all_deviations() {
        // player payoff = own strategy index + 1, so everyone plays their last strategy
        let counts = vec![2, 3, 2];
        let mut payoffs = Vec::new();
        let g0 = NormalFormGame::new(counts.clone(), vec![1.0; 12 * 3]).unwrap();
        for k in 0..12 {
            for s in g0.profile(k) {
                payoffs.push(s as f64 + 1.0);
            }
        }
        let g = NormalFormGame::new(counts, payoffs).unwrap();
        assert_eq!(find_pure_nash(&g), vec![g.profile_index(&[1, 2, 1]).unwrap()]);
    }

    #[test]
    fn social_optima_examples() {
        let g = DilemmaPayoffs::new(5.0, 4.0, 1.0, 2.0).unwrap().to_game();
        assert_eq!(social_optima(&g), vec![cc(&g)]);
        let g = chicken().to_game();
        assert_eq!(social_optima(&g), vec![cc(&g)]);
        let flat = NormalFormGame::new(vec![2, 2], vec![1.0; 8]).unwrap();
        assert_eq!(social_optima(&flat), vec![0, 1, 2, 3]);
        // 2R = T + S: the off-diagonal profiles tie with mutual cooperation
        assert_eq!(social_optima(&pd().to_game()), vec![0, 1, 2]);
    }

    #[test]
    fn closed_form_examples() {
        let a = altruism_level_closed_form(&pd()).unwrap();
        assert!((a - libm::log(5.0 / 3.0) / libm::log(3.0)).abs() < 1e-15);
        assert!((a - 0.46497).abs() < 1e-5);
        assert_eq!(altruism_level_closed_form(&stag()).unwrap(), 0.0);
        let c = altruism_level_closed_form(&chicken()).unwrap();
        assert!((c - libm::log(1.4) / libm::log(2.5)).abs() < 1e-15);
        assert!((c - 0.367211).abs() < 1e-6);
    }

    #[test]
    fn closed_form_errors() {
        let flat = DilemmaPayoffs::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(altruism_level_closed_form(&flat), Err(Error::NotADilemma));
    }

    #[test]
    fn bruteforce_examples() {
        let a = altruism_level_bruteforce(&pd().to_game(), 1e-6).unwrap();
        assert!((a - 0.46497).abs() < 1e-5);
        let exact = altruism_level_closed_form(&pd()).unwrap();
        assert!(a >= exact - 1e-12 && a - exact <= 1e-6);
        assert_eq!(
            altruism_level_bruteforce(&stag().to_game(), 1e-6).unwrap(),
            0.0
        );
        let c = altruism_level_bruteforce(&chicken().to_game(), 1e-6).unwrap();
        assert!((c - altruism_level_closed_form(&chicken()).unwrap()).abs() <= 1e-6);
    }

    #[test]
    fn bruteforce_reports_non_altruistic_games() {
        // welfare: (C) 2, (D) 101, so D is the optimum and already Nash
        let g = NormalFormGame::new(vec![2, 1], vec![1.0, 1.0, 100.0, 1.0]).unwrap();
        assert_eq!(altruism_level_bruteforce(&g, 1e-3).unwrap(), 0.0);
        // C maximises the sum but not the log-sum, so even at alpha = 1 the
        // mover prefers D
        let g = NormalFormGame::new(vec![2, 1], vec![0.01, 1000.0, 500.0, 1.0]).unwrap();
        assert_eq!(altruism_level_bruteforce(&g, 1e-3), Err(Error::NotAltruistic));
        assert!(altruism_level_bruteforce(&g, 0.0).is_err());
    }

    #[test]
    fn grid_scan_for_larger_games() {
        // 3x2 game: PD plus a dominated third row
        let base = pd();
        let mut payoffs = pd().to_game().payoffs().to_vec();
        payoffs.extend_from_slice(&[0.5, 0.5, 0.5, 0.5]);
        let g = NormalFormGame::new(vec![3, 2], payoffs).unwrap();
        let a = altruism_level_bruteforce(&g, 1e-4).unwrap();
        let exact = altruism_level_closed_form(&base).unwrap();
        assert!(a >= exact - 1e-12 && a - exact <= 1e-4 + 1e-12, "{a} vs {exact}");
    }

    #[test]
    fn consistency_examples() {
        assert!(check_consistency_ts_r2(&pd()));
        assert!(check_consistency_ts_r2(
            &DilemmaPayoffs::new(2.0, 2.0, 2.0, 1.0).unwrap()
        ));
        assert!(!check_consistency_ts_r2(
            &DilemmaPayoffs::new(10.0, 2.0, 1.0, 1.0).unwrap()
        ));
    }

    fn alloc2(a: f64, b: f64) -> Allocation {
        Allocation::new(vec![a, b]).unwrap()
    }

    #[test]
    fn proportional_fairness_examples() {
        let feasible = [alloc2(1.0, 3.0), alloc2(2.0, 2.0), alloc2(3.0, 1.0)];
        assert!(check_proportionally_fair(&alloc2(2.0, 2.0), &feasible).unwrap());
        assert!(!check_proportionally_fair(&alloc2(1.0, 3.0), &feasible).unwrap());
        let only = [alloc2(1.0, 5.0)];
        assert!(check_proportionally_fair(&only[0], &only).unwrap());
        assert!(Allocation::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn pf_optimum_examples() {
        let feasible = [alloc2(1.0, 3.0), alloc2(2.0, 2.0), alloc2(3.0, 1.0)];
        assert_eq!(pf_optimum(&feasible).unwrap(), &alloc2(2.0, 2.0));
        let one = [alloc2(7.0, 1.0)];
        assert_eq!(pf_optimum_index(&one).unwrap(), 0);
        let tie = [alloc2(2.0, 2.0), alloc2(4.0, 1.0)];
        assert_eq!(pf_optimum_index(&tie).unwrap(), 0);
        assert_eq!(pf_optimum(&[]), Err(Error::Empty("feasible set")));
    }
}

//! Altruism analysis of normal-form games.

use fairgame_core::game::{
    altruism_level_bruteforce, altruism_level_closed_form, altruistic_extension,
    check_consistency_ts_r2, classify_social_dilemma, find_pure_nash, social_optima,
    DilemmaInequalities, DilemmaKind, DilemmaPayoffs, NormalFormGame,
};
use fairgame_core::Error as CoreError;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::LoadedGame;

/// Bisection and grid resolution for the brute-force altruism level.
pub const BRUTE_FORCE_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AltruisticNash {
    pub alpha: f64,
    /// Pure Nash profiles of `G(alpha)`, one strategy index per player.
    pub nash: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    /// Dilemma kind for symmetric 2x2 games, `null` otherwise.
    pub class: Option<DilemmaKind>,
    pub payoffs: Option<DilemmaPayoffs>,
    pub inequalities: Option<DilemmaInequalities>,
    /// Closed-form altruism level, for social dilemmas.
    pub alpha_g: Option<f64>,
    /// Smallest alpha found by search; `null` when no alpha in [0, 1] works.
    pub alpha_g_bruteforce: Option<f64>,
    pub ts_le_r2: Option<bool>,
    pub nash: Vec<Vec<usize>>,
    pub social_optima: Vec<Vec<usize>>,
    pub altruistic: Vec<AltruisticNash>,
}

fn profiles(game: &NormalFormGame, indices: Vec<usize>) -> Vec<Vec<usize>> {
    indices.into_iter().map(|k| game.profile(k)).collect()
}

/// Reports the dilemma class, altruism level and Nash sets of `G` and of
/// `G(alpha)` for every requested alpha.
pub fn analyze(loaded: &LoadedGame, alphas: &[f64]) -> Result<AnalysisReport> {
    let bad: Vec<String> = alphas
        .iter()
        .filter(|a| !(0.0..=1.0).contains(*a))
        .map(|a| format!("--alpha {a} is outside [0, 1]"))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Invalid(bad));
    }
    let game = &loaded.game;
    game.ensure_positive().map_err(Error::rejected)?;

    let class = loaded
        .dilemma
        .as_ref()
        .map(classify_social_dilemma)
        .transpose()?;
    let alpha_g = match (&loaded.dilemma, &class) {
        (Some(d), Some(c)) if c.is_dilemma() => Some(altruism_level_closed_form(d)?),
        _ => None,
    };
    let alpha_g_bruteforce = match altruism_level_bruteforce(game, BRUTE_FORCE_RESOLUTION) {
        Ok(a) => Some(a),
        Err(CoreError::NotAltruistic) => None,
        Err(e) => return Err(e.into()),
    };
    let altruistic = alphas
        .iter()
        .map(|&alpha| {
            let extended = altruistic_extension(game, alpha)?;
            Ok(AltruisticNash {
                alpha,
                nash: profiles(game, find_pure_nash(&extended)),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AnalysisReport {
        class: class.map(|c| c.kind),
        payoffs: loaded.dilemma,
        inequalities: class.map(|c| c.inequalities),
        alpha_g,
        alpha_g_bruteforce,
        ts_le_r2: loaded.dilemma.as_ref().map(check_consistency_ts_r2),
        nash: profiles(game, find_pure_nash(game)),
        social_optima: profiles(game, social_optima(game)),
        altruistic,
    })
}

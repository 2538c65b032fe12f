use fairgame_core::game::{
    altruism_level_bruteforce, altruism_level_closed_form, altruistic_extension,
    check_consistency_ts_r2, check_proportionally_fair, classify_social_dilemma, find_pure_nash,
    pf_optimum, Allocation, DilemmaKind, DilemmaPayoffs, NormalFormGame,
};
use proptest::prelude::*;

/// Payoffs satisfying the four dilemma inequalities with `2R > T + S`.
fn dilemma() -> impl Strategy<Value = DilemmaPayoffs> {
    (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0)
        .prop_map(|(t, r, s, p)| DilemmaPayoffs { t, r, s, p })
        .prop_filter("not a strict dilemma", |d| {
            classify_social_dilemma(d).unwrap().is_dilemma() && 2.0 * d.r > d.t + d.s
        })
}

fn cc_is_nash(d: &DilemmaPayoffs, alpha: f64) -> bool {
    find_pure_nash(&altruistic_extension(&d.to_game(), alpha).unwrap()).contains(&0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_matches_bruteforce(d in dilemma()) {
        let closed = altruism_level_closed_form(&d).unwrap();
        let brute = altruism_level_bruteforce(&d.to_game(), 1e-6).unwrap();
        prop_assert!((closed - brute).abs() <= 2e-6, "{closed} vs {brute} for {d:?}");
    }

    #[test]
    fn cooperation_is_stable_above_threshold(d in dilemma(), extra in 0.0f64..1.0) {
        let alpha_g = altruism_level_closed_form(&d).unwrap();
        let above = alpha_g + extra * (1.0 - alpha_g);
        prop_assert!(cc_is_nash(&d, above.max(alpha_g + 1e-9).min(1.0)));
        if d.t > d.r && alpha_g > 1e-6 {
            let below = (alpha_g - 1e-6) * (1.0 - extra);
            prop_assert!(!cc_is_nash(&d, below));
        }
    }

    #[test]
    fn dilemmas_are_consistent(d in dilemma()) {
        prop_assert!(check_consistency_ts_r2(&d));
        prop_assert!(altruism_level_closed_form(&d).unwrap() <= 1.0);
    }

    #[test]
    fn nash_set_survives_monotone_rescaling(
        counts in prop::collection::vec(1usize..4, 1..4),
        seed in prop::collection::vec(0.05f64..20.0, 192),
    ) {
        let profiles: usize = counts.iter().product();
        let payoffs: Vec<f64> = seed[..profiles * counts.len()].to_vec();
        let game = NormalFormGame::new(counts.clone(), payoffs.clone()).unwrap();
        let logged = NormalFormGame::new(counts, payoffs.iter().map(|p| p.ln()).collect()).unwrap();
        prop_assert_eq!(find_pure_nash(&game), find_pure_nash(&logged));
    }

    #[test]
    fn pf_optimum_is_proportionally_fair(n in 2usize..4, k in 1usize..5) {
        let m = n * k;
        let grid = simplex_grid(n, m);
        let best = pf_optimum(&grid).unwrap();
        prop_assert!(check_proportionally_fair(best, &grid).unwrap());
    }
}

/// Allocations `(c_1 + 1, ..., c_n + 1)` with nonnegative integers summing
/// to `m`.
fn simplex_grid(n: usize, m: usize) -> Vec<Allocation> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<f64>, out: &mut Vec<Allocation>) {
        if n == 1 {
            prefix.push(left as f64 + 1.0);
            out.push(Allocation::new(prefix.clone()).unwrap());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c as f64 + 1.0);
            rec(n - 1, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, &mut Vec::new(), &mut out);
    out
}

#[test]
fn ten_thousand_dilemmas_satisfy_ts_bound() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut accepted = 0;
    while accepted < 10_000 {
        let d = DilemmaPayoffs {
            t: rng.random_range(0.1..10.0),
            r: rng.random_range(0.1..10.0),
            s: rng.random_range(0.1..10.0),
            p: rng.random_range(0.1..10.0),
        };
        if 2.0 * d.r > d.t + d.s && classify_social_dilemma(&d).unwrap().is_dilemma() {
            assert!(check_consistency_ts_r2(&d), "{d:?}");
            accepted += 1;
        }
    }
}

#[test]
fn stag_hunts_need_no_altruism() {
    let d = DilemmaPayoffs::new(3.0, 4.0, 1.0, 2.0).unwrap();
    assert_eq!(classify_social_dilemma(&d).unwrap().kind, DilemmaKind::StagHunt);
    assert_eq!(altruism_level_closed_form(&d).unwrap(), 0.0);
    assert_eq!(altruism_level_bruteforce(&d.to_game(), 1e-6).unwrap(), 0.0);
}

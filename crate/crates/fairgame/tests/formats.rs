use std::path::Path;

use fairgame::core::env::random_markov_game;
use fairgame::core::markov::SoftmaxPolicyProfile;
use fairgame::formats::{
    game_to_json, markov_game_to_json, parse_game, parse_markov_game, parse_policy, policy_to_json,
};
use fairgame::Error;
use proptest::prelude::*;

fn p() -> &'static Path {
    Path::new("test.json")
}

#[test]
fn dilemma_shorthand_and_full_form_agree() {
    let short = parse_game(p(), r#"{"T": 5, "R": 3, "S": 1, "P": 2}"#).unwrap();
    let full = parse_game(p(), &game_to_json(&short.game)).unwrap();
    assert_eq!(short, full);
    let d = full.dilemma.unwrap();
    assert_eq!((d.t, d.r, d.s, d.p), (5.0, 3.0, 1.0, 2.0));
}

#[test]
fn asymmetric_games_have_no_dilemma_view() {
    let text = r#"{"players": 2, "strategies": [2, 2], "payoffs": [3, 3, 1, 5, 5, 1, 2, 2.5]}"#;
    assert!(parse_game(p(), text).unwrap().dilemma.is_none());
}

#[test]
fn zero_payoff_is_rejected_with_code_2() {
    let err = parse_game(p(), r#"{"T": 5, "R": 3, "S": 0, "P": 2}"#).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("strictly positive"), "{err}");
    let err = parse_game(
        p(),
        r#"{"players": 2, "strategies": [1, 1], "payoffs": [1, 0]}"#,
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("strictly positive"), "{err}");
}

#[test]
fn syntax_errors_carry_line_numbers() {
    let err = parse_game(p(), "{\n  \"T\": 5,\n  \"R\": ,\n}").unwrap_err();
    match err {
        Error::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    let err = parse_game(p(), r#"{"players": 2, "strategies": [2, 2], "payoffs": [1], "x": 1}"#)
        .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn payoff_count_must_match() {
    let err = parse_game(p(), r#"{"players": 2, "strategies": [2, 2], "payoffs": [1, 2, 3]}"#)
        .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn markov_game_keys_are_comma_joined() {
    let text = r#"{
        "agents": 2, "states": 1, "actions": [1, 2], "gamma": 0.5, "rho0": [1.0],
        "transitions": {"0,0,0": [1.0], "0,0,1": [1.0]},
        "rewards": {"0,0,0,0": 1.0, "1,0,0,0": 2.0, "0,0,0,1": 3.0, "1,0,0,1": 4.0}
    }"#;
    let g = parse_markov_game(p(), text).unwrap();
    assert_eq!(g.reward(1, 0, 0), 2.0);
    assert_eq!(g.reward(0, 0, 1), 3.0);
}

#[test]
fn missing_and_stray_markov_keys_are_all_reported() {
    let text = r#"{
        "agents": 1, "states": 2, "actions": [2], "gamma": 0.5, "rho0": [1.0, 0.0],
        "transitions": {"0,0": [1.0, 0.0], "0,1": [0.5, 0.5], "1,0": [0.0, 1.0], "7,0": [1.0, 0.0]},
        "rewards": {"0,0,0": 1.0, "0,0,1": 1.0, "0,1,0": 1.0}
    }"#;
    match parse_markov_game(p(), text).unwrap_err() {
        Error::Invalid(problems) => {
            let all = problems.join("\n");
            assert!(all.contains("transitions[\"1,1\"] is missing"), "{all}");
            assert!(all.contains("rewards[\"0,1,1\"] is missing"), "{all}");
            assert!(all.contains("outside"), "{all}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn policy_snapshot_shape_errors() {
    assert_eq!(parse_policy(p(), "[]").unwrap_err().exit_code(), 2);
    assert_eq!(parse_policy(p(), "[[[0, 1]], [[0, 1], [1, 2]]]").unwrap_err().exit_code(), 2);
    assert_eq!(parse_policy(p(), "[[[0, 1], [1]]]").unwrap_err().exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn markov_games_round_trip(
        actions in prop::collection::vec(1usize..4, 1..4),
        states in 1usize..5,
        gamma in 0.0f64..0.99,
        seed in any::<u64>(),
    ) {
        let g = random_markov_game(actions.len(), states, &actions, gamma, seed).unwrap();
        prop_assert_eq!(parse_markov_game(p(), &markov_game_to_json(&g)).unwrap(), g);
    }

    #[test]
    fn policies_round_trip_exactly(
        actions in prop::collection::vec(1usize..5, 1..4),
        states in 1usize..6,
        raw in prop::collection::vec(-1e6f64..1e6, 300),
    ) {
        let mut k = 0;
        let logits = actions
            .iter()
            .map(|&a| (0..states * a).map(|_| { k += 1; raw[k % raw.len()] }).collect())
            .collect();
        let pol = SoftmaxPolicyProfile::from_logits(states, actions.clone(), logits).unwrap();
        prop_assert_eq!(parse_policy(p(), &policy_to_json(&pol)).unwrap(), pol);
    }
}

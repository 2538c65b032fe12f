use std::fs;
use std::path::Path;

use fairgame::core::env::{MiniCleanupConfig, CLEAN, DOWN, LEFT, NOOP, RIGHT, UP};
use fairgame::trajectory::{from_jsonl, record, to_jsonl};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/cleanup_one_agent.jsonl");

fn config() -> MiniCleanupConfig {
    MiniCleanupConfig {
        width: 5,
        height: 4,
        num_agents: 1,
        river_rows: 1,
        regen_rate: 0.3,
        episode_length: 40,
        ..Default::default()
    }
}

fn script() -> Vec<Vec<usize>> {
    let pattern = [UP, UP, UP, CLEAN, CLEAN, CLEAN, DOWN, DOWN, RIGHT, RIGHT, LEFT, DOWN, NOOP, LEFT];
    (0..40).map(|t| vec![pattern[t % pattern.len()]]).collect()
}

#[test]
fn scripted_episode_matches_golden_file() {
    let steps = record(&config(), 20240, &script()).unwrap();
    assert_eq!(steps.len(), 40);
    let text = to_jsonl(&steps);
    if std::env::var_os("FAIRGAME_BLESS").is_some() {
        fs::write(GOLDEN, &text).unwrap();
    }
    let golden = fs::read_to_string(Path::new(GOLDEN)).unwrap();
    assert_eq!(text, golden);
    assert_eq!(from_jsonl(&golden).unwrap(), steps);
}

#[test]
fn no_regrowth_means_only_the_base_reward() {
    let cfg = MiniCleanupConfig {
        regen_rate: 0.0,
        ..config()
    };
    for s in record(&cfg, 1, &script()).unwrap() {
        assert!(s.apples.is_empty());
        assert_eq!(s.rewards, vec![cfg.base_reward]);
    }
}

#[test]
fn pinned_pollution_stops_spawning() {
    let cfg = MiniCleanupConfig {
        regen_rate: 1.0,
        initial_pollution: 1.0,
        clean_amount: 0.0,
        ..config()
    };
    for s in record(&cfg, 5, &script()).unwrap() {
        assert!(s.apples.is_empty());
        assert_eq!(s.pollution, 1.0);
    }
}

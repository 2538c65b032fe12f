use fairgame_core::metrics::{gini, rolling_aggregate};
use proptest::prelude::*;

fn consumptions() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn gini_is_scale_invariant(c in consumptions(), k in 0.01f64..100.0) {
        let scaled: Vec<f64> = c.iter().map(|x| x * k).collect();
        prop_assert!((gini(&c).unwrap() - gini(&scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gini_is_permutation_invariant(c in consumptions(), rot in 0usize..12) {
        let mut p = c.clone();
        p.rotate_left(rot % c.len());
        p.reverse();
        prop_assert!((gini(&c).unwrap() - gini(&p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gini_is_bounded(c in consumptions()) {
        let n = c.len() as f64;
        let g = gini(&c).unwrap();
        prop_assert!(g >= 0.0 && g <= (n - 1.0) / n + 1e-12);
    }

    #[test]
    fn one_hot_attains_the_bound(n in 1usize..20, hot in 0usize..20, mass in 0.1f64..10.0) {
        let mut c = vec![0.0; n];
        c[hot % n] = mass;
        let bound = (n as f64 - 1.0) / n as f64;
        prop_assert!((gini(&c).unwrap() - bound).abs() < 1e-12);
    }

    #[test]
    fn transfers_to_the_poorer_never_raise_gini(c in prop::collection::vec(0.0f64..100.0, 2..12), a in 0usize..12, b in 0usize..12, frac in 0.0f64..=0.5) {
        let (mut a, mut b) = (a % c.len(), b % c.len());
        if c[a] < c[b] {
            core::mem::swap(&mut a, &mut b);
        }
        let delta = frac * (c[a] - c[b]);
        let mut d = c.clone();
        d[a] -= delta;
        d[b] += delta;
        prop_assert!(gini(&d).unwrap() <= gini(&c).unwrap() + 1e-12);
    }

    #[test]
    fn rolling_bands_contain_the_mean(s in prop::collection::vec(-10.0f64..10.0, 1..50), w in 1usize..10) {
        let r = rolling_aggregate(&s, w).unwrap();
        for k in 0..s.len() {
            prop_assert!(r.min[k] <= r.mean[k] + 1e-12 && r.mean[k] <= r.max[k] + 1e-12);
        }
    }
}

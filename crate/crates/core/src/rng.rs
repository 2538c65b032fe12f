use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent, reproducible generator for `(seed, stream)`.
///
/// Collectors, rollouts and environments each get their own stream so the
/// draws they see do not depend on scheduling.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws an index from a discrete distribution given as probabilities.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left a sliver above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Uniform sample from the probability simplex of dimension `n - 1`.
pub(crate) fn flat_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> alloc::vec::Vec<f64> {
    if n == 1 {
        return alloc::vec![1.0];
    }
    let mut w: alloc::vec::Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            -libm::log(1.0 - u)
        })
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

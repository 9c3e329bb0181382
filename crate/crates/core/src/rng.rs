use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for work unit `unit` under `seed`.
///
/// Each unit gets its own ChaCha stream, so units can be processed in any
/// order (or in parallel) and still draw exactly the same numbers.
pub(crate) fn unit_rng(seed: u64, unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit);
    rng
}

/// Partial Fisher-Yates: `count` distinct values from `0..n`, in draw order.
pub(crate) fn sample_without_replacement<R: rand::Rng>(
    rng: &mut R,
    n: usize,
    count: usize,
) -> Vec<usize> {
    let count = count.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

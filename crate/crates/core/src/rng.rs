//! Seeded random streams, one per replica.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `replica` of the generator keyed by `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Splits `n` into `parts` shares differing by at most one, larger shares first.
pub fn split_work(n: u64, parts: usize) -> Vec<u64> {
    let parts = parts.max(1) as u64;
    (0..parts).map(|i| n / parts + u64::from(i < n % parts)).collect()
}

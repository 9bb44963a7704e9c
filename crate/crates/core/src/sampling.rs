//! Seeded, block-structured random sampling.
//!
//! Sample `i` is drawn from the ChaCha stream `i / BLOCK` of the seed, at a
//! fixed position within that block. Hence the first `n` samples of a run
//! with `m > n` samples are exactly the samples of a run with `n` — sample
//! sets are nested — and blocks can be generated in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::par;

pub const BLOCK: usize = 1024;

pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Draw and evaluate `n` samples; `f(rng, i)` must consume randomness only
/// from `rng`. Results come back in sample order.
pub fn blocked_map<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let n_blocks = n.div_ceil(BLOCK);
    par::map_indexed(n_blocks, |b| {
        let mut rng = block_rng(seed, b as u64);
        let end = ((b + 1) * BLOCK).min(n);
        (b * BLOCK..end).map(|i| f(&mut rng, i)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn samples_are_nested() {
        let short = blocked_map(1500, 7, |rng, _| rng.random::<f64>());
        let long = blocked_map(5000, 7, |rng, _| rng.random::<f64>());
        assert_eq!(&long[..1500], &short[..]);
        let other = blocked_map(1500, 8, |rng, _| rng.random::<f64>());
        assert_ne!(short, other);
    }
}

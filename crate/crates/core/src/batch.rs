//! Batches of independent seeded runs.
//!
//! Runs share no mutable state, so with the `parallel` feature they spread
//! over the rayon pool. Results always come back in input order, so output
//! does not depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::node_complete;
use crate::netsim::{run, Scenario, SimError};

/// SplitMix64 expansion of one base seed into `n` well-spread seeds.
pub fn derive_seeds(base: u64, n: usize) -> Vec<u64> {
    let mut state = base;
    (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        })
        .collect()
}

pub fn map_items_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_items_sequential(items, f)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HonestBatch {
    pub runs: usize,
    /// Runs in which every sensor authenticated and delivered intact.
    pub complete: usize,
    pub incomplete_seeds: Vec<u64>,
}

fn honest_outcome(seed: u64, modulus_bits: usize) -> Result<bool, SimError> {
    let s = Scenario::honest7(seed).with_modulus_bits(modulus_bits);
    let trace = run(&s)?;
    Ok(s.topology
        .sensors()
        .into_iter()
        .all(|n| node_complete(&trace, n)))
}

fn tally(seeds: &[u64], outcomes: Vec<Result<bool, SimError>>) -> Result<HonestBatch, SimError> {
    let mut b = HonestBatch {
        runs: seeds.len(),
        ..Default::default()
    };
    for (seed, ok) in seeds.iter().zip(outcomes) {
        if ok? {
            b.complete += 1;
        } else {
            b.incomplete_seeds.push(*seed);
        }
    }
    Ok(b)
}

/// Honest 7-node runs, one per seed.
pub fn honest_batch(seeds: &[u64], modulus_bits: usize) -> Result<HonestBatch, SimError> {
    tally(
        seeds,
        map_items(seeds, |&s| honest_outcome(s, modulus_bits)),
    )
}

pub fn honest_batch_sequential(
    seeds: &[u64],
    modulus_bits: usize,
) -> Result<HonestBatch, SimError> {
    tally(
        seeds,
        map_items_sequential(seeds, |&s| honest_outcome(s, modulus_bits)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_reproducible() {
        let a = derive_seeds(7, 1000);
        assert_eq!(a, derive_seeds(7, 1000));
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 1000);
        assert_ne!(derive_seeds(8, 3), derive_seeds(7, 3));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let items: Vec<u64> = (0..64).collect();
        let f = |x: &u64| x.wrapping_mul(0x9E37_79B9) ^ (x >> 3);
        assert_eq!(map_items(&items, f), map_items_sequential(&items, f));
    }
}

//! Counter-based random substreams. Every draw is keyed by
//! `(seed, iteration, sparrow, role)`, so the sequence a sparrow sees does not
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Role {
    Init = 1,
    Global = 2,
    Producer = 3,
    Joiner = 4,
    Scout = 5,
    Swarm = 6,
}

/// Sparrow slot used for draws that belong to the whole population.
pub(crate) const POPULATION: u64 = u64::MAX;

pub(crate) fn substream(seed: u64, iteration: u64, sparrow: u64, role: Role) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&iteration.to_le_bytes());
    key[16..24].copy_from_slice(&sparrow.to_le_bytes());
    key[24..].copy_from_slice(&(role as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

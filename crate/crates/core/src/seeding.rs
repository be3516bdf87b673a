//! Deterministic seed derivation for parallel Monte Carlo work.
//!
//! Every random stream is a `ChaCha8Rng` seeded from a 64-bit value obtained
//! by folding (master seed, n, trial index, role) through the SplitMix64
//! finalizer. The derived seed depends only on those inputs, so a trial draws
//! the same points no matter which worker thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which point process a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Nodes,
    Centers,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Nodes => 0x6e6f_6465,
            Role::Centers => 0x6365_6e74,
        }
    }
}

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn combine(acc: u64, word: u64) -> u64 {
    mix64(acc ^ mix64(word))
}

/// Seed of one trial at a given `n` within a sweep.
pub fn trial_seed(master: u64, n: u64, trial: u64) -> u64 {
    combine(combine(mix64(master), n), trial)
}

/// Seed of one role's point process within a trial.
pub fn role_seed(trial_seed: u64, role: Role) -> u64 {
    combine(trial_seed, role.tag())
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

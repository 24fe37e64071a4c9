//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by the
//! master seed (expanded through `seed_from_u64`) and selected by a 64-bit
//! stream id. Distinct stream ids under one key produce independent keystreams,
//! so chains and replications never share random numbers.
//!
//! Stream ids are laid out as `(replication << 16) | slot`, where slot 0 is the
//! data generator and slot `k + 1` is chain `k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// Maximum number of chains per replication.
pub const MAX_SLOTS: u64 = 1 << 16;

pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn data_stream(replication: u64) -> u64 {
    replication << 16
}

pub fn chain_stream(replication: u64, chain: u64) -> u64 {
    debug_assert!(chain + 1 < MAX_SLOTS);
    (replication << 16) | (chain + 1)
}

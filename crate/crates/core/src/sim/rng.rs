//! Independent random streams keyed by (seed, replicate, stage, purpose).
//!
//! Each key selects a distinct ChaCha stream, so replicates can run in any
//! order or concurrently and still draw the same numbers. Keeping purposes
//! apart also means two scenarios that differ only after stage 1 see
//! identical stage-1 data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    CentreZ = 0,
    Xi = 1,
    Epsilon = 2,
}

/// Replicate index reserved for draws shared by all replicates.
pub const SHARED: u64 = (1 << 48) - 1;

pub fn stream(seed: u64, replicate: u64, stage: u8, purpose: Purpose) -> ChaCha8Rng {
    assert!(replicate <= SHARED, "replicate index too large");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replicate << 16) | ((stage as u64) << 8) | purpose as u64);
    rng
}

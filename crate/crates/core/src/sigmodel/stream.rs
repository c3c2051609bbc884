//! Reproducible random streams.
//!
//! Every stream is ChaCha8 keyed by the master seed (expanded with
//! `SeedableRng::seed_from_u64`, which is specified by `rand_core` and
//! portable) with the 64-bit ChaCha stream id set to
//! `purpose << 56 | index`. Distinct `(purpose, index)` pairs therefore
//! address non-overlapping keystreams, independent of thread count or call
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator behind every simulated draw.
pub type SimRng = ChaCha8Rng;

/// Name of the generator algorithm, as recorded in configs.
pub const RNG_ALGORITHM: &str = "chacha8";

const INDEX_BITS: u32 = 56;

/// What a substream is used for. Values are part of the reproducibility
/// contract and must never be renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    /// Stand-alone block generation (`Scenario::rng`).
    Single = 0,
    /// Per-trial noise variances and channel shared by paired H0/H1 trials.
    Realization = 1,
    /// H0 measurement trials.
    Null = 2,
    /// H1 measurement trials.
    Alternative = 3,
    /// H0 trials used for empirical threshold calibration.
    Calibration = 4,
    /// Null-distribution validation trials.
    NullCheck = 5,
}

/// Stream for `(master_seed, purpose, index)`.
///
/// Panics if `index` needs more than 56 bits.
pub fn substream(master_seed: u64, purpose: Purpose, index: u64) -> SimRng {
    assert!(index < (1 << INDEX_BITS), "trial index {index} exceeds 56 bits");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}

//! Deterministic random substreams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(seed, index, lane)`, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Which consumer a substream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Episode = 0,
    Bias = 1,
    Scenario = 2,
    Oracle = 3,
}

/// Substream for consumer `lane` of replication `index`.
pub fn substream(seed: u64, index: u64, lane: Lane) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 2) | lane as u64);
    rng
}

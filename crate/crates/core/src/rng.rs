//! Seeded random streams. Every stochastic choice in the crate draws from a
//! ChaCha8 generator keyed by `(seed, stream)`, so results are reproducible
//! across platforms and independent of call order between streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids, grouped so different consumers never share a stream.
pub mod streams {
    pub const SBM_EDGES: u64 = 1;
    pub const SBM_FEATURES: u64 = 2;
    pub const SBM_MASKS: u64 = 3;

    /// Weight init for layer `l` (classifier init uses `classifier(l)`).
    pub const fn layer_weight(l: usize) -> u64 {
        0x100 + 4 * l as u64
    }
    pub const fn classifier(l: usize) -> u64 {
        0x100 + 4 * l as u64 + 1
    }
    pub const fn shuffle(l: usize) -> u64 {
        0x100 + 4 * l as u64 + 2
    }

    pub const CONTROLLER_INIT: u64 = 0x10_000;
    pub const CONTROLLER_EMBED: u64 = 0x10_001;
    pub const fn rollout(iteration: u64) -> u64 {
        0x20_000 + iteration
    }

    pub const PROBE_PAIRS: u64 = 0x30_000;
    pub const PROBE_FOREST: u64 = 0x30_001;
}

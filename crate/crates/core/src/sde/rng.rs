//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose key is the
//! tuple `(seed, path_index, component, cell)`. Streams are therefore
//! independent of evaluation order and of how paths are distributed across
//! threads, and any single cell can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub path: u64,
    pub component: u64,
    pub cell: u64,
}

impl StreamKey {
    pub fn rng(&self) -> StreamRng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.path.to_le_bytes());
        key[16..24].copy_from_slice(&self.component.to_le_bytes());
        key[24..32].copy_from_slice(&self.cell.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

pub fn stream(seed: u64, path: u64, component: u64, cell: u64) -> StreamRng {
    StreamKey {
        seed,
        path,
        component,
        cell,
    }
    .rng()
}

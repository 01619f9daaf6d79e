//! Per-node random streams.
//!
//! Every node owns an independent ChaCha8 stream selected by its id, so the
//! draws a node sees never depend on how much randomness other nodes have
//! consumed, nor on the order in which nodes are visited.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

pub type NodeRng = ChaCha8Rng;

/// A global seed from which per-node streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomTape {
    seed: u64,
}

impl RandomTape {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The private stream of node `v`.
    pub fn stream(&self, v: usize) -> NodeRng {
        node_stream(self.seed, v)
    }

    /// An independent tape for another phase of the same run.
    pub fn fork(&self, label: u64) -> RandomTape {
        RandomTape::new(splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x9e37_79b9))))
    }
}

pub fn node_stream(seed: u64, v: usize) -> NodeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(v as u64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Flips a coin with heads-probability `p`, consuming exactly one `u64`.
pub fn flip<W: Scalar>(p: &W, rng: &mut impl RngCore) -> bool {
    (rng.next_u64() as u128) < p.coin_threshold()
}

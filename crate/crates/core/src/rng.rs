//! Seed management.
//!
//! Every random stream is a ChaCha12 generator keyed by a 64-bit seed and a
//! stream id, so Monte-Carlo trials and the signals inside a trial can be
//! derived independently of execution order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A node in the seed tree. Children are derived deterministically with
/// [`Seed::split`], independent of how many siblings were drawn before.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(u64);

/// Stream ids used inside one trial.
pub mod streams {
    pub const INPUT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const SYSTEM: u64 = 3;
    pub const CONTAMINATION: u64 = 4;
}

impl Seed {
    pub const fn new(value: u64) -> Self {
        Seed(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    /// Child seed number `index`.
    pub fn split(self, index: u64) -> Seed {
        let mut rng = ChaCha12Rng::seed_from_u64(self.0);
        rng.set_stream(index.wrapping_add(1 << 32));
        Seed(rng.next_u64())
    }

    /// Generator for this node.
    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }

    /// Shorthand for `self.split(stream).rng()`.
    pub fn stream(self, stream: u64) -> ChaCha12Rng {
        self.split(stream).rng()
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

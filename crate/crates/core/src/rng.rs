//! Seed derivation for counter-based random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! [`StreamKey`] plus a 64-bit stream index (typically a row, start or
//! replication number). Work items therefore never share generator state, and
//! output does not depend on how a parallel schedule interleaves them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Stream = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(mix(seed))
    }

    /// Child key for a named sub-domain (an experiment cell, a grid point, ...).
    pub fn child(self, tag: u64) -> Self {
        StreamKey(mix(self.0 ^ mix(tag.wrapping_add(0x51_7C_C1_B7_27_22_0A_95))))
    }

    pub fn stream(self, index: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// Stable 64-bit tag for a string label.
pub fn tag(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

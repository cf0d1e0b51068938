//! Counter-based random substreams.
//!
//! Every random draw in the crate goes through a [`RandomSeed`]. A seed names
//! one ChaCha8 keystream: the `master` word keys the cipher and the `stream`
//! word selects the nonce. Replicas of an experiment never share a generator;
//! replica `r` reads from `seed.replica(r)`, so its values are fixed by the
//! pair (seed, r) and do not depend on which worker thread evaluates it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Key material for one independent random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSeed {
    pub master: u64,
    pub stream: u64,
}

/// Stream tags for the two layers of a steady-state sample.
pub(crate) const TAG_PROFILE: u64 = 0x7072_6f66_696c_6531;
pub(crate) const TAG_CONFIGURATION: u64 = 0x636f_6e66_6967_3031;

impl RandomSeed {
    pub const fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }

    /// Substream for replica `index`. Distinct indices give distinct streams.
    pub fn replica(&self, index: u64) -> Self {
        self.derive(index)
    }

    /// Substream labelled by an arbitrary tag.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            master: self.master,
            stream: splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }
}

/// Finalizer of the SplitMix64 generator; a bijection on u64.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw on the half-open interval (0, 1].
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

//! Counter-based random stream derivation.
//!
//! Every random stream is addressed by `(root seed, experiment tag, replica,
//! slot)`. The root seed and tag fix a 256-bit ChaCha8 key (four SplitMix64
//! outputs started from `root ^ fnv1a(tag)`); the replica and slot select the
//! 64-bit ChaCha stream `replica << 32 | slot`. Streams are therefore
//! independent of thread scheduling and of the order in which they are
//! requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Slot reserved for per-system randomness that is not tied to a particle.
pub const SYSTEM_SLOT: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub root: u64,
    pub tag: u64,
}

impl StreamKey {
    pub fn new(root: u64, tag: &str) -> Self {
        Self {
            root,
            tag: fnv1a(tag.as_bytes()),
        }
    }

    pub fn stream(&self, replica: u32, slot: u32) -> StreamRng {
        let mut state = self.root ^ self.tag;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream((u64::from(replica) << 32) | u64::from(slot));
        rng
    }

    /// Stream of particle `index` (slots start after [`SYSTEM_SLOT`]).
    pub fn particle(&self, replica: u32, index: usize) -> StreamRng {
        let slot = u32::try_from(index + 1).expect("particle index exceeds stream slot range");
        self.stream(replica, slot)
    }
}

/// The family of streams belonging to one replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReplicaStreams {
    pub key: StreamKey,
    pub replica: u32,
}

impl ReplicaStreams {
    pub fn new(key: StreamKey, replica: u32) -> Self {
        Self { key, replica }
    }

    pub fn system(&self) -> StreamRng {
        self.key.stream(self.replica, SYSTEM_SLOT)
    }

    /// Stream for particle (or particle chunk) `index`.
    pub fn particle(&self, index: usize) -> StreamRng {
        self.key.particle(self.replica, index)
    }
}

/// A single stream from a bare seed, for tests and one-off sampling.
pub fn seeded(seed: u64) -> StreamRng {
    StreamKey::new(seed, "").stream(0, SYSTEM_SLOT)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

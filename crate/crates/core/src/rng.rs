//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, stream, step)`: the ChaCha key is derived
//! from the experiment seed and the trajectory's stream id, and the step index
//! selects the ChaCha stream. A trajectory can therefore be resumed at any
//! step, and ensemble members never share randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of a random stream: one per trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

impl StreamId {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.seed ^ self.stream.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// Generator for the draws of step `step`.
    pub fn at_step(&self, step: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(step);
        rng
    }

    /// Generator for auxiliary, non-temporal draws (initial data, directions).
    pub fn auxiliary(&self, tag: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(u64::MAX - tag);
        rng
    }
}

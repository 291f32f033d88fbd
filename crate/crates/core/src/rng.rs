//! Reproducible random streams.
//!
//! Every photon history draws from its own ChaCha8 stream: the 256-bit key
//! is expanded once from the master seed and the photon index selects the
//! 64-bit stream id. Histories therefore do not depend on how photons are
//! scheduled across workers. Scans derive one master seed per scan row with
//! [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PhotonRng = ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct StreamFactory {
    key: <ChaCha8Rng as SeedableRng>::Seed,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for word in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            word.copy_from_slice(&state.to_le_bytes());
        }
        StreamFactory { key }
    }

    /// Stream for history `index`.
    pub fn stream(&self, index: u64) -> PhotonRng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Master seed for sub-experiment `label` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

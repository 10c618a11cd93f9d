//! Counter-derived random streams.
//!
//! Every trial gets its own ChaCha stream selected by `(master seed, SNR,
//! domain, trial index)`, so results do not depend on how trials are split
//! across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a stream is used for; distinct domains never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Trial = 1,
    Channel = 2,
}

/// Key material for one simulation point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamKey {
    key: [u8; 32],
}

impl StreamKey {
    pub fn new(seed: u64, snr_db: f64, domain: Domain) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        let words = [
            splitmix64(&mut state),
            splitmix64(&mut state) ^ snr_db.to_bits(),
            splitmix64(&mut state) ^ domain as u64,
            splitmix64(&mut state),
        ];
        // one more mixing round so nearby seeds/SNRs land far apart
        let mut mix = words[0] ^ words[1].rotate_left(17) ^ words[2].rotate_left(41);
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            let v = splitmix64(&mut mix) ^ w;
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        StreamKey { key }
    }

    /// Independent generator for stream `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

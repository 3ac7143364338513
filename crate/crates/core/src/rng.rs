//! Derived random streams.
//!
//! Every random object (a codeword, a session, a library resample) gets its own
//! ChaCha stream keyed by the master seed and a short path of indices, so the
//! result does not depend on which worker thread produced it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for `(seed, path[0], path[1], ...)`. Distinct paths give unrelated streams.
pub fn derive(seed: u64, path: &[u64]) -> StreamRng {
    let mut state = splitmix(seed ^ 0x6a09_e667_f3bc_c909);
    for (depth, &p) in path.iter().enumerate() {
        state = splitmix(state ^ splitmix(p.wrapping_add(depth as u64 + 1)));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Domain tags keep streams for different purposes apart.
pub mod domain {
    pub const CODEWORD: u64 = 1;
    pub const SESSION: u64 = 2;
    pub const RESAMPLE: u64 = 3;
    pub const EXPONENT_RESTART: u64 = 4;
    pub const MESSAGES: u64 = 5;
    pub const CHANNEL: u64 = 6;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn paths_separate_streams() {
        let a = derive(7, &[1, 2]).next_u64();
        let b = derive(7, &[2, 1]).next_u64();
        let c = derive(7, &[1, 2]).next_u64();
        let d = derive(8, &[1, 2]).next_u64();
        assert_eq!(a, c);
        assert_ne!(a, b);
        assert_ne!(a, d);
    }
}

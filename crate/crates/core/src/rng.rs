//! Counter-based random streams keyed by `(seed, trial, molecule)`.
//!
//! Each molecule owns a stream whose whole state is a 64-bit key and a
//! 64-bit counter. Draw `i` of a stream is `mix(key + i * GAMMA)`, the
//! SplitMix64 output function, so the sequence a molecule sees depends only
//! on its identifiers and never on which worker thread advances it.
//!
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat) driven
//! by the stream; uniforms are 53-bit and lie in `(0, 1]`.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const TRIAL_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const MOLECULE_SALT: u64 = 0x8cb9_2ba7_2f3d_8dd7;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Source of the two variates the engine consumes.
pub trait Draws {
    /// Standard normal variate.
    fn next_normal(&mut self) -> f64;
    /// Uniform variate in `(0, 1]`.
    fn next_uniform(&mut self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    key: u64,
    counter: u64,
}

impl RandomStream {
    /// Deterministic function of its three arguments.
    pub fn new(seed: u64, trial_id: u64, molecule_id: u64) -> Self {
        let k = mix64(seed.wrapping_add(GAMMA));
        let k = mix64(k ^ trial_id.wrapping_mul(TRIAL_SALT).wrapping_add(GAMMA));
        let k = mix64(k ^ molecule_id.wrapping_mul(MOLECULE_SALT).wrapping_add(GAMMA));
        RandomStream { key: k, counter: 0 }
    }

    /// Number of 64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }
}

/// Stream of molecule `molecule_id` in trial `trial_id`.
pub fn make_stream(seed: u64, trial_id: u64, molecule_id: u64) -> RandomStream {
    RandomStream::new(seed, trial_id, molecule_id)
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

impl Draws for RandomStream {
    fn next_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    fn next_uniform(&mut self) -> f64 {
        // ((0..2^53) + 1) / 2^53
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

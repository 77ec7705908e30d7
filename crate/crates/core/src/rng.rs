//! Seeded generators and the seed-derivation rule used across the crate.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_mt::Mt64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrngKind {
    /// 64-bit Mersenne Twister (MT19937-64).
    #[default]
    Mt19937_64,
    #[serde(rename = "chacha12")]
    ChaCha12,
}

pub enum SimRng {
    Mt(Box<Mt64>),
    ChaCha(Box<ChaCha12Rng>),
}

impl SimRng {
    pub fn new(kind: PrngKind, seed: u64) -> Self {
        match kind {
            PrngKind::Mt19937_64 => SimRng::Mt(Box::new(Mt64::new(seed))),
            PrngKind::ChaCha12 => SimRng::ChaCha(Box::new(ChaCha12Rng::seed_from_u64(seed))),
        }
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        match self {
            SimRng::Mt(r) => r.next_u32(),
            SimRng::ChaCha(r) => r.next_u32(),
        }
    }

    fn next_u64(&mut self) -> u64 {
        match self {
            SimRng::Mt(r) => r.next_u64(),
            SimRng::ChaCha(r) => r.next_u64(),
        }
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        match self {
            SimRng::Mt(r) => r.fill_bytes(dest),
            SimRng::ChaCha(r) => r.fill_bytes(dest),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sweep point `point` on lane/channel `lane`.
///
/// `splitmix64(base ^ splitmix64(point ^ splitmix64(lane ^ 0x005E_ED1A_2E0F_BA5E)))`.
/// Frozen: changing it changes every stored result.
pub fn derive_seed(base: u64, point: u64, lane: u64) -> u64 {
    splitmix64(base ^ splitmix64(point ^ splitmix64(lane ^ 0x005E_ED1A_2E0F_BA5E)))
}

/// Independent stream within one link run (bits, noise, ...).
pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    splitmix64(seed ^ splitmix64(stream as u64 + 1))
}

#[derive(Debug, Clone, Copy)]
pub enum Stream {
    Bits = 0,
    ReceiverNoise = 1,
    AmplifierNoise = 2,
    Aggressor = 3,
}

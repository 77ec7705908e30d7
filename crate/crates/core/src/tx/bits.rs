use bitvec::prelude::*;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{PrngKind, SimRng};

/// Packed bit string.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitSequence {
    bits: BitVec<u64, Lsb0>,
}

impl BitSequence {
    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        BitSequence {
            bits: bits.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).map(|b| *b)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().map(|b| *b)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Bits `[start, end)` as a new sequence.
    pub fn slice(&self, start: usize, end: usize) -> BitSequence {
        BitSequence {
            bits: self.bits[start..end].to_bitvec(),
        }
    }

    /// Number of positions where the two sequences differ.
    pub fn hamming_distance(&self, other: &BitSequence) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let diff = self.bits.clone() ^ &other.bits;
        Ok(diff.count_ones())
    }

    pub fn complement(&self) -> BitSequence {
        BitSequence {
            bits: !self.bits.clone(),
        }
    }
}

/// `count` pseudo-random bits from a seeded 64-bit Mersenne Twister.
pub fn generate_bits(seed: u64, count: usize) -> Result<BitSequence> {
    generate_bits_with(PrngKind::Mt19937_64, seed, count)
}

pub fn generate_bits_with(kind: PrngKind, seed: u64, count: usize) -> Result<BitSequence> {
    if count == 0 {
        return Err(Error::invalid("count", "need at least one bit"));
    }
    let mut rng = SimRng::new(kind, seed);
    let words = count.div_ceil(64);
    let raw: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
    let mut bits = BitVec::<u64, Lsb0>::from_vec(raw);
    bits.truncate(count);
    Ok(BitSequence { bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = generate_bits(1, 16).unwrap();
        let b = generate_bits(1, 16).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn rejects_zero() {
        assert!(generate_bits(1, 0).is_err());
    }

    #[test]
    fn balance_within_three_sigma() {
        for kind in [PrngKind::Mt19937_64, PrngKind::ChaCha12] {
            let n = 1 << 20;
            let b = generate_bits_with(kind, 42, n).unwrap();
            let sigma = (n as f64 * 0.25).sqrt();
            let dev = (b.count_ones() as f64 - n as f64 / 2.0).abs();
            assert!(dev < 3.0 * sigma, "{kind:?}: {dev} vs {sigma}");
        }
    }

    #[test]
    fn different_seeds_are_uncorrelated() {
        let n = 1 << 20;
        let a = generate_bits(1, n).unwrap();
        let b = generate_bits(2, n).unwrap();
        let d = a.hamming_distance(&b).unwrap() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((d - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn enough_bits_for_2_pow_18_pam4_symbols() {
        let b = generate_bits(1, 2 << 18).unwrap();
        assert_eq!(b.len(), 1 << 19);
    }

    #[test]
    fn hamming_and_complement() {
        let a = generate_bits(9, 1000).unwrap();
        assert_eq!(a.hamming_distance(&a.complement()).unwrap(), 1000);
        assert!(a.hamming_distance(&a.slice(0, 10)).is_err());
    }
}

//! Bit-to-level mapping.
//!
//! PAM4 and PAM8 use reflected binary Gray labels, most significant bit
//! first, so adjacent levels differ in one bit. PAM6 packs 5 bits into a pair
//! of symbols drawn from the 32 lowest-energy points of the 6x6 pair grid;
//! label `v` selects the `v`-th allowed pair in lexicographic order.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::modulation::ModulationFormat;
use crate::tx::BitSequence;

/// Level indices plus the format they index into.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    indices: Vec<u8>,
    format: ModulationFormat,
    rate_gbd: f64,
}

impl SymbolSequence {
    pub fn new(indices: Vec<u8>, format: ModulationFormat, rate_gbd: f64) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= format.order()) {
            return Err(Error::invalid(
                "symbols",
                format!("level index {bad} out of range for {format}"),
            ));
        }
        if !(rate_gbd > 0.0) {
            return Err(Error::invalid("rate_gbd", "must be > 0"));
        }
        Ok(SymbolSequence {
            indices,
            format,
            rate_gbd,
        })
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    pub fn format(&self) -> ModulationFormat {
        self.format
    }

    pub fn rate(&self) -> f64 {
        self.rate_gbd
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Normalized amplitudes.
    pub fn levels(&self) -> Vec<f64> {
        self.indices
            .iter()
            .map(|&i| self.format.level(i as usize))
            .collect()
    }
}

pub fn gray_encode(m: usize) -> usize {
    m ^ (m >> 1)
}

pub fn gray_decode(mut g: usize) -> usize {
    let mut m = g;
    while g > 1 {
        g >>= 1;
        m ^= g;
    }
    m
}

/// The 32 PAM6 pairs used by the 5-bit code, in label order.
pub fn pam6_pairs() -> &'static [(u8, u8); 32] {
    static PAIRS: OnceLock<[(u8, u8); 32]> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let energy = |i: u8| {
            let a = 2 * i as i32 - 5;
            a * a
        };
        let mut all: Vec<(u8, u8)> = (0..6).flat_map(|a| (0..6).map(move |b| (a, b))).collect();
        // stable: energy first, lexicographic tie-break
        all.sort_by_key(|&(a, b)| (energy(a) + energy(b), a, b));
        let mut kept: Vec<(u8, u8)> = all[..32].to_vec();
        kept.sort();
        let mut out = [(0u8, 0u8); 32];
        out.copy_from_slice(&kept);
        out
    })
}

fn pam6_label(pair: (u8, u8)) -> usize {
    let pairs = pam6_pairs();
    match pairs.binary_search(&pair) {
        Ok(i) => i,
        // Excluded corner: step the first coordinate one level inward.
        Err(_) => {
            let a = if pair.0 == 0 { 1 } else { 4 };
            pairs
                .binary_search(&(a, pair.1))
                .expect("inward neighbour of a corner is allowed")
        }
    }
}

/// Maps bits to level indices.
pub fn map_symbols(
    bits: &BitSequence,
    format: ModulationFormat,
    rate_gbd: f64,
) -> Result<SymbolSequence> {
    let (block_bits, block_syms) = format.block();
    if bits.len() % block_bits != 0 {
        return Err(Error::IndivisibleBits {
            bits: bits.len(),
            block: block_bits,
            format: format.name(),
        });
    }
    let blocks = bits.len() / block_bits;
    let mut out = Vec::with_capacity(blocks * block_syms);
    let mut it = bits.iter();
    for _ in 0..blocks {
        let mut label = 0usize;
        for _ in 0..block_bits {
            label = (label << 1) | it.next().unwrap() as usize;
        }
        match format {
            ModulationFormat::Pam6 => {
                let (a, b) = pam6_pairs()[label];
                out.push(a);
                out.push(b);
            }
            _ => out.push(gray_decode(label) as u8),
        }
    }
    SymbolSequence::new(out, format, rate_gbd)
}

/// Inverse of [`map_symbols`]. PAM6 pairs that the code never emits (the
/// four corners) are demapped to their nearest allowed neighbour.
pub fn demap(symbols: &SymbolSequence) -> Result<BitSequence> {
    let format = symbols.format();
    let (block_bits, block_syms) = format.block();
    let idx = symbols.indices();
    if idx.len() % block_syms != 0 {
        return Err(Error::invalid(
            "symbols",
            format!("{format} needs an even symbol count"),
        ));
    }
    let mut out = BitSequence::default();
    for chunk in idx.chunks(block_syms) {
        let label = match format {
            ModulationFormat::Pam6 => pam6_label((chunk[0], chunk[1])),
            _ => gray_encode(chunk[0] as usize),
        };
        for k in (0..block_bits).rev() {
            out.push((label >> k) & 1 == 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::generate_bits;

    fn bits(s: &str) -> BitSequence {
        BitSequence::from_bools(s.chars().filter(|c| !c.is_whitespace()).map(|c| c == '1'))
    }

    #[test]
    fn pam4_gray_order() {
        let s = map_symbols(&bits("00 01 11 10"), ModulationFormat::Pam4, 1.0).unwrap();
        assert_eq!(s.indices(), &[0, 1, 2, 3]);
        let r5 = 5f64.sqrt();
        let lv = s.levels();
        for (l, e) in lv.iter().zip([-3.0 / r5, -1.0 / r5, 1.0 / r5, 3.0 / r5]) {
            assert!((l - e).abs() < 1e-15);
        }
    }

    #[test]
    fn pam8_labels_distinct_and_adjacent_hamming_one() {
        let mut seen = std::collections::HashSet::new();
        let mut label_of = [0usize; 8];
        for label in 0..8usize {
            let b = BitSequence::from_bools((0..3).rev().map(|k| (label >> k) & 1 == 1));
            let s = map_symbols(&b, ModulationFormat::Pam8, 1.0).unwrap();
            let m = s.indices()[0] as usize;
            assert!(seen.insert(m));
            label_of[m] = label;
        }
        for m in 0..7 {
            assert_eq!((label_of[m] ^ label_of[m + 1]).count_ones(), 1);
        }
    }

    #[test]
    fn pam6_excludes_four_corners() {
        let pairs = pam6_pairs();
        assert_eq!(pairs.len(), 32);
        let all: Vec<(u8, u8)> = (0..6).flat_map(|a| (0..6).map(move |b| (a, b))).collect();
        let excluded: Vec<_> = all.iter().filter(|p| !pairs.contains(p)).copied().collect();
        assert_eq!(excluded, vec![(0, 0), (0, 5), (5, 0), (5, 5)]);
    }

    #[test]
    fn round_trip_all_labels() {
        for fmt in ModulationFormat::ALL {
            let (bb, _) = fmt.block();
            let n_labels = 1usize << bb;
            let b = BitSequence::from_bools(
                (0..n_labels).flat_map(|l| (0..bb).rev().map(move |k| (l >> k) & 1 == 1)),
            );
            let s = map_symbols(&b, fmt, 1.0).unwrap();
            assert_eq!(demap(&s).unwrap(), b, "{fmt}");
        }
    }

    #[test]
    fn round_trip_random() {
        for fmt in ModulationFormat::ALL {
            let b = generate_bits(3, 30_000).unwrap();
            let s = map_symbols(&b, fmt, 1.0).unwrap();
            assert_eq!(demap(&s).unwrap(), b);
        }
    }

    #[test]
    fn indivisible_rejected() {
        assert!(map_symbols(&bits("101"), ModulationFormat::Pam4, 1.0).is_err());
        assert!(map_symbols(&bits("1011"), ModulationFormat::Pam8, 1.0).is_err());
        assert!(map_symbols(&bits("101101"), ModulationFormat::Pam6, 1.0).is_err());
    }

    #[test]
    fn empty_demap() {
        let s = SymbolSequence::new(vec![], ModulationFormat::Pam4, 1.0).unwrap();
        assert!(demap(&s).unwrap().is_empty());
    }

    #[test]
    fn corners_demap_inward() {
        let s = SymbolSequence::new(vec![5, 5, 0, 0], ModulationFormat::Pam6, 1.0).unwrap();
        let b = demap(&s).unwrap();
        let back = map_symbols(&b, ModulationFormat::Pam6, 1.0).unwrap();
        assert_eq!(back.indices(), &[4, 5, 1, 0]);
    }

    #[test]
    fn gray_inverse() {
        for m in 0..64 {
            assert_eq!(gray_decode(gray_encode(m)), m);
        }
    }
}

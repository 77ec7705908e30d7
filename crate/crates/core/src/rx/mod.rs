//! Receiver DSP: resampling to 2 samples per symbol, synchronization,
//! adaptive equalization, 1-tap MLSE, demapping and BER counting.

mod equalizer;
mod mlse;
mod sync;

pub use crate::tx::demap;
pub use equalizer::{
    dfe_equalize, equalize, ffe_equalize, wiener_equalizer, AdaptiveEqualizer, Equalized,
    EqualizerConfig, EqualizerKind,
};
pub use mlse::{estimate_postcursor, mlse_1tap};
pub use sync::{reference_waveform, sync_threshold, synchronize, SyncResult, SYNC_MIN_RATIO};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::ModulationFormat;
use crate::signal::{resample_real, Origin, Waveform};
use crate::tx::{BitSequence, SymbolSequence};

/// Band-limited resampling to exactly two samples per symbol of a
/// `symbols`-long block.
pub fn resample_to_2sps(w: &Waveform, symbol_rate_gbd: f64, symbols: usize) -> Result<Waveform> {
    if !(symbol_rate_gbd > 0.0) {
        return Err(Error::invalid("symbol_rate", "must be > 0"));
    }
    if w.sample_rate() < symbol_rate_gbd * (1.0 - 1e-9) {
        return Err(Error::invalid(
            "sample_rate",
            format!(
                "{} GSa/s is below the {} GBd symbol rate",
                w.sample_rate(),
                symbol_rate_gbd
            ),
        ));
    }
    let x = w.as_real()?;
    Waveform::real(
        resample_real(x, 2 * symbols),
        2.0 * symbol_rate_gbd,
        Origin::Rx,
    )
}

/// Slicer decisions for one soft value per symbol.
pub fn slice_symbols(
    soft: &[f64],
    format: ModulationFormat,
    rate_gbd: f64,
) -> Result<SymbolSequence> {
    SymbolSequence::new(
        soft.iter().map(|&y| format.slice(y) as u8).collect(),
        format,
        rate_gbd,
    )
}

/// Bit-error count over the block with a guard at each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub bit_errors: usize,
    pub bits_compared: usize,
    pub ber: f64,
}

impl BerReport {
    /// Error-count based bound used when no errors were seen: 3 / bits
    /// (95% confidence).
    pub fn upper_bound(&self) -> f64 {
        if self.bit_errors == 0 {
            3.0 / self.bits_compared as f64
        } else {
            self.ber
        }
    }
}

/// Compares `rx_bits` with `tx_bits`, skipping `guard_symbols` symbols
/// (converted to bits for `format`) at the start and the end.
pub fn measure_ber(
    rx_bits: &BitSequence,
    tx_bits: &BitSequence,
    guard_symbols: usize,
    format: ModulationFormat,
) -> Result<BerReport> {
    if rx_bits.len() != tx_bits.len() {
        return Err(Error::LengthMismatch {
            left: rx_bits.len(),
            right: tx_bits.len(),
        });
    }
    let (bb, bs) = format.block();
    let guard = (guard_symbols.div_ceil(bs)) * bb;
    if 2 * guard >= tx_bits.len() {
        return Err(Error::invalid(
            "guard",
            format!(
                "{guard} guard bits per side leave nothing of {} bits",
                tx_bits.len()
            ),
        ));
    }
    let end = tx_bits.len() - guard;
    let errors = rx_bits
        .slice(guard, end)
        .hamming_distance(&tx_bits.slice(guard, end))?;
    let compared = end - guard;
    Ok(BerReport {
        bit_errors: errors,
        bits_compared: compared,
        ber: errors as f64 / compared as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::generate_bits;

    #[test]
    fn ber_counts_only_inside_guard() {
        let tx = generate_bits(1, 4000).unwrap();
        let mut flipped: Vec<bool> = tx.iter().collect();
        flipped[0] = !flipped[0];
        flipped[3999] = !flipped[3999];
        flipped[2000] = !flipped[2000];
        let rx = BitSequence::from_bools(flipped);
        let r = measure_ber(&rx, &tx, 64, ModulationFormat::Pam4).unwrap();
        assert_eq!(r.bit_errors, 1);
        assert_eq!(r.bits_compared, 4000 - 2 * 128);
    }

    #[test]
    fn ber_of_complement_is_one() {
        let tx = generate_bits(2, 5000).unwrap();
        let r = measure_ber(&tx.complement(), &tx, 10, ModulationFormat::Pam6).unwrap();
        assert_eq!(r.ber, 1.0);
        let z = measure_ber(&tx, &tx, 10, ModulationFormat::Pam6).unwrap();
        assert_eq!(z.ber, 0.0);
        assert_eq!(z.upper_bound(), 3.0 / z.bits_compared as f64);
    }

    #[test]
    fn ber_errors() {
        let a = generate_bits(2, 100).unwrap();
        let b = generate_bits(2, 99).unwrap();
        assert!(measure_ber(&a, &b, 0, ModulationFormat::Pam4).is_err());
        assert!(measure_ber(&a, &a, 25, ModulationFormat::Pam4).is_err());
    }

    #[test]
    fn resample_rate_and_length() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.01).sin()).collect();
        let w = Waveform::real(x, 500.0, Origin::Rx).unwrap();
        let r = resample_to_2sps(&w, 100.0, 200).unwrap();
        assert_eq!(r.len(), 400);
        assert_eq!(r.sample_rate(), 200.0);
        assert!(resample_to_2sps(&w, 600.0, 200).is_err());
    }
}

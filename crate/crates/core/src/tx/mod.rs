//! Transmitter DSP: bit generation, PAM mapping, rate conversion onto the
//! DAC grid, pre-emphasis, clipping and DAC quantization.

mod bits;
mod mapping;

pub use bits::{generate_bits, generate_bits_with, BitSequence};
pub use mapping::{demap, gray_decode, gray_encode, map_symbols, pam6_pairs, SymbolSequence};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::FrequencyResponse;
use crate::error::{Error, Result};
use crate::signal::{filter_real, resample_real, rms, Origin, Waveform};
use crate::units::db_to_linear_amplitude;

/// Band-limited interpolation of the symbol levels onto the DAC grid.
///
/// The sample count is `round(N * dac_rate / symbol_rate)`; the returned
/// waveform carries the exact rate implied by that count, so one waveform
/// period always holds exactly `N` symbols.
pub fn resample_to_dac(symbols: &SymbolSequence, dac_rate_gsa: f64) -> Result<Waveform> {
    let rs = symbols.rate();
    if !(dac_rate_gsa >= rs) {
        return Err(Error::invalid(
            "dac_rate",
            format!("{dac_rate_gsa} GSa/s is below the {rs} GBd symbol rate"),
        ));
    }
    let n = symbols.len();
    if n == 0 {
        return Err(Error::invalid("symbols", "empty symbol sequence"));
    }
    let m = (n as f64 * dac_rate_gsa / rs).round() as usize;
    let samples = resample_real(&symbols.levels(), m);
    Waveform::real(samples, m as f64 / n as f64 * rs, Origin::Tx)
}

/// Multiplies the spectrum by the inverse of `response`, limiting the
/// inverse gain to `max_boost_db` (phase is still inverted where clamped).
pub fn apply_preemphasis(
    w: &Waveform,
    response: &FrequencyResponse,
    max_boost_db: f64,
) -> Result<Waveform> {
    let fs = w.sample_rate();
    if response.grid().len() > 1 && response.max_frequency() < fs / 2.0 * (1.0 - 1e-9) {
        return Err(Error::invalid(
            "response",
            format!(
                "pre-emphasis response ends at {} GHz, needs to cover {} GHz",
                response.max_frequency(),
                fs / 2.0
            ),
        ));
    }
    let limit = db_to_linear_amplitude(max_boost_db);
    let y = filter_real(w.as_real()?, fs, |f| {
        let (mag_db, phase) = response.db_phase_at(f);
        let inv = db_to_linear_amplitude(-mag_db).min(limit);
        Complex64::from_polar(inv, -phase)
    });
    w.with_samples(crate::signal::Samples::Real(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    /// Target peak-to-RMS amplitude ratio.
    pub clip_ratio: f64,
}

impl ClipSpec {
    pub fn new(clip_ratio: f64) -> Result<Self> {
        if !(clip_ratio > 0.0) || !clip_ratio.is_finite() {
            return Err(Error::invalid(
                "clip_ratio",
                format!("must be > 0, got {clip_ratio}"),
            ));
        }
        Ok(ClipSpec { clip_ratio })
    }
}

/// Saturation level that makes the clipped output's peak-to-RMS ratio equal
/// `clip_ratio`. If the input already satisfies it, returns its peak.
///
/// The RMS is that of the clipped output, not the input: clipping removes
/// power, so a level of `ratio * RMS(input)` would overshoot the PAPR target.
/// Ratios at or below 1 cannot be met by any level and fall back to
/// `ratio * RMS(input)`.
pub fn clip_threshold(x: &[f64], clip_ratio: f64) -> f64 {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r_in = rms(x);
    if peak == 0.0 || peak <= clip_ratio * r_in {
        return peak;
    }
    if clip_ratio <= 1.0 {
        return clip_ratio * r_in;
    }
    let ratio_at = |t: f64| {
        let p = x.iter().map(|v| v.abs().min(t).powi(2)).sum::<f64>() / x.len() as f64;
        t / p.sqrt()
    };
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ratio_at(mid) <= clip_ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn clip(w: &Waveform, spec: ClipSpec) -> Result<Waveform> {
    let x = w.as_real()?;
    let t = clip_threshold(x, spec.clip_ratio);
    Ok(clip_at(w, t)?.0)
}

/// Clip at a given level; returns the output and the level used.
pub fn clip_at(w: &Waveform, level: f64) -> Result<(Waveform, f64)> {
    let x = w.as_real()?;
    let y = x.iter().map(|v| v.clamp(-level, level)).collect();
    Ok((w.with_samples(crate::signal::Samples::Real(y))?, level))
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(x: &[f64]) -> f64 {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v * v));
    let avg = x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64;
    10.0 * (peak / avg).log10()
}

pub const MIN_DAC_BITS: u32 = 2;
pub const MAX_DAC_BITS: u32 = 16;

/// Uniform mid-rise quantizer with `2^bits` levels spanning
/// `[-full_scale/2, +full_scale/2]`; out-of-range samples saturate.
pub fn quantize(w: &Waveform, bits: u32, full_scale: f64) -> Result<Waveform> {
    if !(MIN_DAC_BITS..=MAX_DAC_BITS).contains(&bits) {
        return Err(Error::invalid(
            "bits",
            format!("must be in 2..=16, got {bits}"),
        ));
    }
    if !(full_scale > 0.0) {
        return Err(Error::invalid("full_scale", "must be > 0"));
    }
    let codes = 1i64 << bits;
    let step = full_scale / codes as f64;
    let top = codes / 2 - 1;
    let y = w
        .as_real()?
        .iter()
        .map(|&v| {
            let c = ((v / step).floor() as i64).clamp(-codes / 2, top);
            (c as f64 + 0.5) * step
        })
        .collect();
    w.with_samples(crate::signal::Samples::Real(y))
}

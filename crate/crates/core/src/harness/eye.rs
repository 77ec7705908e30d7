use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::LinkConfig;
use crate::harness::link::{align, propagate, transmit};
use crate::rng::{derive_seed, stream_seed, Stream};
use crate::rx::{ffe_equalize, EqualizerConfig, EqualizerKind};
use crate::signal::resample_real;

/// Persistence histogram of a waveform folded over two unit intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeHistogram {
    pub symbol_rate_gbd: f64,
    pub averages: usize,
    pub time_bins: usize,
    pub amplitude_bins: usize,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    /// Row-major: `counts[t * amplitude_bins + a]`.
    pub counts: Vec<u64>,
}

impl EyeHistogram {
    pub fn count(&self, t: usize, a: usize) -> u64 {
        self.counts[t * self.amplitude_bins + a]
    }

    pub fn column(&self, t: usize) -> &[u64] {
        &self.counts[t * self.amplitude_bins..(t + 1) * self.amplitude_bins]
    }

    /// Amplitude at the center of bin `a`.
    pub fn amplitude_of(&self, a: usize) -> f64 {
        let step = (self.amplitude_max - self.amplitude_min) / self.amplitude_bins as f64;
        self.amplitude_min + (a as f64 + 0.5) * step
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Minimum trace length for a meaningful eye.
pub const MIN_EYE_SYMBOLS: usize = 100;

/// Folds `traces` modulo two unit intervals.
///
/// Traces are averaged in consecutive groups of `averages` before folding
/// (all must share length and rate). Each averaged trace is band-limited
/// resampled to `time_bins / 2` samples per symbol so every time bin gets one
/// sample per two symbols. The amplitude axis spans `range`, or the data
/// extremes plus a 5% margin.
pub fn eye_diagram(
    traces: &[crate::signal::Waveform],
    symbol_rate_gbd: f64,
    averages: usize,
    bins: (usize, usize),
    range: Option<(f64, f64)>,
) -> Result<EyeHistogram> {
    let (time_bins, amplitude_bins) = bins;
    if time_bins < 2 || time_bins % 2 != 0 || amplitude_bins == 0 {
        return Err(Error::invalid(
            "bins",
            "time bins must be even and >= 2, amplitude bins >= 1",
        ));
    }
    if averages == 0 || traces.is_empty() || traces.len() % averages != 0 {
        return Err(Error::invalid(
            "averages",
            "trace count must be a positive multiple of averages",
        ));
    }
    let first = &traces[0];
    let symbols_f = first.len() as f64 * symbol_rate_gbd / first.sample_rate();
    let symbols = symbols_f.round() as usize;
    if (symbols_f - symbols as f64).abs() > 1e-6 {
        return Err(Error::invalid(
            "symbol_rate",
            "trace does not hold a whole number of symbols",
        ));
    }
    if symbols < MIN_EYE_SYMBOLS {
        return Err(Error::invalid(
            "traces",
            format!("need >= {MIN_EYE_SYMBOLS} symbols, got {symbols}"),
        ));
    }
    let spu = time_bins / 2;
    let mut folded = Vec::new();
    for group in traces.chunks(averages) {
        let mut acc = vec![0.0; first.len()];
        for t in group {
            if t.len() != first.len() || t.sample_rate() != first.sample_rate() {
                return Err(Error::invalid(
                    "traces",
                    "all traces must share length and rate",
                ));
            }
            for (a, v) in acc.iter_mut().zip(t.as_real()?) {
                *a += v;
            }
        }
        for a in acc.iter_mut() {
            *a /= averages as f64;
        }
        folded.push(resample_real(&acc, symbols * spu));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let (mn, mx) = folded
                .iter()
                .flatten()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            let margin = 0.05 * (mx - mn).max(1e-12);
            (mn - margin, mx + margin)
        }
    };
    if !(hi > lo) {
        return Err(Error::invalid(
            "range",
            "amplitude range must be increasing",
        ));
    }
    let mut counts = vec![0u64; time_bins * amplitude_bins];
    for trace in &folded {
        for (i, &v) in trace.iter().enumerate() {
            if v < lo || v > hi {
                continue;
            }
            let a = (((v - lo) / (hi - lo)) * amplitude_bins as f64) as usize;
            counts[(i % time_bins) * amplitude_bins + a.min(amplitude_bins - 1)] += 1;
        }
    }
    Ok(EyeHistogram {
        symbol_rate_gbd,
        averages,
        time_bins,
        amplitude_bins,
        amplitude_min: lo,
        amplitude_max: hi,
        counts,
    })
}

/// Eye of the received signal: `averages` captures of the same pattern with
/// independent receiver noise are aligned and averaged, optionally passed
/// through a trained feed-forward equalizer, then folded.
pub fn link_eye(
    config: &LinkConfig,
    averages: usize,
    bins: (usize, usize),
    equalizer: Option<&EqualizerConfig>,
) -> Result<EyeHistogram> {
    config.validate()?;
    if averages == 0 {
        return Err(Error::invalid("averages", "must be >= 1"));
    }
    let tx = transmit(config)?;
    let base = stream_seed(config.link.seed, Stream::ReceiverNoise);
    let mut acc = vec![0.0; 2 * tx.symbols.len()];
    for k in 0..averages {
        let seed = if k == 0 {
            base
        } else {
            derive_seed(base, k as u64, 0)
        };
        let rx = propagate(config, &tx.drive, seed)?;
        for (a, v) in acc.iter_mut().zip(align(&rx.waveform, &tx)?) {
            *a += v / averages as f64;
        }
    }
    let trace = match equalizer {
        Some(eq) => {
            let mut ff = *eq;
            ff.kind = EqualizerKind::Ffe;
            ff.fb_taps = 0;
            let out = ffe_equalize(&acc, &ff, &tx.symbols)?;
            out.engine.filter_trace(&acc)
        }
        None => acc,
    };
    let w = crate::signal::Waveform::real(
        trace,
        2.0 * config.link.symbol_rate_gbd,
        crate::signal::Origin::Rx,
    )?;
    let mut eye = eye_diagram(&[w], config.link.symbol_rate_gbd, 1, bins, None)?;
    eye.averages = averages;
    Ok(eye)
}

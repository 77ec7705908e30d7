//! Fractionally spaced adaptive equalizers.
//!
//! One engine covers all four receiver variants. A T/2-spaced feed-forward
//! filter produces one output per symbol; optional T-spaced feedback taps
//! subtract ISI reconstructed from past decisions. For the `+MLSE1` variants
//! the filter is not trained toward the symbol itself but toward the
//! partial-response target `s[k] + a * s[k-1]`, with `a` adapted jointly;
//! the first postcursor is then left for the sequence detector instead of
//! being removed by noise-enhancing linear gain or error-prone feedback.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::ModulationFormat;
use crate::tx::SymbolSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EqualizerKind {
    #[serde(rename = "ffe")]
    Ffe,
    #[serde(rename = "ffe+mlse1")]
    FfeMlse1,
    #[serde(rename = "dfe")]
    Dfe,
    #[serde(rename = "dfe+mlse1")]
    DfeMlse1,
}

impl EqualizerKind {
    pub const ALL: [EqualizerKind; 4] = [Self::Ffe, Self::FfeMlse1, Self::Dfe, Self::DfeMlse1];

    pub fn label(self) -> &'static str {
        match self {
            Self::Ffe => "ffe",
            Self::FfeMlse1 => "ffe+mlse1",
            Self::Dfe => "dfe",
            Self::DfeMlse1 => "dfe+mlse1",
        }
    }

    pub fn uses_feedback(self) -> bool {
        matches!(self, Self::Dfe | Self::DfeMlse1)
    }

    pub fn uses_mlse(self) -> bool {
        matches!(self, Self::FfeMlse1 | Self::DfeMlse1)
    }
}

impl std::fmt::Display for EqualizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for EqualizerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown equalizer `{s}` (expected ffe, ffe+mlse1, dfe or dfe+mlse1)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "EqualizerFields")]
pub struct EqualizerConfig {
    pub kind: EqualizerKind,
    /// Feed-forward taps at T/2 spacing; odd.
    pub ff_taps: usize,
    /// Feedback taps at T spacing; ignored by feed-forward-only kinds.
    pub fb_taps: usize,
    /// LMS step size during training.
    pub step_size: f64,
    /// LMS step size of the decision-directed pass; 0 freezes the filter
    /// after training.
    pub tracking_step_size: f64,
    pub training_symbols: usize,
    /// Passes over the training prefix before the decision-directed pass.
    pub training_passes: usize,
}

/// Serialized form: everything except `kind` may be omitted and falls back
/// to the per-kind defaults of [`EqualizerConfig::new`].
#[derive(Deserialize)]
struct EqualizerFields {
    kind: EqualizerKind,
    ff_taps: Option<usize>,
    fb_taps: Option<usize>,
    step_size: Option<f64>,
    tracking_step_size: Option<f64>,
    training_symbols: Option<usize>,
    training_passes: Option<usize>,
}

impl From<EqualizerFields> for EqualizerConfig {
    fn from(f: EqualizerFields) -> Self {
        let d = EqualizerConfig::new(f.kind);
        EqualizerConfig {
            kind: f.kind,
            ff_taps: f.ff_taps.unwrap_or(d.ff_taps),
            fb_taps: f.fb_taps.unwrap_or(d.fb_taps),
            step_size: f.step_size.unwrap_or(d.step_size),
            tracking_step_size: f.tracking_step_size.unwrap_or(d.tracking_step_size),
            training_symbols: f.training_symbols.unwrap_or(d.training_symbols),
            training_passes: f.training_passes.unwrap_or(d.training_passes),
        }
    }
}

impl EqualizerConfig {
    pub fn new(kind: EqualizerKind) -> Self {
        EqualizerConfig {
            kind,
            ff_taps: 51,
            fb_taps: if kind.uses_feedback() { 21 } else { 0 },
            step_size: 1e-3,
            tracking_step_size: 1e-4,
            training_symbols: 8192,
            training_passes: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ff_taps == 0 || self.ff_taps % 2 == 0 {
            return Err(Error::invalid(
                "ff_taps",
                format!("must be odd and >= 1, got {}", self.ff_taps),
            ));
        }
        if self.kind.uses_feedback() && self.fb_taps == 0 {
            return Err(Error::invalid(
                "fb_taps",
                "decision feedback needs at least one tap",
            ));
        }
        if !(self.step_size > 0.0 && self.step_size < 1.0) {
            return Err(Error::invalid(
                "step_size",
                format!("must lie in (0, 1), got {}", self.step_size),
            ));
        }
        if !(self.tracking_step_size >= 0.0 && self.tracking_step_size < 1.0) {
            return Err(Error::invalid(
                "tracking_step_size",
                format!("must lie in [0, 1), got {}", self.tracking_step_size),
            ));
        }
        if self.training_symbols == 0 || self.training_passes == 0 {
            return Err(Error::invalid(
                "training_symbols",
                "training needs symbols and at least one pass",
            ));
        }
        Ok(())
    }

    fn feedback_taps(&self) -> usize {
        if self.kind.uses_feedback() {
            self.fb_taps
        } else {
            0
        }
    }
}

/// Output of one equalizer run over a whole block.
#[derive(Debug, Clone)]
pub struct Equalized {
    /// One soft estimate per symbol.
    pub soft: Vec<f64>,
    /// Symbol-by-symbol decisions (tentative ones for partial-response
    /// targets).
    pub decisions: Vec<u8>,
    pub engine: AdaptiveEqualizer,
    /// Mean squared error over the last training pass.
    pub training_mse: f64,
}

/// Adapted filter state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveEqualizer {
    pub ff: Vec<f64>,
    pub fb: Vec<f64>,
    /// First symbol lag covered by `fb` (1 for a DFE, 2 when the first
    /// postcursor belongs to the partial-response target).
    pub fb_offset: usize,
    /// Partial-response postcursor of the training target.
    pub target_postcursor: f64,
    adapt_target: bool,
    format: ModulationFormat,
}

/// Bound on the adapted partial-response postcursor (the MLSE needs |h1| < 1).
const MAX_TARGET_POSTCURSOR: f64 = 0.95;

impl AdaptiveEqualizer {
    pub fn new(config: &EqualizerConfig, format: ModulationFormat) -> Self {
        let mut ff = vec![0.0; config.ff_taps];
        ff[config.ff_taps / 2] = 1.0;
        let partial = config.kind.uses_mlse();
        AdaptiveEqualizer {
            ff,
            fb: vec![0.0; config.feedback_taps()],
            fb_offset: if partial { 2 } else { 1 },
            target_postcursor: 0.0,
            adapt_target: partial,
            format,
        }
    }

    fn ff_output(&self, x: &[f64], k: usize) -> f64 {
        let n = x.len();
        let center = self.ff.len() / 2;
        let base = 2 * k + n + center;
        self.ff
            .iter()
            .enumerate()
            .map(|(i, w)| w * x[(base - i) % n])
            .sum()
    }

    fn fb_output(&self, past: &[f64], k: usize) -> f64 {
        let n = past.len();
        self.fb
            .iter()
            .enumerate()
            .map(|(j, b)| b * past[(k + n - self.fb_offset - j) % n])
            .sum()
    }

    fn update(&mut self, x: &[f64], past: &[f64], k: usize, err: f64, mu: f64) {
        let n = x.len();
        let center = self.ff.len() / 2;
        let base = 2 * k + n + center;
        for (i, w) in self.ff.iter_mut().enumerate() {
            *w += mu * err * x[(base - i) % n];
        }
        let m = past.len();
        for (j, b) in self.fb.iter_mut().enumerate() {
            *b -= mu * err * past[(k + m - self.fb_offset - j) % m];
        }
        if self.adapt_target {
            let prev = past[(k + m - 1) % m];
            self.target_postcursor = (self.target_postcursor - mu * err * prev)
                .clamp(-MAX_TARGET_POSTCURSOR, MAX_TARGET_POSTCURSOR);
        }
    }

    /// Tentative decision for output `y` given the previous decided level.
    fn decide(&self, y: f64, prev_level: f64) -> u8 {
        self.format.slice(y - self.target_postcursor * prev_level) as u8
    }

    /// Feed-forward filter evaluated at every input sample (2 sps output),
    /// for eye diagrams.
    pub fn filter_trace(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let center = self.ff.len() / 2;
        (0..n)
            .map(|j| {
                let base = j + n * (1 + self.ff.len() / n.max(1)) + center;
                self.ff
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * x[(base - i) % n])
                    .sum()
            })
            .collect()
    }

    /// Decision pass with frozen coefficients.
    ///
    /// `reference` seeds the decision history that wraps around the block
    /// start. `forced` replaces the decision at one index, which lets callers
    /// probe error propagation.
    pub fn run_fixed(
        &self,
        x: &[f64],
        reference: &SymbolSequence,
        forced: Option<(usize, u8)>,
    ) -> (Vec<f64>, Vec<u8>) {
        let n = reference.len();
        let mut past = reference.levels();
        let mut soft = Vec::with_capacity(n);
        let mut dec = Vec::with_capacity(n);
        for k in 0..n {
            let y = self.ff_output(x, k) - self.fb_output(&past, k);
            let prev = past[(k + n - 1) % n];
            let mut d = self.decide(y, prev);
            if let Some((at, level)) = forced {
                if at == k {
                    d = level;
                }
            }
            past[k] = self.format.level(d as usize);
            soft.push(y);
            dec.push(d);
        }
        (soft, dec)
    }
}

fn check_inputs(x: &[f64], config: &EqualizerConfig, reference: &SymbolSequence) -> Result<()> {
    config.validate()?;
    if config.training_symbols > reference.len() {
        return Err(Error::invalid(
            "training_symbols",
            format!(
                "{} exceeds the {} reference symbols",
                config.training_symbols,
                reference.len()
            ),
        ));
    }
    if x.len() != 2 * reference.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: 2 * reference.len(),
        });
    }
    Ok(())
}

/// LMS training over the reference prefix followed by one decision-directed
/// pass that produces the outputs. The decision-directed pass keeps adapting
/// with the (smaller) tracking step: its error signal comes from tentative
/// decisions, and at high error rates a full training step lets wrong
/// decisions drag the filter away.
fn run(x: &[f64], config: &EqualizerConfig, reference: &SymbolSequence) -> Result<Equalized> {
    check_inputs(x, config, reference)?;
    let format = reference.format();
    let truth = reference.levels();
    let n = reference.len();
    let mu = config.step_size;
    let mut eq = AdaptiveEqualizer::new(config, format);

    let train = config.training_symbols;
    let window = (train / 8).clamp(1, 512);
    let mut first_mse = None;
    let mut last_mse = 0.0;
    for _pass in 0..config.training_passes {
        let mut acc = 0.0;
        let mut acc_n = 0usize;
        let mut tail = 0.0;
        for k in 0..train {
            let y = eq.ff_output(x, k) - eq.fb_output(&truth, k);
            let target = truth[k] + eq.target_postcursor * truth[(k + n - 1) % n];
            let err = target - y;
            if !err.is_finite() || err.abs() > 1e6 {
                return Err(Error::AdaptationFailure {
                    initial: first_mse.unwrap_or(acc / acc_n.max(1) as f64),
                    last: f64::INFINITY,
                });
            }
            acc += err * err;
            acc_n += 1;
            if first_mse.is_none() && acc_n == window {
                first_mse = Some(acc / window as f64);
            }
            if k + window >= train {
                tail += err * err;
            }
            eq.update(x, &truth, k, err, mu);
        }
        last_mse = tail / window.min(train) as f64;
    }
    let initial = first_mse.unwrap_or(last_mse);
    if last_mse > 10.0 * initial.max(1e-6) {
        return Err(Error::AdaptationFailure {
            initial,
            last: last_mse,
        });
    }

    // The partial-response target is fixed once trained: tentative decisions
    // against a moving target pull it away from the channel the sequence
    // detector is about to assume.
    eq.adapt_target = false;
    let mut past = truth.clone();
    let mut soft = Vec::with_capacity(n);
    let mut dec = Vec::with_capacity(n);
    for k in 0..n {
        let y = eq.ff_output(x, k) - eq.fb_output(&past, k);
        let prev = past[(k + n - 1) % n];
        let d = eq.decide(y, prev);
        let level = format.level(d as usize);
        let err = level + eq.target_postcursor * prev - y;
        if !err.is_finite() {
            return Err(Error::AdaptationFailure {
                initial,
                last: f64::INFINITY,
            });
        }
        eq.update(x, &past, k, err, config.tracking_step_size);
        past[k] = level;
        soft.push(y);
        dec.push(d);
    }
    Ok(Equalized {
        soft,
        decisions: dec,
        engine: eq,
        training_mse: last_mse,
    })
}

/// Feed-forward-only equalization (`ffe` or `ffe+mlse1`).
pub fn ffe_equalize(
    x: &[f64],
    config: &EqualizerConfig,
    reference: &SymbolSequence,
) -> Result<Equalized> {
    if config.kind.uses_feedback() {
        return Err(Error::invalid(
            "kind",
            "use dfe_equalize for decision-feedback kinds",
        ));
    }
    run(x, config, reference)
}

/// Decision-feedback equalization (`dfe` or `dfe+mlse1`).
pub fn dfe_equalize(
    x: &[f64],
    config: &EqualizerConfig,
    reference: &SymbolSequence,
) -> Result<Equalized> {
    if !config.kind.uses_feedback() {
        return Err(Error::invalid(
            "kind",
            "use ffe_equalize for feed-forward kinds",
        ));
    }
    run(x, config, reference)
}

/// Equalize with whichever structure `config.kind` names.
pub fn equalize(
    x: &[f64],
    config: &EqualizerConfig,
    reference: &SymbolSequence,
) -> Result<Equalized> {
    run(x, config, reference)
}

/// Least-squares (block Wiener) equalizer over symbols `range`, trained on
/// the true symbols: returns `(ff, fb)` with `fb` applied to lags
/// `1..=fb_taps`. Used as a deterministic cross-check of the LMS result.
pub fn wiener_equalizer(
    x: &[f64],
    reference: &SymbolSequence,
    ff_taps: usize,
    fb_taps: usize,
    range: std::ops::Range<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = reference.len();
    if x.len() != 2 * n {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: 2 * n,
        });
    }
    let truth = reference.levels();
    let dim = ff_taps + fb_taps;
    let center = ff_taps / 2;
    let mut r = DMatrix::<f64>::zeros(dim, dim);
    let mut p = DVector::<f64>::zeros(dim);
    let mut row = vec![0.0; dim];
    for k in range {
        let base = 2 * k + x.len() + center;
        for i in 0..ff_taps {
            row[i] = x[(base - i) % x.len()];
        }
        for j in 0..fb_taps {
            row[ff_taps + j] = -truth[(k + n - 1 - j) % n];
        }
        for a in 0..dim {
            p[a] += row[a] * truth[k];
            for b in 0..dim {
                r[(a, b)] += row[a] * row[b];
            }
        }
    }
    // Tiny ridge keeps the system solvable for noiseless band-limited input.
    let trace = r.trace() / dim as f64;
    for a in 0..dim {
        r[(a, a)] += 1e-12 * trace;
    }
    let sol = r
        .cholesky()
        .ok_or_else(|| Error::invalid("wiener", "normal equations are not positive definite"))?
        .solve(&p);
    Ok((
        sol.as_slice()[..ff_taps].to_vec(),
        sol.as_slice()[ff_taps..].to_vec(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rx::sync::reference_waveform;
    use crate::tx::{generate_bits, map_symbols};

    fn reference(n: usize, fmt: ModulationFormat, seed: u64) -> SymbolSequence {
        let (bb, bs) = fmt.block();
        map_symbols(&generate_bits(seed, n / bs * bb).unwrap(), fmt, 100.0).unwrap()
    }

    /// Symbol-spaced channel applied to the 2 sps band-limited reference:
    /// x(t) = sum_j h_j s(t - jT).
    fn isi(refw: &[f64], taps: &[f64]) -> Vec<f64> {
        let n = refw.len();
        (0..n)
            .map(|i| {
                taps.iter()
                    .enumerate()
                    .map(|(j, h)| h * refw[(i + n - 2 * j) % n])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn flat_channel_converges() {
        let s = reference(16384, ModulationFormat::Pam4, 1);
        let x = reference_waveform(&s);
        let cfg = EqualizerConfig::new(EqualizerKind::Ffe);
        let out = ffe_equalize(&x, &cfg, &s).unwrap();
        assert!(out.training_mse <= 1e-4);
        for (y, l) in out.soft.iter().zip(s.levels()) {
            assert!((y - l).abs() < 1e-2);
        }
    }

    #[test]
    fn three_tap_channel_matches_least_squares() {
        let s = reference(16384, ModulationFormat::Pam4, 2);
        let x = isi(&reference_waveform(&s), &[1.0, 0.45, 0.2]);
        let mut cfg = EqualizerConfig::new(EqualizerKind::Ffe);
        cfg.training_passes = 8;
        let out = ffe_equalize(&x, &cfg, &s).unwrap();
        let levels = s.levels();
        let guard = 64;
        let isi_power = |soft: &[f64]| {
            let e: f64 = (guard..s.len() - guard)
                .map(|k| (soft[k] - levels[k]).powi(2))
                .sum();
            let p: f64 = (guard..s.len() - guard).map(|k| levels[k].powi(2)).sum();
            10.0 * (e / p).log10()
        };
        let lms_db = isi_power(&out.soft);

        let (ff, _) = wiener_equalizer(&x, &s, 51, 0, 0..s.len()).unwrap();
        let mut ls = AdaptiveEqualizer::new(&cfg, ModulationFormat::Pam4);
        ls.ff = ff;
        let (ls_soft, _) = ls.run_fixed(&x, &s, None);
        let ls_db = isi_power(&ls_soft);
        assert!(ls_db <= -30.0, "least squares residual {ls_db} dB");
        assert!(lms_db <= -30.0, "LMS residual {lms_db} dB (LS {ls_db} dB)");
    }

    #[test]
    fn large_step_diverges() {
        let s = reference(8192, ModulationFormat::Pam4, 3);
        let x = isi(&reference_waveform(&s), &[1.0, 0.5]);
        let mut cfg = EqualizerConfig::new(EqualizerKind::Ffe);
        cfg.step_size = 0.5;
        cfg.training_symbols = 4096;
        assert!(matches!(
            ffe_equalize(&x, &cfg, &s),
            Err(Error::AdaptationFailure { .. })
        ));
    }

    #[test]
    fn dfe_cancels_postcursor() {
        let s = reference(16384, ModulationFormat::Pam4, 4);
        let x = isi(&reference_waveform(&s), &[1.0, 0.5]);
        let mut cfg = EqualizerConfig::new(EqualizerKind::Dfe);
        cfg.ff_taps = 1;
        cfg.fb_taps = 1;
        let out = dfe_equalize(&x, &cfg, &s).unwrap();
        assert_eq!(out.decisions, s.indices());
        assert!((out.engine.fb[0] - 0.5).abs() < 0.02, "{:?}", out.engine.fb);
    }

    #[test]
    fn dfe_on_flat_channel_matches_ffe() {
        let s = reference(16384, ModulationFormat::Pam4, 5);
        let x = reference_waveform(&s);
        let f = ffe_equalize(&x, &EqualizerConfig::new(EqualizerKind::Ffe), &s).unwrap();
        let d = dfe_equalize(&x, &EqualizerConfig::new(EqualizerKind::Dfe), &s).unwrap();
        for (a, b) in f.soft.iter().zip(&d.soft) {
            assert!((a - b).abs() < 1e-2);
        }
        assert!(d.engine.fb.iter().all(|b| b.abs() < 1e-2));
    }

    #[test]
    fn partial_response_target_tracks_postcursor() {
        let s = reference(16384, ModulationFormat::Pam4, 6);
        let x = isi(&reference_waveform(&s), &[1.0, 0.6]);
        let mut cfg = EqualizerConfig::new(EqualizerKind::FfeMlse1);
        cfg.ff_taps = 1;
        let out = ffe_equalize(&x, &cfg, &s).unwrap();
        assert!(
            (out.engine.target_postcursor - 0.6).abs() < 0.05,
            "{}",
            out.engine.target_postcursor
        );
    }

    #[test]
    fn wrong_kind_rejected() {
        let s = reference(4096, ModulationFormat::Pam4, 7);
        let x = reference_waveform(&s);
        let mut cfg = EqualizerConfig::new(EqualizerKind::Ffe);
        cfg.training_symbols = 1024;
        assert!(dfe_equalize(&x, &cfg, &s).is_err());
        cfg.kind = EqualizerKind::Dfe;
        cfg.fb_taps = 0;
        assert!(dfe_equalize(&x, &cfg, &s).is_err());
        cfg.fb_taps = 3;
        cfg.training_symbols = 5000;
        assert!(dfe_equalize(&x, &cfg, &s).is_err());
        cfg.training_symbols = 1024;
        cfg.ff_taps = 4;
        assert!(dfe_equalize(&x, &cfg, &s).is_err());
    }
}

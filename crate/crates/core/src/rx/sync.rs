use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{fft, ifft, mean, resample_real, rms, rotate, Origin, Samples, Waveform};
use crate::tx::SymbolSequence;

/// Lower bound on the correlation peak-to-RMS ratio for a valid lock.
pub const SYNC_MIN_RATIO: f64 = 5.0;

/// Threshold for `lags` candidate delays: at least [`SYNC_MIN_RATIO`], and
/// never below the expected maximum of `lags` Gaussian correlation values
/// plus a margin, so long noise-only captures still fail.
pub fn sync_threshold(lags: usize) -> f64 {
    let extreme = (2.0 * (2.0 * lags.max(1) as f64).ln()).sqrt();
    SYNC_MIN_RATIO.max(extreme + 1.5)
}

#[derive(Debug, Clone)]
pub struct SyncResult {
    /// `aligned[2k]` is the center of symbol `k`; DC removed, RMS matched to
    /// the DC-free reference.
    pub aligned: Waveform,
    /// Delay of the received waveform relative to the reference, samples.
    pub delay: usize,
    pub inverted: bool,
    pub peak_ratio: f64,
}

/// Reference symbols interpolated to 2 samples per symbol.
pub fn reference_waveform(reference: &SymbolSequence) -> Vec<f64> {
    resample_real(&reference.levels(), 2 * reference.len())
}

/// Circular cross-correlation alignment at 2 samples per symbol, with
/// polarity correction and amplitude normalization.
pub fn synchronize(rx: &Waveform, reference: &SymbolSequence) -> Result<SyncResult> {
    let x = rx.as_real()?;
    let refw = reference_waveform(reference);
    if x.len() < refw.len() {
        return Err(Error::invalid(
            "rx",
            format!(
                "{} samples cannot cover {} reference samples",
                x.len(),
                refw.len()
            ),
        ));
    }
    let n = x.len();
    let mu = mean(x);
    let mut a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v - mu, 0.0)).collect();
    let mut b: Vec<Complex64> = refw.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(n, Complex64::new(0.0, 0.0));
    fft(&mut a);
    fft(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q.conj();
    }
    ifft(&mut a);
    let corr: Vec<f64> = a.iter().map(|z| z.re).collect();
    let (delay, peak) = corr
        .iter()
        .enumerate()
        .max_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
        .map(|(i, &v)| (i, v))
        .unwrap();
    let ratio = peak.abs() / rms(&corr);
    let threshold = sync_threshold(n);
    if !(ratio >= threshold) {
        return Err(Error::SyncFailure { ratio, threshold });
    }
    let inverted = peak < 0.0;
    let centered: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let mut aligned = rotate(&centered, delay as isize);
    aligned.truncate(refw.len());
    let ref_mean = mean(&refw);
    let ref_rms = refw.iter().map(|v| (v - ref_mean).powi(2)).sum::<f64>() / refw.len() as f64;
    let scale = ref_rms.sqrt() / rms(&aligned) * if inverted { -1.0 } else { 1.0 };
    for v in aligned.iter_mut() {
        *v *= scale;
    }
    let aligned = Waveform::new(Samples::Real(aligned), rx.sample_rate(), Origin::Rx)?;
    Ok(SyncResult {
        aligned,
        delay,
        inverted,
        peak_ratio: ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::ModulationFormat;
    use crate::tx::{generate_bits, map_symbols};
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn centered(x: &[f64]) -> Vec<f64> {
        let m = mean(x);
        x.iter().map(|v| v - m).collect()
    }

    fn reference(n: usize) -> SymbolSequence {
        map_symbols(
            &generate_bits(5, 2 * n).unwrap(),
            ModulationFormat::Pam4,
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn recovers_integer_delay() {
        let s = reference(4096);
        let tx = centered(&reference_waveform(&s));
        let rx = rotate(&tx, -37);
        let w = Waveform::real(
            rx.iter().map(|v| 0.3 * v + 2.0).collect(),
            200.0,
            Origin::Rx,
        )
        .unwrap();
        let r = synchronize(&w, &s).unwrap();
        assert_eq!(r.delay, 37);
        assert!(!r.inverted);
        for (a, b) in r.aligned.as_real().unwrap().iter().zip(&tx) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn detects_polarity_flip() {
        let s = reference(4096);
        let tx = centered(&reference_waveform(&s));
        let rx: Vec<f64> = rotate(&tx, -10).iter().map(|v| -v).collect();
        let w = Waveform::real(rx, 200.0, Origin::Rx).unwrap();
        let r = synchronize(&w, &s).unwrap();
        assert_eq!(r.delay, 10);
        assert!(r.inverted);
        for (a, b) in r.aligned.as_real().unwrap().iter().zip(&tx) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn noise_only_fails() {
        let s = reference(1 << 14);
        let mut failures = 0;
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..2 * s.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let w = Waveform::real(x, 200.0, Origin::Rx).unwrap();
            if matches!(synchronize(&w, &s), Err(Error::SyncFailure { .. })) {
                failures += 1;
            }
        }
        assert_eq!(failures, 20);
    }
}

//! Sampled waveforms and the FFT machinery shared by every DSP stage.
//!
//! Every simulated block is treated as one period of a periodic signal: all
//! filtering is circular, and resampling is exact band-limited (spectral
//! zero-padding or truncation). This keeps symbol timing exact across rate
//! changes and removes edge transients from the BER window.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Tx,
    Channel,
    Rx,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn all_finite(&self) -> bool {
        match self {
            Samples::Real(v) => v.iter().all(|x| x.is_finite()),
            Samples::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }
}

/// Uniformly sampled real (electrical) or complex (optical field envelope)
/// signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Samples,
    sample_rate_gsa: f64,
    origin: Origin,
}

impl Waveform {
    pub fn new(samples: Samples, sample_rate_gsa: f64, origin: Origin) -> Result<Self> {
        if !(sample_rate_gsa > 0.0) || !sample_rate_gsa.is_finite() {
            return Err(Error::invalid(
                "sample_rate",
                format!("must be > 0, got {sample_rate_gsa}"),
            ));
        }
        if !samples.all_finite() {
            return Err(Error::invalid(
                "samples",
                "waveform contains NaN or infinite values",
            ));
        }
        Ok(Waveform {
            samples,
            sample_rate_gsa,
            origin,
        })
    }

    pub fn real(samples: Vec<f64>, sample_rate_gsa: f64, origin: Origin) -> Result<Self> {
        Self::new(Samples::Real(samples), sample_rate_gsa, origin)
    }

    pub fn complex(samples: Vec<Complex64>, sample_rate_gsa: f64, origin: Origin) -> Result<Self> {
        Self::new(Samples::Complex(samples), sample_rate_gsa, origin)
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate_gsa
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.samples, Samples::Complex(_))
    }

    pub fn as_real(&self) -> Result<&[f64]> {
        match &self.samples {
            Samples::Real(v) => Ok(v),
            Samples::Complex(_) => Err(Error::invalid("waveform", "expected a real waveform")),
        }
    }

    pub fn as_complex(&self) -> Result<&[Complex64]> {
        match &self.samples {
            Samples::Complex(v) => Ok(v),
            Samples::Real(_) => Err(Error::invalid(
                "waveform",
                "expected a complex field waveform",
            )),
        }
    }

    pub fn into_real(self) -> Result<Vec<f64>> {
        match self.samples {
            Samples::Real(v) => Ok(v),
            Samples::Complex(_) => Err(Error::invalid("waveform", "expected a real waveform")),
        }
    }

    /// Samples as complex values regardless of representation.
    pub fn to_complex(&self) -> Vec<Complex64> {
        match &self.samples {
            Samples::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Samples::Complex(v) => v.clone(),
        }
    }

    /// Same metadata, new samples of the same kind or another.
    pub fn with_samples(&self, samples: Samples) -> Result<Self> {
        Self::new(samples, self.sample_rate_gsa, self.origin)
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    /// Mean of |x|^2.
    pub fn mean_power(&self) -> f64 {
        let n = self.len().max(1) as f64;
        match &self.samples {
            Samples::Real(v) => v.iter().map(|x| x * x).sum::<f64>() / n,
            Samples::Complex(v) => v.iter().map(|z| z.norm_sqr()).sum::<f64>() / n,
        }
    }

    /// Duration in ns.
    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate_gsa
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized forward DFT.
pub fn fft(data: &mut [Complex64]) {
    if data.len() > 1 {
        plan(data.len(), false).process(data);
    }
}

/// Inverse DFT including the 1/N factor.
pub fn ifft(data: &mut [Complex64]) {
    let n = data.len();
    if n > 1 {
        plan(n, true).process(data);
    }
    let scale = 1.0 / n.max(1) as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

pub fn fft_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    buf
}

/// Signed frequency of DFT bin `k` for an `n`-point transform at `fs`.
pub fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k <= n_f / 2.0 {
        k * fs / n_f
    } else {
        (k - n_f) * fs / n_f
    }
}

/// Band-limited periodic resampling of one spectrum onto `m` bins.
///
/// Input spectrum `x` is unnormalized (as produced by [`fft`]); the returned
/// spectrum is scaled so that an unnormalized inverse over `m` points divided
/// by `m` reproduces the interpolated time signal.
fn respectrum(x: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = x.len();
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let scale = m as f64 / n as f64;
    let keep = n.min(m);
    // Bins strictly below the smaller Nyquist frequency.
    let pos = (keep - 1) / 2;
    for k in 0..=pos {
        y[k] = x[k] * scale;
    }
    for k in 1..=pos {
        y[m - k] = x[n - k] * scale;
    }
    if keep % 2 == 0 {
        let half = keep / 2;
        if m > n {
            // Split the input Nyquist bin across +/- half.
            let v = x[half] * (0.5 * scale);
            y[half] += v;
            y[m - half] += v;
        } else if m < n {
            y[half] = (x[half] + x[n - half]) * scale;
        } else {
            y[half] = x[half] * scale;
        }
    }
    y
}

/// Resample a periodic real sequence to `m` samples over the same period.
pub fn resample_real(x: &[f64], m: usize) -> Vec<f64> {
    if x.len() == m {
        return x.to_vec();
    }
    let spec = fft_real(x);
    let mut y = respectrum(&spec, m);
    ifft(&mut y);
    y.into_iter().map(|z| z.re).collect()
}

/// Resample a periodic complex sequence to `m` samples over the same period.
pub fn resample_complex(x: &[Complex64], m: usize) -> Vec<Complex64> {
    if x.len() == m {
        return x.to_vec();
    }
    let mut spec = x.to_vec();
    fft(&mut spec);
    let mut y = respectrum(&spec, m);
    ifft(&mut y);
    y
}

/// Resample a waveform to `target_rate` over the same period, rounding the
/// sample count to an integer. The returned waveform carries the exact rate
/// implied by the rounded count.
pub fn resample_waveform(w: &Waveform, target_rate_gsa: f64) -> Result<Waveform> {
    if !(target_rate_gsa > 0.0) {
        return Err(Error::invalid("target_rate", "must be > 0"));
    }
    let m = (w.len() as f64 * target_rate_gsa / w.sample_rate()).round() as usize;
    if m < 1 {
        return Err(Error::invalid(
            "target_rate",
            "resampled waveform would be empty",
        ));
    }
    let rate = m as f64 / w.duration();
    let samples = match w.samples() {
        Samples::Real(v) => Samples::Real(resample_real(v, m)),
        Samples::Complex(v) => Samples::Complex(resample_complex(v, m)),
    };
    Waveform::new(samples, rate, w.origin())
}

/// Multiply the spectrum of `x` by `h(f)` (signed GHz) and return to time.
pub fn filter_complex(x: &[Complex64], fs: f64, h: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let n = x.len();
    let mut spec = x.to_vec();
    fft(&mut spec);
    for (k, z) in spec.iter_mut().enumerate() {
        *z *= h(bin_frequency(k, n, fs));
    }
    ifft(&mut spec);
    spec
}

/// Real filtering; `h` is evaluated for f >= 0 only and mirrored with
/// conjugate symmetry, so the output stays real.
pub fn filter_real(x: &[f64], fs: f64, h: impl Fn(f64) -> Complex64) -> Vec<f64> {
    let n = x.len();
    let mut spec = fft_real(x);
    for (k, z) in spec.iter_mut().enumerate() {
        let f = bin_frequency(k, n, fs);
        *z *= if f >= 0.0 { h(f) } else { h(-f).conj() };
    }
    // Taking the real part below also drops the imaginary part of the
    // Nyquist bin, which has no conjugate partner.
    ifft(&mut spec);
    spec.into_iter().map(|z| z.re).collect()
}

/// Circular shift: `out[i] = x[(i + shift) mod n]`.
pub fn rotate<T: Copy>(x: &[T], shift: isize) -> Vec<T> {
    let n = x.len() as isize;
    if n == 0 {
        return Vec::new();
    }
    (0..n)
        .map(|i| x[((i + shift).rem_euclid(n)) as usize])
        .collect()
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_non_finite_and_bad_rate() {
        assert!(Waveform::real(vec![1.0, f64::NAN], 1.0, Origin::Tx).is_err());
        assert!(Waveform::real(vec![1.0], 0.0, Origin::Tx).is_err());
        assert!(Waveform::real(vec![1.0], 1.0, Origin::Tx).is_ok());
    }

    #[test]
    fn resample_tone_even_and_odd_lengths() {
        for (n, m) in [(64, 160), (63, 128), (160, 64), (128, 90), (90, 128)] {
            let x: Vec<f64> = (0..n)
                .map(|i| (2.0 * PI * 3.0 * i as f64 / n as f64).cos())
                .collect();
            let y = resample_real(&x, m);
            for (i, v) in y.iter().enumerate() {
                let want = (2.0 * PI * 3.0 * i as f64 / m as f64).cos();
                assert!((v - want).abs() < 1e-9, "{n}->{m} at {i}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn upsample_keeps_original_samples() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let y = resample_real(&x, 37 * 4);
        for (i, v) in x.iter().enumerate() {
            assert!((y[4 * i] - v).abs() < 1e-9);
        }
    }

    #[test]
    fn rotate_is_circular() {
        assert_eq!(rotate(&[1, 2, 3, 4], 1), vec![2, 3, 4, 1]);
        assert_eq!(rotate(&[1, 2, 3, 4], -1), vec![4, 1, 2, 3]);
    }

    #[test]
    fn bin_frequencies() {
        assert_eq!(bin_frequency(0, 8, 8.0), 0.0);
        assert_eq!(bin_frequency(4, 8, 8.0), 4.0);
        assert_eq!(bin_frequency(5, 8, 8.0), -3.0);
    }
}

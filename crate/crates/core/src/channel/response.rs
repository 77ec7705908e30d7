//! Tabulated frequency responses and the Bessel-Thomson analog prototype.
//!
//! A [`FrequencyResponse`] stores magnitude in dB and unwrapped phase on a
//! grid that starts at DC. Between grid points magnitude is interpolated
//! linearly in dB and phase linearly; beyond the last point both are held.
//! Negative frequencies are the complex conjugate (real impulse response).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::{filter_complex, filter_real, Samples, Waveform};

/// Magnitudes below this are clamped so a true zero still has a finite dB.
pub const MIN_MAGNITUDE_DB: f64 = -400.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyResponse {
    grid_ghz: Vec<f64>,
    magnitude_db: Vec<f64>,
    phase_rad: Vec<f64>,
}

impl FrequencyResponse {
    /// Builds a response from magnitude (dB) and phase (radians, already
    /// unwrapped) on a grid starting at 0 GHz.
    pub fn from_db_phase(
        grid_ghz: Vec<f64>,
        magnitude_db: Vec<f64>,
        phase_rad: Vec<f64>,
    ) -> Result<Self> {
        if grid_ghz.is_empty()
            || grid_ghz.len() != magnitude_db.len()
            || grid_ghz.len() != phase_rad.len()
        {
            return Err(Error::invalid(
                "response",
                "grid, magnitude and phase must be non-empty and equal length",
            ));
        }
        if grid_ghz[0] != 0.0 {
            return Err(Error::invalid("response", "grid must start at 0 GHz"));
        }
        if grid_ghz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "response",
                "grid must be strictly increasing",
            ));
        }
        if grid_ghz.iter().chain(&phase_rad).any(|v| !v.is_finite())
            || magnitude_db.iter().any(|v| v.is_nan())
        {
            return Err(Error::invalid(
                "response",
                "grid, magnitude and phase must be finite",
            ));
        }
        let magnitude_db = magnitude_db
            .into_iter()
            .map(|m| m.max(MIN_MAGNITUDE_DB))
            .collect();
        Ok(FrequencyResponse {
            grid_ghz,
            magnitude_db,
            phase_rad,
        })
    }

    /// Builds a response from complex gains, unwrapping their phase along
    /// the grid.
    pub fn from_complex(grid_ghz: Vec<f64>, gain: &[Complex64]) -> Result<Self> {
        if gain.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::invalid("response", "gain must be finite"));
        }
        let mag = gain.iter().map(|g| 20.0 * g.norm().log10()).collect();
        let phase = unwrap(gain.iter().map(|g| g.arg()));
        Self::from_db_phase(grid_ghz, mag, phase)
    }

    pub fn flat() -> Self {
        FrequencyResponse {
            grid_ghz: vec![0.0],
            magnitude_db: vec![0.0],
            phase_rad: vec![0.0],
        }
    }

    /// Pure delay `exp(-j 2 pi f tau)` valid up to `f_max_ghz`.
    pub fn delay(tau_ns: f64, f_max_ghz: f64) -> Self {
        FrequencyResponse {
            grid_ghz: vec![0.0, f_max_ghz],
            magnitude_db: vec![0.0, 0.0],
            phase_rad: vec![0.0, -2.0 * std::f64::consts::PI * f_max_ghz * tau_ns],
        }
    }

    /// Samples `gain(f)` on `points` evenly spaced frequencies over
    /// `[0, f_max_ghz]`.
    pub fn sampled(f_max_ghz: f64, points: usize, gain: impl Fn(f64) -> Complex64) -> Result<Self> {
        let points = points.max(2);
        let grid: Vec<f64> = (0..points)
            .map(|i| f_max_ghz * i as f64 / (points - 1) as f64)
            .collect();
        let g: Vec<Complex64> = grid.iter().map(|&f| gain(f)).collect();
        Self::from_complex(grid, &g)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid_ghz
    }

    pub fn max_frequency(&self) -> f64 {
        *self.grid_ghz.last().unwrap()
    }

    /// Magnitude (dB) and phase (rad) at `f_ghz >= 0`.
    pub fn db_phase_at(&self, f_ghz: f64) -> (f64, f64) {
        let f = f_ghz.abs();
        let g = &self.grid_ghz;
        let last = g.len() - 1;
        if f >= g[last] {
            return (self.magnitude_db[last], self.phase_rad[last]);
        }
        let hi = g.partition_point(|&x| x <= f);
        let lo = hi - 1;
        let t = (f - g[lo]) / (g[hi] - g[lo]);
        let m = self.magnitude_db[lo] + t * (self.magnitude_db[hi] - self.magnitude_db[lo]);
        let p = self.phase_rad[lo] + t * (self.phase_rad[hi] - self.phase_rad[lo]);
        (m, p)
    }

    pub fn magnitude_db_at(&self, f_ghz: f64) -> f64 {
        self.db_phase_at(f_ghz).0
    }

    /// Complex gain at signed frequency `f_ghz`.
    pub fn gain_at(&self, f_ghz: f64) -> Complex64 {
        let (m, p) = self.db_phase_at(f_ghz);
        let g = Complex64::from_polar(10f64.powf(m / 20.0), p);
        if f_ghz < 0.0 {
            g.conj()
        } else {
            g
        }
    }

    /// Product of several responses, sampled on `points` frequencies up to
    /// `f_max_ghz`.
    pub fn cascade(
        responses: &[&FrequencyResponse],
        f_max_ghz: f64,
        points: usize,
    ) -> Result<Self> {
        let points = points.max(2);
        let grid: Vec<f64> = (0..points)
            .map(|i| f_max_ghz * i as f64 / (points - 1) as f64)
            .collect();
        let mut mag = vec![0.0; points];
        let mut phase = vec![0.0; points];
        for r in responses {
            for (i, &f) in grid.iter().enumerate() {
                let (m, p) = r.db_phase_at(f);
                mag[i] += m;
                phase[i] += p;
            }
        }
        Self::from_db_phase(grid, mag, phase)
    }

    /// Group delay in ns at `f_ghz`, by central difference of the phase.
    pub fn group_delay_at(&self, f_ghz: f64, df_ghz: f64) -> f64 {
        let lo = (f_ghz - df_ghz).max(0.0);
        let hi = f_ghz + df_ghz;
        let (_, p_lo) = self.db_phase_at(lo);
        let (_, p_hi) = self.db_phase_at(hi);
        -(p_hi - p_lo) / (2.0 * std::f64::consts::PI * (hi - lo))
    }
}

fn unwrap(phases: impl Iterator<Item = f64>) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for p in phases {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
            } else if d < -PI {
                offset += 2.0 * PI * ((-d + PI) / (2.0 * PI)).floor();
            }
        }
        prev = Some(p);
        out.push(p + offset);
    }
    out
}

/// Filter a waveform through `r` by FFT multiplication (circular).
pub fn apply_response(w: &Waveform, r: &FrequencyResponse) -> Result<Waveform> {
    if w.len() < 2 {
        return Err(Error::invalid(
            "waveform",
            "need at least 2 samples to filter",
        ));
    }
    let fs = w.sample_rate();
    let samples = match w.samples() {
        Samples::Real(x) => Samples::Real(filter_real(x, fs, |f| r.gain_at(f))),
        Samples::Complex(x) => Samples::Complex(filter_complex(x, fs, |f| r.gain_at(f))),
    };
    w.with_samples(samples)
}

/// Analog Bessel-Thomson low-pass, normalized so that the -3 dB point falls
/// at `cutoff_ghz`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselThomson {
    order: usize,
    cutoff_ghz: f64,
    /// Reverse Bessel polynomial coefficients, ascending powers of s.
    coeffs: Vec<f64>,
    /// -3 dB angular frequency of the unit-delay prototype.
    omega_3db: f64,
}

pub const MAX_BESSEL_ORDER: usize = 8;

impl BesselThomson {
    pub fn new(order: usize, cutoff_ghz: f64) -> Result<Self> {
        if !(1..=MAX_BESSEL_ORDER).contains(&order) {
            return Err(Error::invalid(
                "order",
                format!("Bessel order must be 1..={MAX_BESSEL_ORDER}, got {order}"),
            ));
        }
        if !(cutoff_ghz > 0.0) || !cutoff_ghz.is_finite() {
            return Err(Error::invalid(
                "cutoff",
                format!("must be > 0, got {cutoff_ghz}"),
            ));
        }
        let coeffs = reverse_bessel_coefficients(order);
        let omega_3db = prototype_3db(&coeffs);
        Ok(BesselThomson {
            order,
            cutoff_ghz,
            coeffs,
            omega_3db,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// -3 dB angular frequency of the prototype whose DC group delay is 1 s.
    pub fn prototype_3db_frequency(&self) -> f64 {
        self.omega_3db
    }

    /// DC group delay in ns.
    pub fn dc_group_delay(&self) -> f64 {
        self.omega_3db / (2.0 * std::f64::consts::PI * self.cutoff_ghz)
    }

    /// Complex gain at `f_ghz` (signed).
    pub fn gain(&self, f_ghz: f64) -> Complex64 {
        let w = f_ghz / self.cutoff_ghz * self.omega_3db;
        prototype_gain(&self.coeffs, w)
    }
}

fn reverse_bessel_coefficients(n: usize) -> Vec<f64> {
    // a_k = (2n - k)! / (2^(n-k) k! (n-k)!)
    let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
    (0..=n)
        .map(|k| fact(2 * n - k) / (2f64.powi((n - k) as i32) * fact(k) * fact(n - k)))
        .collect()
}

fn prototype_gain(coeffs: &[f64], w: f64) -> Complex64 {
    let s = Complex64::new(0.0, w);
    let mut den = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        den = den * s + c;
    }
    Complex64::new(coeffs[0], 0.0) / den
}

fn prototype_3db(coeffs: &[f64]) -> f64 {
    let target = 0.5f64;
    let (mut lo, mut hi) = (0.0, 1.0);
    while prototype_gain(coeffs, hi).norm_sqr() > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prototype_gain(coeffs, mid).norm_sqr() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Grid density of designed responses.
pub const DESIGN_GRID_POINTS: usize = 4097;

/// Frequency-sampled Bessel-Thomson response on `[0, sample_rate/2]`.
pub fn design_bessel_thomson(
    order: usize,
    cutoff_ghz: f64,
    sample_rate_gsa: f64,
) -> Result<FrequencyResponse> {
    if !(cutoff_ghz > 0.0 && cutoff_ghz < sample_rate_gsa / 2.0) {
        return Err(Error::invalid(
            "cutoff",
            format!(
                "{cutoff_ghz} GHz must lie in (0, {}) GHz",
                sample_rate_gsa / 2.0
            ),
        ));
    }
    let bt = BesselThomson::new(order, cutoff_ghz)?;
    bessel_response(&bt, sample_rate_gsa / 2.0)
}

/// Tabulates an analog Bessel-Thomson filter up to `f_max_ghz`.
pub fn bessel_response(bt: &BesselThomson, f_max_ghz: f64) -> Result<FrequencyResponse> {
    FrequencyResponse::sampled(f_max_ghz, DESIGN_GRID_POINTS, |f| bt.gain(f))
}

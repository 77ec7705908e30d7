//! Physical channel: electro-optic modulation, fiber dispersion, square-law
//! detection, gain/loss and receiver noise.
//!
//! The optical signal is carried as a complex field envelope in sqrt(mW), so
//! `|E|^2` is instantaneous power in mW. Photocurrent comes out in mA.

mod response;

pub use response::{
    apply_response, bessel_response, design_bessel_thomson, BesselThomson, FrequencyResponse,
    DESIGN_GRID_POINTS, MAX_BESSEL_ORDER, MIN_MAGNITUDE_DB,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{dispersion_parameter, FiberSpec};
use crate::rng::{PrngKind, SimRng};
use crate::signal::{bin_frequency, fft, filter_complex, ifft, Origin, Samples, Waveform};
use crate::units::{db_to_linear_amplitude, db_to_linear_power, SPEED_OF_LIGHT_M_S};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MzmSpec {
    pub v_pi_v: f64,
    /// Bias point as a fraction of V_pi; 0.5 is quadrature.
    pub bias: f64,
    pub insertion_loss_db: f64,
    /// Only chirp-free (push-pull) operation is modeled.
    pub chirp_free: bool,
}

impl Default for MzmSpec {
    fn default() -> Self {
        MzmSpec {
            v_pi_v: 2.0,
            bias: 0.5,
            insertion_loss_db: 0.0,
            chirp_free: true,
        }
    }
}

impl MzmSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_pi_v > 0.0) {
            return Err(Error::invalid(
                "v_pi_v",
                format!("must be > 0, got {}", self.v_pi_v),
            ));
        }
        if !(self.bias > 0.0 && self.bias < 1.0) {
            return Err(Error::invalid(
                "bias",
                format!("must lie in (0, 1), got {}", self.bias),
            ));
        }
        if !(self.insertion_loss_db >= 0.0) {
            return Err(Error::invalid("insertion_loss_db", "must be >= 0"));
        }
        if !self.chirp_free {
            return Err(Error::invalid(
                "chirp_free",
                "chirped modulators are not modeled",
            ));
        }
        Ok(())
    }
}

/// Chirp-free MZM field transfer
/// `E = sqrt(P_in * IL) * cos(pi * (v + bias * V_pi) / (2 V_pi))`.
///
/// Returns a complex field envelope at the drive's sample rate.
pub fn mzm_modulate(drive: &Waveform, spec: &MzmSpec, input_power_mw: f64) -> Result<Waveform> {
    spec.validate()?;
    if !(input_power_mw >= 0.0) {
        return Err(Error::invalid("input_power_mw", "must be >= 0"));
    }
    let v = drive.as_real()?;
    let amp = (input_power_mw * db_to_linear_power(-spec.insertion_loss_db)).sqrt();
    let bias_v = spec.bias * spec.v_pi_v;
    let field = v
        .iter()
        .map(|&x| Complex64::new(amp * (PI * (x + bias_v) / (2.0 * spec.v_pi_v)).cos(), 0.0))
        .collect();
    Waveform::complex(field, drive.sample_rate(), Origin::Channel)
}

/// Dispersion phase `pi * D L * lambda^2 * f^2 / c` in radians, with D*L in
/// ps/nm, lambda in nm and f in GHz.
pub fn dispersion_phase(accumulated_ps_nm: f64, wavelength_nm: f64, f_ghz: f64) -> f64 {
    PI * accumulated_ps_nm * 1e-3 * wavelength_nm * wavelength_nm * f_ghz * f_ghz
        / SPEED_OF_LIGHT_M_S
}

/// All-pass chromatic dispersion on a field envelope.
pub fn propagate_dispersion(
    field: &Waveform,
    fiber: &FiberSpec,
    wavelength_nm: f64,
) -> Result<Waveform> {
    let x = field.as_complex()?;
    let dl = fiber.accumulated_dispersion(wavelength_nm);
    if dl == 0.0 {
        return Ok(field.clone());
    }
    let y = filter_complex(x, field.sample_rate(), |f| {
        Complex64::from_polar(1.0, dispersion_phase(dl, wavelength_nm, f))
    });
    field.with_samples(Samples::Complex(y))
}

/// Power-fading null frequencies (GHz) of a chirp-free double-sideband
/// IM/DD link, `f_k = sqrt(c (1 + 2k) / (2 |D| L lambda^2))`, below `f_max`.
pub fn fading_nulls(
    dispersion_ps_nm_km: f64,
    length_km: f64,
    wavelength_nm: f64,
    f_max_ghz: f64,
) -> Vec<f64> {
    let dl = (dispersion_ps_nm_km * length_km).abs();
    if dl == 0.0 || !(f_max_ghz > 0.0) {
        return Vec::new();
    }
    let base = SPEED_OF_LIGHT_M_S / (2.0 * dl * 1e-3 * wavelength_nm * wavelength_nm);
    (0..)
        .map(|k| (base * (1 + 2 * k) as f64).sqrt())
        .take_while(|&f| f < f_max_ghz)
        .collect()
}

/// Small-signal IM/DD transfer `cos(phi(f))` of the same fading model.
pub fn fading_response(accumulated_ps_nm: f64, wavelength_nm: f64, f_ghz: f64) -> f64 {
    dispersion_phase(accumulated_ps_nm, wavelength_nm, f_ghz).cos()
}

/// Convenience: null list straight from a fiber and a wavelength.
pub fn fiber_fading_nulls(fiber: &FiberSpec, wavelength_nm: f64, f_max_ghz: f64) -> Vec<f64> {
    fading_nulls(
        dispersion_parameter(wavelength_nm, fiber),
        fiber.length_km,
        wavelength_nm,
        f_max_ghz,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdSpec {
    pub responsivity_a_w: f64,
    /// -3 dB bandwidth; `None` (or omitted) for an ideal detector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_ghz: Option<f64>,
    /// Bessel-Thomson order of the detector roll-off.
    pub order: usize,
}

impl Default for PdSpec {
    fn default() -> Self {
        PdSpec {
            responsivity_a_w: 0.6,
            bandwidth_ghz: None,
            order: 2,
        }
    }
}

impl PdSpec {
    pub fn ideal(responsivity_a_w: f64) -> Self {
        PdSpec {
            responsivity_a_w,
            bandwidth_ghz: None,
            order: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity_a_w > 0.0) {
            return Err(Error::invalid("responsivity_a_w", "must be > 0"));
        }
        if let Some(bw) = self.bandwidth_ghz {
            if !(bw > 0.0) {
                return Err(Error::invalid("bandwidth_ghz", "must be > 0"));
            }
            BesselThomson::new(self.order, bw)?;
        }
        Ok(())
    }
}

/// Square-law detection `R |E|^2` followed by the detector bandwidth.
pub fn photodetect(field: &Waveform, pd: &PdSpec) -> Result<Waveform> {
    pd.validate()?;
    let x = field.as_complex()?;
    let current: Vec<f64> = x
        .iter()
        .map(|z| pd.responsivity_a_w * z.norm_sqr())
        .collect();
    let w = Waveform::real(current, field.sample_rate(), Origin::Channel)?;
    match pd.bandwidth_ghz {
        Some(bw) => {
            let bt = BesselThomson::new(pd.order, bw)?;
            let fs = w.sample_rate();
            let y = crate::signal::filter_real(w.as_real()?, fs, |f| bt.gain(f));
            w.with_samples(Samples::Real(y))
        }
        None => Ok(w),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// RMS of the white component in the waveform's own units.
    pub white_sigma: f64,
    pub coloring_peak_ghz: f64,
    /// PSD gain at the peak relative to DC.
    pub coloring_gain_db: f64,
    /// Quality factor of the resonant coloring peak.
    pub coloring_q: f64,
}

impl Default for NoiseSpec {
    /// Receiver/scope noise of the default link: 0.02 mA RMS with a 6 dB
    /// resonant rise at 110 GHz.
    fn default() -> Self {
        NoiseSpec {
            white_sigma: 0.02,
            coloring_peak_ghz: 110.0,
            coloring_gain_db: 6.0,
            coloring_q: 1.0,
        }
    }
}

impl NoiseSpec {
    pub fn white(sigma: f64) -> Self {
        NoiseSpec {
            white_sigma: sigma,
            coloring_peak_ghz: 110.0,
            coloring_gain_db: 0.0,
            coloring_q: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.white_sigma >= 0.0) || !self.white_sigma.is_finite() {
            return Err(Error::invalid("white_sigma", "must be >= 0"));
        }
        if !(self.coloring_peak_ghz > 0.0)
            || !(self.coloring_q > 0.0)
            || !self.coloring_gain_db.is_finite()
        {
            return Err(Error::invalid(
                "coloring",
                "peak frequency and Q must be > 0, gain finite",
            ));
        }
        Ok(())
    }

    /// Relative noise PSD at `f_ghz`: 1 at DC, `coloring_gain` at the peak,
    /// shaped by a second-order band-pass resonance.
    pub fn psd_shape(&self, f_ghz: f64) -> f64 {
        let g = db_to_linear_power(self.coloring_gain_db);
        if g == 1.0 {
            return 1.0;
        }
        let x = (f_ghz / self.coloring_peak_ghz).powi(2);
        let q2 = self.coloring_q * self.coloring_q;
        let bp = x / (q2 * (1.0 - x).powi(2) + x);
        1.0 + (g - 1.0) * bp
    }

    /// Mean of the PSD shape over the DFT bins of an `n`-point block at `fs`.
    pub fn power_gain(&self, fs: f64, n: usize) -> f64 {
        (0..n)
            .map(|k| self.psd_shape(bin_frequency(k, n, fs)))
            .sum::<f64>()
            / n as f64
    }
}

/// Adds seeded, optionally colored Gaussian noise. Complex waveforms get
/// circular noise with the same total power.
pub fn add_noise(w: &Waveform, spec: &NoiseSpec, seed: u64) -> Result<Waveform> {
    spec.validate()?;
    if spec.white_sigma == 0.0 {
        return Ok(w.clone());
    }
    let n = w.len();
    let fs = w.sample_rate();
    let mut rng = SimRng::new(PrngKind::default(), seed);
    let complex = w.is_complex();
    let sigma = if complex {
        spec.white_sigma / 2f64.sqrt()
    } else {
        spec.white_sigma
    };
    let mut noise: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = if complex {
                StandardNormal.sample(&mut rng)
            } else {
                0.0
            };
            Complex64::new(re * sigma, im * sigma)
        })
        .collect();
    if spec.coloring_gain_db != 0.0 {
        fft(&mut noise);
        for (k, z) in noise.iter_mut().enumerate() {
            *z *= spec.psd_shape(bin_frequency(k, n, fs)).sqrt();
        }
        ifft(&mut noise);
    }
    let samples = match w.samples() {
        Samples::Real(x) => Samples::Real(x.iter().zip(&noise).map(|(a, b)| a + b.re).collect()),
        Samples::Complex(x) => Samples::Complex(x.iter().zip(&noise).map(|(a, b)| a + b).collect()),
    };
    w.with_samples(samples)
}

/// Scales amplitude by `10^(gain_db/20)`, i.e. power by `gain_db`.
pub fn apply_gain(w: &Waveform, gain_db: f64) -> Result<Waveform> {
    if !gain_db.is_finite() {
        return Err(Error::invalid("gain_db", "must be finite"));
    }
    let g = db_to_linear_amplitude(gain_db);
    let samples = match w.samples() {
        Samples::Real(x) => Samples::Real(x.iter().map(|v| v * g).collect()),
        Samples::Complex(x) => Samples::Complex(x.iter().map(|v| v * g).collect()),
    };
    w.with_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{fft_real, mean};
    use crate::units::{dbm_to_mw, mw_to_dbm, power_to_db};

    fn field(v: Vec<Complex64>, fs: f64) -> Waveform {
        Waveform::complex(v, fs, Origin::Channel).unwrap()
    }

    #[test]
    fn mzm_quadrature_half_power() {
        let drive = Waveform::real(vec![0.0; 8], 10.0, Origin::Tx).unwrap();
        let e = mzm_modulate(&drive, &MzmSpec::default(), 1.0).unwrap();
        for z in e.as_complex().unwrap() {
            assert!((z.norm_sqr() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn mzm_power_follows_cos_squared() {
        let spec = MzmSpec::default();
        let vs: Vec<f64> = (-40..=40).map(|i| i as f64 * spec.v_pi_v / 40.0).collect();
        let drive = Waveform::real(vs.clone(), 10.0, Origin::Tx).unwrap();
        let e = mzm_modulate(&drive, &spec, 1.0).unwrap();
        for (v, z) in vs.iter().zip(e.as_complex().unwrap()) {
            let want = (PI * (v + 0.5 * spec.v_pi_v) / (2.0 * spec.v_pi_v))
                .cos()
                .powi(2);
            let p = z.norm_sqr();
            assert!((p - want).abs() < 1e-12 && (0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn mzm_small_signal_is_linear() {
        let spec = MzmSpec::default();
        let slope = -PI / (2.0 * spec.v_pi_v); // dP/dv at quadrature for P_in = 1
        for i in 1..=50 {
            let v = 0.05 * spec.v_pi_v * i as f64 / 50.0;
            for s in [v, -v] {
                let drive = Waveform::real(vec![s], 1.0, Origin::Tx).unwrap();
                let p = mzm_modulate(&drive, &spec, 1.0)
                    .unwrap()
                    .as_complex()
                    .unwrap()[0]
                    .norm_sqr();
                let lin = 0.5 + slope * s;
                assert!(((p - 0.5) - (lin - 0.5)).abs() <= 0.01 * (lin - 0.5).abs());
            }
        }
    }

    #[test]
    fn dispersion_is_all_pass() {
        let n = 4096;
        let x: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(((i * 31) % 17) as f64, ((i * 7) % 5) as f64))
            .collect();
        let w = field(x.clone(), 450.0);
        let fiber = FiberSpec::default().with_length(5.0);
        let y = propagate_dispersion(&w, &fiber, 1295.56).unwrap();
        let mut a = x.clone();
        let mut b = y.as_complex().unwrap().to_vec();
        fft(&mut a);
        fft(&mut b);
        for (p, q) in a.iter().zip(&b) {
            assert!((p.norm() - q.norm()).abs() <= 1e-9 * p.norm().max(1.0));
        }
        let ea: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let eb: f64 = y.as_complex().unwrap().iter().map(|z| z.norm_sqr()).sum();
        assert!((ea - eb).abs() <= 1e-9 * ea);
    }

    #[test]
    fn dispersion_identity_cases() {
        let w = field(
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(2.0, 0.0),
            ],
            100.0,
        );
        let f0 = FiberSpec::default();
        assert_eq!(propagate_dispersion(&w, &f0, 1295.56).unwrap(), w);
        let f5 = FiberSpec::default().with_length(5.0);
        assert_eq!(propagate_dispersion(&w, &f5, 1310.0).unwrap(), w);
    }

    #[test]
    fn fading_null_closed_form() {
        // Hand evaluation: sqrt(c / (2 * 6.76e-3 s/m * (1295.56e-9 m)^2)) = 114.9 GHz
        let c = 299_792_458.0;
        let hand = (c / (2.0 * 6.76e-3 * 1295.56e-9f64.powi(2))).sqrt() / 1e9;
        assert!((hand - 114.9).abs() < 0.1);
        let nulls = fading_nulls(-6.76, 1.0, 1295.56, 150.0);
        assert_eq!(nulls.len(), 1);
        assert!((nulls[0] - hand).abs() < 1e-9);
        assert!((fading_response(6.76, 1295.56, hand)).abs() < 1e-12);
    }

    #[test]
    fn fading_null_scaling() {
        assert!(fading_nulls(0.0, 5.0, 1310.0, 200.0).is_empty());
        assert!(fading_nulls(-1.35, 0.0, 1295.56, 200.0).is_empty());
        let a = fading_nulls(-1.35, 5.0, 1295.56, 1000.0);
        let b = fading_nulls(-1.35, 20.0, 1295.56, 1000.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x / 2.0 - y).abs() < 1e-9);
        }
        assert!(a.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn photodetect_basics() {
        let pd = PdSpec::ideal(0.8);
        let w = field(vec![Complex64::from_polar(2f64.sqrt(), 0.3); 16], 10.0);
        for v in photodetect(&w, &pd).unwrap().as_real().unwrap() {
            assert!((v - 1.6).abs() < 1e-12);
        }
        let z = field(vec![Complex64::new(0.0, 0.0); 16], 10.0);
        assert!(photodetect(&z, &pd)
            .unwrap()
            .as_real()
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn photodetect_ignores_global_phase() {
        let pd = PdSpec::default();
        let x: Vec<Complex64> = (0..256)
            .map(|i| Complex64::new((i as f64 * 0.1).sin(), (i as f64 * 0.03).cos()))
            .collect();
        let rot: Vec<Complex64> = x
            .iter()
            .map(|z| z * Complex64::from_polar(1.0, 1.234))
            .collect();
        let a = photodetect(&field(x, 100.0), &pd).unwrap();
        let b = photodetect(&field(rot, 100.0), &pd).unwrap();
        for (p, q) in a.as_real().unwrap().iter().zip(b.as_real().unwrap()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn two_tone_beat() {
        // E = a e^{j2pi f1 t} + b e^{j2pi f2 t} => |E|^2 = a^2 + b^2 + 2ab cos(2pi (f2-f1) t)
        let n = 1000;
        let fs = 100.0;
        let (f1, f2, a, b) = (3.0, 8.0, 1.0, 0.5);
        let x: Vec<Complex64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                Complex64::from_polar(a, 2.0 * PI * f1 * t)
                    + Complex64::from_polar(b, 2.0 * PI * f2 * t)
            })
            .collect();
        let y = photodetect(&field(x, fs), &PdSpec::ideal(1.0)).unwrap();
        for (i, v) in y.as_real().unwrap().iter().enumerate() {
            let t = i as f64 / fs;
            let want = a * a + b * b + 2.0 * a * b * (2.0 * PI * (f2 - f1) * t).cos();
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_zero_sigma_is_identity() {
        let w = Waveform::real(vec![1.0, 2.0, 3.0], 1.0, Origin::Rx).unwrap();
        assert_eq!(add_noise(&w, &NoiseSpec::white(0.0), 1).unwrap(), w);
    }

    #[test]
    fn noise_power_and_reproducibility() {
        let n = 1 << 18;
        let w = Waveform::real(vec![0.0; n], 450.0, Origin::Rx).unwrap();
        let spec = NoiseSpec {
            white_sigma: 0.1,
            coloring_peak_ghz: 110.0,
            coloring_gain_db: 6.0,
            coloring_q: 1.0,
        };
        let a = add_noise(&w, &spec, 11).unwrap();
        let b = add_noise(&w, &spec, 11).unwrap();
        assert_eq!(a, b);
        let expect = 0.01 * spec.power_gain(450.0, n);
        let got = a.mean_power();
        assert!((got / expect - 1.0).abs() < 0.02, "{got} vs {expect}");

        let c = add_noise(&w, &spec, 12).unwrap();
        let (x, y) = (a.as_real().unwrap(), c.as_real().unwrap());
        let xc: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let norm =
            (x.iter().map(|v| v * v).sum::<f64>() * y.iter().map(|v| v * v).sum::<f64>()).sqrt();
        assert!((xc / norm).abs() < 0.01);
    }

    /// Averaged periodogram over `segments` blocks; returns PSD per bin.
    fn welch(x: &[f64], seg: usize) -> Vec<f64> {
        let mut acc = vec![0.0; seg];
        let count = x.len() / seg;
        for s in 0..count {
            let spec = fft_real(&x[s * seg..(s + 1) * seg]);
            for (a, z) in acc.iter_mut().zip(&spec) {
                *a += z.norm_sqr();
            }
        }
        acc.iter().map(|a| a / count as f64).collect()
    }

    fn band_psd(psd: &[f64], fs: f64, f: f64, half_width: f64) -> f64 {
        let n = psd.len();
        let sel: Vec<f64> = (0..n / 2)
            .filter(|&k| (bin_frequency(k, n, fs) - f).abs() <= half_width)
            .map(|k| psd[k])
            .collect();
        mean(&sel)
    }

    #[test]
    fn flat_noise_psd() {
        let n = 1 << 18;
        let fs = 450.0;
        let w = Waveform::real(vec![0.0; n], fs, Origin::Rx).unwrap();
        let y = add_noise(&w, &NoiseSpec::white(1.0), 3).unwrap();
        let psd = welch(y.as_real().unwrap(), 1024);
        let lo = band_psd(&psd, fs, 5.0, 5.0);
        for f in [50.0, 110.0, 200.0] {
            let r = power_to_db(band_psd(&psd, fs, f, 5.0) / lo);
            assert!(r.abs() < 1.0, "{f} GHz: {r} dB");
        }
    }

    #[test]
    fn colored_noise_psd_peak() {
        let n = 1 << 18;
        let fs = 450.0;
        let w = Waveform::real(vec![0.0; n], fs, Origin::Rx).unwrap();
        let spec = NoiseSpec {
            white_sigma: 1.0,
            coloring_peak_ghz: 110.0,
            coloring_gain_db: 6.0,
            coloring_q: 1.0,
        };
        let y = add_noise(&w, &spec, 5).unwrap();
        let psd = welch(y.as_real().unwrap(), 1024);
        let r = power_to_db(band_psd(&psd, fs, 110.0, 3.0) / band_psd(&psd, fs, 2.0, 2.0));
        assert!((r - 6.0).abs() < 1.0, "{r} dB");
    }

    #[test]
    fn gain_composition() {
        let w = Waveform::real(vec![1.0, -2.0], 1.0, Origin::Rx).unwrap();
        assert_eq!(apply_gain(&w, 0.0).unwrap(), w);
        let q = apply_gain(&apply_gain(&w, -6.02).unwrap(), -6.02).unwrap();
        let ratio = q.mean_power() / w.mean_power();
        assert!((ratio - 1.0 / 16.0).abs() < 1e-3);
    }

    #[test]
    fn dr8_split_budget() {
        // 23 dBm through an ideal 1:8 split
        let e = field(vec![Complex64::new(dbm_to_mw(23.0).sqrt(), 0.0)], 1.0);
        let out = apply_gain(&e, -10.0 * 8f64.log10()).unwrap();
        let dbm = mw_to_dbm(out.mean_power());
        assert!((dbm - 13.97).abs() < 0.01, "{dbm}");
    }
}

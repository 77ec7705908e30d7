//! DFB laser: output power, emission wavelength, and a linear temperature
//! tuning model anchored at two calibration points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// (temperature in deg C, wavelength in nm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub temperature_c: f64,
    pub wavelength_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaserSpec {
    pub power_dbm: f64,
    pub wavelength_nm: f64,
    pub calibration: [CalibrationPoint; 2],
    /// Peak-to-peak output power variation over temperature.
    pub power_ripple_db: f64,
    /// Temperature period of the power ripple.
    pub power_ripple_period_c: f64,
}

/// How far outside the calibration span the linear model may be used.
pub const EXTRAPOLATION_MARGIN_C: f64 = 20.0;

impl Default for LaserSpec {
    /// Uncooled O-band DFB: 1308.3 nm at 30 C, 1315.7 nm at 85 C,
    /// 0.8 dB peak-to-peak power ripple.
    fn default() -> Self {
        LaserSpec {
            power_dbm: 9.0,
            wavelength_nm: 1310.0,
            calibration: [
                CalibrationPoint {
                    temperature_c: 30.0,
                    wavelength_nm: 1308.3,
                },
                CalibrationPoint {
                    temperature_c: 85.0,
                    wavelength_nm: 1315.7,
                },
            ],
            power_ripple_db: 0.8,
            power_ripple_period_c: 27.5,
        }
    }
}

impl LaserSpec {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.calibration;
        if !(b.temperature_c > a.temperature_c && b.wavelength_nm > a.wavelength_nm) {
            return Err(Error::invalid(
                "calibration",
                "wavelengths must increase strictly with temperature",
            ));
        }
        if !(self.wavelength_nm > 1200.0 && self.wavelength_nm < 1400.0) {
            return Err(Error::invalid(
                "wavelength_nm",
                format!("{} nm is outside (1200, 1400) nm", self.wavelength_nm),
            ));
        }
        if !self.power_dbm.is_finite() {
            return Err(Error::invalid("power_dbm", "must be finite"));
        }
        if !(self.power_ripple_db >= 0.0) || !(self.power_ripple_period_c > 0.0) {
            return Err(Error::invalid(
                "power_ripple",
                "ripple must be >= 0 with a positive period",
            ));
        }
        Ok(())
    }

    /// Tuning slope in nm per deg C.
    pub fn tuning_slope(&self) -> f64 {
        let [a, b] = self.calibration;
        (b.wavelength_nm - a.wavelength_nm) / (b.temperature_c - a.temperature_c)
    }

    pub fn temperature_in_range(&self, temperature_c: f64) -> bool {
        let [a, b] = self.calibration;
        temperature_c >= a.temperature_c - EXTRAPOLATION_MARGIN_C
            && temperature_c <= b.temperature_c + EXTRAPOLATION_MARGIN_C
    }

    /// Output power at `temperature_c`: nominal power plus a sinusoidal
    /// ripple of `power_ripple_db` peak-to-peak, zero at the low anchor.
    pub fn power_at_temperature_dbm(&self, temperature_c: f64) -> f64 {
        let phase =
            (temperature_c - self.calibration[0].temperature_c) / self.power_ripple_period_c;
        self.power_dbm + 0.5 * self.power_ripple_db * (2.0 * std::f64::consts::PI * phase).sin()
    }
}

/// Emission wavelength from the straight line through the two calibration
/// anchors. Written as a weighted sum so both anchors come back bit-exact.
pub fn wavelength_from_temperature(temperature_c: f64, laser: &LaserSpec) -> f64 {
    let [a, b] = laser.calibration;
    let t = (temperature_c - a.temperature_c) / (b.temperature_c - a.temperature_c);
    a.wavelength_nm * (1.0 - t) + b.wavelength_nm * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_reproduced() {
        let l = LaserSpec::default();
        assert_eq!(wavelength_from_temperature(30.0, &l), 1308.3);
        assert_eq!(wavelength_from_temperature(85.0, &l), 1315.7);
    }

    #[test]
    fn midpoint() {
        let l = LaserSpec::default();
        let mid = (1308.3 + 1315.7) / 2.0;
        assert!((wavelength_from_temperature(57.5, &l) - mid).abs() < 1e-12);
        assert!((l.tuning_slope() - 0.134_545).abs() < 1e-5);
    }

    #[test]
    fn ripple_spans_configured_peak_to_peak() {
        let l = LaserSpec::default();
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for i in 0..=5500 {
            let p = l.power_at_temperature_dbm(30.0 + i as f64 * 0.01);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        assert!(((hi - lo) - 0.8).abs() < 1e-3);
        assert_eq!(l.power_at_temperature_dbm(30.0), l.power_dbm);
    }

    #[test]
    fn validation() {
        let mut l = LaserSpec::default();
        assert!(l.validate().is_ok());
        l.calibration[1].wavelength_nm = 1300.0;
        assert!(l.validate().is_err());
        assert!(!LaserSpec::default().temperature_in_range(5.0));
        assert!(LaserSpec::default().temperature_in_range(100.0));
    }
}

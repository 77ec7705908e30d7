//! Standard single-mode fiber description and its dispersion slope model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiberSpec {
    pub length_km: f64,
    pub zero_dispersion_wavelength_nm: f64,
    /// Dispersion slope at the zero-dispersion wavelength, ps/(nm^2 km).
    pub dispersion_slope_ps_nm2_km: f64,
    pub loss_db_per_km: f64,
}

impl Default for FiberSpec {
    /// Back-to-back G.652 fiber: lambda0 = 1310 nm, S0 = 0.092, 0.32 dB/km.
    fn default() -> Self {
        FiberSpec {
            length_km: 0.0,
            zero_dispersion_wavelength_nm: 1310.0,
            dispersion_slope_ps_nm2_km: 0.092,
            loss_db_per_km: 0.32,
        }
    }
}

impl FiberSpec {
    pub fn with_length(mut self, length_km: f64) -> Self {
        self.length_km = length_km;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0) || !self.length_km.is_finite() {
            return Err(Error::invalid(
                "length_km",
                format!("must be >= 0, got {}", self.length_km),
            ));
        }
        if !(self.dispersion_slope_ps_nm2_km > 0.0) {
            return Err(Error::invalid(
                "dispersion_slope_ps_nm2_km",
                format!("must be > 0, got {}", self.dispersion_slope_ps_nm2_km),
            ));
        }
        if !(self.loss_db_per_km >= 0.0) {
            return Err(Error::invalid(
                "loss_db_per_km",
                format!("must be >= 0, got {}", self.loss_db_per_km),
            ));
        }
        if !(self.zero_dispersion_wavelength_nm > 1200.0
            && self.zero_dispersion_wavelength_nm < 1400.0)
        {
            return Err(Error::invalid(
                "zero_dispersion_wavelength_nm",
                format!(
                    "{} nm is outside (1200, 1400) nm",
                    self.zero_dispersion_wavelength_nm
                ),
            ));
        }
        Ok(())
    }

    /// Accumulated dispersion D*L in ps/nm at `wavelength_nm`.
    pub fn accumulated_dispersion(&self, wavelength_nm: f64) -> f64 {
        dispersion_parameter(wavelength_nm, self) * self.length_km
    }

    pub fn total_loss_db(&self) -> f64 {
        self.loss_db_per_km * self.length_km
    }
}

/// G.652 slope model `D = S0/4 * (lambda - lambda0^4 / lambda^3)`, ps/(nm km).
pub fn dispersion_parameter(wavelength_nm: f64, fiber: &FiberSpec) -> f64 {
    let l0 = fiber.zero_dispersion_wavelength_nm;
    let l = wavelength_nm;
    fiber.dispersion_slope_ps_nm2_km / 4.0 * (l - l0.powi(4) / l.powi(3))
}

//! Uniform WDM grid construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::SPEED_OF_LIGHT_NM_THZ;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WdmChannel {
    /// 1-based channel index.
    pub index: usize,
    pub frequency_thz: f64,
    pub wavelength_nm: f64,
}

impl WdmChannel {
    /// Wavelength rounded to the 0.01 nm reporting precision.
    pub fn reported_wavelength_nm(&self) -> f64 {
        (self.wavelength_nm * 100.0).round() / 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdmChannelPlan {
    pub channels: Vec<WdmChannel>,
}

impl WdmChannelPlan {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channel(&self, index: usize) -> Option<&WdmChannel> {
        index.checked_sub(1).and_then(|i| self.channels.get(i))
    }

    /// Channel whose wavelength lies closest to `wavelength_nm`.
    pub fn nearest(&self, wavelength_nm: f64) -> Option<&WdmChannel> {
        self.channels.iter().min_by(|a, b| {
            (a.wavelength_nm - wavelength_nm)
                .abs()
                .total_cmp(&(b.wavelength_nm - wavelength_nm).abs())
        })
    }
}

/// Grid of `count` channels starting at `start_wavelength_nm`, stepping down
/// in frequency (up in wavelength) by `spacing_ghz`.
pub fn build_wdm_grid(
    start_wavelength_nm: f64,
    spacing_ghz: f64,
    count: usize,
) -> Result<WdmChannelPlan> {
    if count == 0 {
        return Err(Error::invalid("count", "need at least one channel"));
    }
    if !(start_wavelength_nm > 1200.0 && start_wavelength_nm < 1400.0) {
        return Err(Error::invalid(
            "start_wavelength_nm",
            format!("{start_wavelength_nm} nm is outside (1200, 1400) nm"),
        ));
    }
    if !(spacing_ghz > 0.0) || !spacing_ghz.is_finite() {
        return Err(Error::invalid(
            "spacing_ghz",
            format!("must be > 0, got {spacing_ghz}"),
        ));
    }
    let f1 = SPEED_OF_LIGHT_NM_THZ / start_wavelength_nm;
    let step = spacing_ghz / 1000.0;
    if f1 - (count - 1) as f64 * step <= 0.0 {
        return Err(Error::invalid(
            "spacing_ghz",
            "grid runs past zero frequency",
        ));
    }
    let channels = (0..count)
        .map(|k| {
            let f = f1 - k as f64 * step;
            WdmChannel {
                index: k + 1,
                frequency_thz: f,
                wavelength_nm: SPEED_OF_LIGHT_NM_THZ / f,
            }
        })
        .collect();
    Ok(WdmChannelPlan { channels })
}

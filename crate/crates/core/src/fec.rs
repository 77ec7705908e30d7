//! FEC threshold ledger and net-rate arithmetic.
//!
//! Codes are characterized only by their overhead and the pre-FEC BER below
//! which they deliver error-free output; no encoding or decoding happens here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::ModulationFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FecCode {
    pub name: String,
    /// Overhead as a fraction, e.g. `0.07` for 7%.
    pub overhead: f64,
    /// Highest pre-FEC BER the code can correct.
    pub ber_threshold: f64,
}

impl FecCode {
    pub fn new(name: impl Into<String>, overhead: f64, ber_threshold: f64) -> Result<Self> {
        let code = FecCode {
            name: name.into(),
            overhead,
            ber_threshold,
        };
        code.validate()?;
        Ok(code)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.overhead > 0.0) || !self.overhead.is_finite() {
            return Err(Error::invalid(
                "overhead",
                format!("must be > 0, got {}", self.overhead),
            ));
        }
        if !(self.ber_threshold > 0.0 && self.ber_threshold < 0.5) {
            return Err(Error::invalid(
                "ber_threshold",
                format!("must lie in (0, 0.5), got {}", self.ber_threshold),
            ));
        }
        Ok(())
    }

    /// Overhead in percent, formatted the way rate tables print it (`7%`, `5.8%`).
    pub fn overhead_label(&self) -> String {
        let pct = round_to(self.overhead * 100.0, 1);
        if pct.fract() == 0.0 {
            format!("{pct:.0}%")
        } else {
            format!("{pct}%")
        }
    }
}

/// Outcome of threshold lookup. A BER above every threshold is reported
/// explicitly rather than falling back to some default code.
#[derive(Debug, Clone, PartialEq)]
pub enum FecVerdict {
    Recoverable(FecCode),
    Unrecoverable,
}

impl FecVerdict {
    pub fn code(&self) -> Option<&FecCode> {
        match self {
            FecVerdict::Recoverable(c) => Some(c),
            FecVerdict::Unrecoverable => None,
        }
    }
}

/// A set of FEC codes sorted by increasing overhead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<FecCode>", into = "Vec<FecCode>")]
pub struct FecLedger {
    codes: Vec<FecCode>,
}

/// Sorts on the way in; code validity is checked with the rest of the
/// configuration.
impl From<Vec<FecCode>> for FecLedger {
    fn from(mut codes: Vec<FecCode>) -> Self {
        codes.sort_by(|a, b| a.overhead.total_cmp(&b.overhead));
        FecLedger { codes }
    }
}

impl From<FecLedger> for Vec<FecCode> {
    fn from(l: FecLedger) -> Self {
        l.codes
    }
}

/// Industry KP4 RS(544,514) pre-FEC threshold. Not a measured value of this
/// link; kept configurable.
pub const KP4_BER_THRESHOLD: f64 = 2.2e-4;

impl Default for FecLedger {
    fn default() -> Self {
        let codes = vec![
            FecCode {
                name: "KP4-FEC".into(),
                overhead: 0.058,
                ber_threshold: KP4_BER_THRESHOLD,
            },
            FecCode {
                name: "HD-FEC".into(),
                overhead: 0.07,
                ber_threshold: 4.5e-3,
            },
            FecCode {
                name: "SD-FEC-20".into(),
                overhead: 0.20,
                ber_threshold: 2.4e-2,
            },
            FecCode {
                name: "SD-FEC-25".into(),
                overhead: 0.25,
                ber_threshold: 5e-2,
            },
        ];
        FecLedger { codes }
    }
}

impl FecLedger {
    /// Builds a ledger, sorting entries by overhead.
    pub fn new(mut codes: Vec<FecCode>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::invalid(
                "fec ledger",
                "must contain at least one code",
            ));
        }
        for c in &codes {
            c.validate()?;
        }
        codes.sort_by(|a, b| a.overhead.total_cmp(&b.overhead));
        Ok(FecLedger { codes })
    }

    pub fn codes(&self) -> &[FecCode] {
        &self.codes
    }

    pub fn by_overhead(&self, overhead: f64) -> Option<&FecCode> {
        self.codes
            .iter()
            .find(|c| (c.overhead - overhead).abs() < 1e-9)
    }

    pub fn select(&self, ber: f64) -> FecVerdict {
        select_fec(ber, &self.codes)
    }
}

/// Minimum-overhead code whose threshold covers `ber`.
///
/// `ledger` must be sorted by overhead (as [`FecLedger`] keeps it).
pub fn select_fec(ber: f64, ledger: &[FecCode]) -> FecVerdict {
    ledger
        .iter()
        .find(|c| ber <= c.ber_threshold)
        .cloned()
        .map_or(FecVerdict::Unrecoverable, FecVerdict::Recoverable)
}

/// Net line rate after FEC overhead, truncated to 0.1 Gbps.
///
/// Truncation (not rounding) is the reporting rule: a rate table never claims
/// more throughput than the link carries, so 450/1.07 = 420.56 prints as 420.5.
pub fn net_rate(symbol_rate_gbd: f64, format: ModulationFormat, fec: &FecCode) -> f64 {
    truncate_to(net_rate_exact(symbol_rate_gbd, format, fec), 1)
}

/// Net rate without the reporting truncation.
pub fn net_rate_exact(symbol_rate_gbd: f64, format: ModulationFormat, fec: &FecCode) -> f64 {
    symbol_rate_gbd * format.bits_per_symbol() / (1.0 + fec.overhead)
}

/// Aggregate of `lanes` identical lanes in Tbps, truncated to 0.01 Tbps.
pub fn aggregate_rate_tbps(lanes: usize, per_lane_gbps: f64) -> f64 {
    truncate_to(lanes as f64 * per_lane_gbps / 1000.0, 2)
}

/// Truncate toward zero at `decimals`, absorbing binary representation error
/// (675/1.2 must stay 562.5, not become 562.4).
pub fn truncate_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let scaled = x * scale;
    let t = (scaled + 1e-7 * scaled.abs().max(1.0)).trunc();
    t / scale
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

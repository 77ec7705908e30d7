//! PAM constellations.
//!
//! Levels are the odd integers `2m - M - 1` scaled to unit average power, so a
//! noise standard deviation applied to a symbol stream reads directly as an
//! inverse SNR. PAM6 is normalized over the 32 symbol pairs actually used by
//! the 5-bit/2-symbol pair code (the four corner pairs are never sent).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationFormat {
    Pam4,
    Pam6,
    Pam8,
}

impl ModulationFormat {
    pub const ALL: [ModulationFormat; 3] = [Self::Pam4, Self::Pam6, Self::Pam8];

    pub fn order(self) -> usize {
        match self {
            Self::Pam4 => 4,
            Self::Pam6 => 6,
            Self::Pam8 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Pam4 => "PAM4",
            Self::Pam6 => "PAM6",
            Self::Pam8 => "PAM8",
        }
    }

    /// Bits per symbol as a reduced fraction `(numerator, denominator)`.
    pub fn bits_per_symbol_ratio(self) -> (u32, u32) {
        match self {
            Self::Pam4 => (2, 1),
            Self::Pam6 => (5, 2),
            Self::Pam8 => (3, 1),
        }
    }

    pub fn bits_per_symbol(self) -> f64 {
        let (n, d) = self.bits_per_symbol_ratio();
        n as f64 / d as f64
    }

    /// Bits consumed per mapping block and the symbols that block produces.
    pub fn block(self) -> (usize, usize) {
        match self {
            Self::Pam4 => (2, 1),
            Self::Pam6 => (5, 2),
            Self::Pam8 => (3, 1),
        }
    }

    /// Mean of the squared odd-integer levels under the symbol statistics
    /// the mapper produces.
    fn raw_power(self) -> f64 {
        match self {
            // 36 pairs carry 840 units of a^2 + b^2; the four (+-5, +-5)
            // corners carry 200 of them, leaving 640 over 32 pairs.
            Self::Pam6 => 10.0,
            _ => {
                let m = self.order() as f64;
                (m * m - 1.0) / 3.0
            }
        }
    }

    /// Distance between adjacent levels after normalization.
    pub fn spacing(self) -> f64 {
        2.0 / self.raw_power().sqrt()
    }

    /// Amplitude of level index `m` (0 is the lowest level).
    pub fn level(self, m: usize) -> f64 {
        let order = self.order() as f64;
        (2.0 * m as f64 - order + 1.0) / self.raw_power().sqrt()
    }

    pub fn levels(self) -> Vec<f64> {
        (0..self.order()).map(|m| self.level(m)).collect()
    }

    /// Nearest-level decision.
    pub fn slice(self, y: f64) -> usize {
        let top = (self.order() - 1) as f64;
        let idx = (y / self.spacing() + top / 2.0).round();
        idx.clamp(0.0, top) as usize
    }
}

impl fmt::Display for ModulationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pam4" => Ok(Self::Pam4),
            "pam6" => Ok(Self::Pam6),
            "pam8" => Ok(Self::Pam8),
            other => Err(format!(
                "unknown modulation format `{other}` (expected pam4, pam6 or pam8)"
            )),
        }
    }
}

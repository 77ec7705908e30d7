use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::{BesselThomson, MzmSpec, NoiseSpec, PdSpec};
use crate::error::{ConfigIssue, Error, Result};
use crate::fec::FecLedger;
use crate::fiber::FiberSpec;
use crate::laser::LaserSpec;
use crate::modulation::ModulationFormat;
use crate::rng::PrngKind;
use crate::rx::{EqualizerConfig, EqualizerKind};
use crate::tx::{MAX_DAC_BITS, MIN_DAC_BITS};

/// Smallest block a link run accepts.
pub const MIN_SYMBOLS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkParams {
    pub modulation: ModulationFormat,
    pub symbol_rate_gbd: f64,
    pub dac_rate_gsa: f64,
    pub num_symbols: usize,
    pub seed: u64,
    pub prng: PrngKind,
    /// Simulation samples per DAC sample for the analog and optical stages.
    pub sim_oversampling: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            modulation: ModulationFormat::Pam4,
            symbol_rate_gbd: 225.0,
            dac_rate_gsa: 225.0,
            num_symbols: 1 << 16,
            seed: 7,
            prng: PrngKind::default(),
            sim_oversampling: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponsePosition {
    /// Electrical path between DAC and modulator.
    Tx,
    /// Electrical path after the photodiode.
    Rx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseKind {
    Bessel,
    /// Measured (frequency_ghz, magnitude_db, phase_deg) table on disk.
    Table,
}

/// One analog component in the electrical path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogResponse {
    pub name: String,
    pub position: ResponsePosition,
    pub kind: ResponseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl AnalogResponse {
    pub fn bessel(name: &str, position: ResponsePosition, order: usize, cutoff_ghz: f64) -> Self {
        AnalogResponse {
            name: name.into(),
            position,
            kind: ResponseKind::Bessel,
            order: Some(order),
            cutoff_ghz: Some(cutoff_ghz),
            path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ResponseKind::Bessel => {
                let (Some(order), Some(cutoff)) = (self.order, self.cutoff_ghz) else {
                    return Err(Error::invalid(
                        "order",
                        "bessel responses need `order` and `cutoff_ghz`",
                    ));
                };
                BesselThomson::new(order, cutoff)?;
                if self.path.is_some() {
                    return Err(Error::invalid("path", "only table responses take a path"));
                }
            }
            ResponseKind::Table => {
                if self.path.is_none() {
                    return Err(Error::invalid("path", "table responses need `path`"));
                }
                if self.order.is_some() || self.cutoff_ghz.is_some() {
                    return Err(Error::invalid(
                        "order",
                        "table responses take no order or cutoff",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TxSettings {
    /// Invert the Tx analog cascade before the DAC.
    pub preemphasis: bool,
    pub max_boost_db: f64,
    /// Output peak-to-RMS ratio after clipping.
    pub clip_ratio: f64,
    pub dac_bits: u32,
    /// DAC differential swing; the clip level maps to the top code.
    pub full_scale_vpp: f64,
}

impl Default for TxSettings {
    fn default() -> Self {
        TxSettings {
            preemphasis: true,
            max_boost_db: 18.0,
            clip_ratio: 2.5,
            dac_bits: 7,
            full_scale_vpp: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSettings {
    pub responses: Vec<AnalogResponse>,
    pub driver_gain_db: f64,
    pub mzm: MzmSpec,
    /// Connector, coupling and splitter losses on top of fiber loss.
    pub extra_loss_db: f64,
    pub soa_gain_db: f64,
    /// RMS of the SOA's additive field noise, sqrt(mW).
    pub soa_noise_sigma: f64,
    /// Received optical power forced by a variable attenuator, if set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rop_dbm: Option<f64>,
    pub pd: PdSpec,
    /// Receiver/scope noise, in mA of photocurrent.
    pub noise: NoiseSpec,
}

impl Default for ChannelSettings {
    fn default() -> Self {
        ChannelSettings {
            responses: vec![
                AnalogResponse::bessel("dac", ResponsePosition::Tx, 4, 110.0),
                AnalogResponse::bessel("driver", ResponsePosition::Tx, 2, 105.0),
                AnalogResponse::bessel("rf-amplifier", ResponsePosition::Rx, 2, 100.0),
            ],
            driver_gain_db: 6.0,
            mzm: MzmSpec::default(),
            extra_loss_db: 0.0,
            soa_gain_db: 0.0,
            soa_noise_sigma: 0.0,
            rop_dbm: None,
            pd: PdSpec::default(),
            noise: NoiseSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RxSettings {
    /// Real-time scope sample rate; `None` samples at the simulation rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope_rate_gsa: Option<f64>,
    pub equalizers: Vec<EqualizerConfig>,
}

impl Default for RxSettings {
    fn default() -> Self {
        RxSettings {
            scope_rate_gsa: None,
            equalizers: EqualizerKind::ALL
                .iter()
                .map(|&k| EqualizerConfig::new(k))
                .collect(),
        }
    }
}

/// Everything one end-to-end run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct LinkConfig {
    pub link: LinkParams,
    pub fiber: FiberSpec,
    pub laser: LaserSpec,
    pub tx: TxSettings,
    pub channel: ChannelSettings,
    pub rx: RxSettings,
    pub fec: FecLedger,
}

fn issue(issues: &mut Vec<ConfigIssue>, section: &str, r: Result<()>) {
    if let Err(e) = r {
        let (key, msg) = match e {
            Error::InvalidParameter { name, reason } => (name.to_string(), reason),
            other => (String::new(), other.to_string()),
        };
        let path = if key.is_empty() || key.contains(' ') {
            section.to_string()
        } else {
            format!("{section}.{key}")
        };
        issues.push(ConfigIssue { path, message: msg });
    }
}

fn push(issues: &mut Vec<ConfigIssue>, path: impl Into<String>, message: impl Into<String>) {
    issues.push(ConfigIssue {
        path: path.into(),
        message: message.into(),
    });
}

impl LinkConfig {
    /// Every problem in the configuration, in document order.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let l = &self.link;
        if !(l.symbol_rate_gbd > 0.0) || !l.symbol_rate_gbd.is_finite() {
            push(&mut out, "link.symbol_rate_gbd", "must be > 0");
        }
        if !(l.dac_rate_gsa > 0.0) || !l.dac_rate_gsa.is_finite() {
            push(&mut out, "link.dac_rate_gsa", "must be > 0");
        }
        if l.symbol_rate_gbd > l.dac_rate_gsa {
            push(
                &mut out,
                "link.symbol_rate_gbd",
                format!(
                    "link.symbol_rate_gbd ({}) exceeds link.dac_rate_gsa ({})",
                    l.symbol_rate_gbd, l.dac_rate_gsa
                ),
            );
        }
        if l.num_symbols < MIN_SYMBOLS {
            push(
                &mut out,
                "link.num_symbols",
                format!("must be >= {MIN_SYMBOLS}, got {}", l.num_symbols),
            );
        }
        let (_, block) = l.modulation.block();
        if l.num_symbols % block != 0 {
            push(
                &mut out,
                "link.num_symbols",
                format!("must be a multiple of {block} for {}", l.modulation),
            );
        }
        if l.sim_oversampling == 0 || l.sim_oversampling > 16 {
            push(&mut out, "link.sim_oversampling", "must lie in 1..=16");
        }
        issue(&mut out, "fiber", self.fiber.validate());
        issue(&mut out, "laser", self.laser.validate());

        let t = &self.tx;
        if !(t.clip_ratio > 1.0) {
            push(
                &mut out,
                "tx.clip_ratio",
                format!("must be > 1, got {}", t.clip_ratio),
            );
        }
        if !(MIN_DAC_BITS..=MAX_DAC_BITS).contains(&t.dac_bits) {
            push(
                &mut out,
                "tx.dac_bits",
                format!("must lie in {MIN_DAC_BITS}..={MAX_DAC_BITS}"),
            );
        }
        if !(t.full_scale_vpp > 0.0) {
            push(&mut out, "tx.full_scale_vpp", "must be > 0");
        }
        if !(t.max_boost_db >= 0.0) {
            push(&mut out, "tx.max_boost_db", "must be >= 0");
        }

        let c = &self.channel;
        let sim_nyquist = l.dac_rate_gsa * l.sim_oversampling as f64 / 2.0;
        for (i, r) in c.responses.iter().enumerate() {
            issue(&mut out, &format!("channel.responses[{i}]"), r.validate());
            if let Some(fc) = r.cutoff_ghz {
                if fc >= sim_nyquist {
                    push(
                        &mut out,
                        format!("channel.responses[{i}].cutoff_ghz"),
                        format!("{fc} GHz is not below the simulation Nyquist frequency {sim_nyquist} GHz"),
                    );
                }
            }
        }
        issue(&mut out, "channel.mzm", c.mzm.validate());
        issue(&mut out, "channel.pd", c.pd.validate());
        issue(&mut out, "channel.noise", c.noise.validate());
        for (key, v) in [
            ("channel.driver_gain_db", c.driver_gain_db),
            ("channel.soa_gain_db", c.soa_gain_db),
        ] {
            if !v.is_finite() {
                push(&mut out, key, "must be finite");
            }
        }
        if !(c.extra_loss_db >= 0.0) {
            push(&mut out, "channel.extra_loss_db", "must be >= 0");
        }
        if !(c.soa_noise_sigma >= 0.0) {
            push(&mut out, "channel.soa_noise_sigma", "must be >= 0");
        }
        if let Some(rop) = c.rop_dbm {
            if !rop.is_finite() {
                push(&mut out, "channel.rop_dbm", "must be finite");
            }
        }

        if let Some(scope) = self.rx.scope_rate_gsa {
            if !(scope >= l.symbol_rate_gbd) {
                push(
                    &mut out,
                    "rx.scope_rate_gsa",
                    "must be >= link.symbol_rate_gbd",
                );
            }
        }
        if self.rx.equalizers.is_empty() {
            push(
                &mut out,
                "rx.equalizers",
                "at least one equalizer is required",
            );
        }
        for (i, e) in self.rx.equalizers.iter().enumerate() {
            issue(&mut out, &format!("rx.equalizers[{i}]"), e.validate());
            if e.training_symbols > l.num_symbols {
                push(
                    &mut out,
                    format!("rx.equalizers[{i}].training_symbols"),
                    format!(
                        "{} exceeds link.num_symbols ({})",
                        e.training_symbols, l.num_symbols
                    ),
                );
            }
        }
        for (i, code) in self.fec.codes().iter().enumerate() {
            issue(&mut out, &format!("fec[{i}]"), code.validate());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    /// Simulation sample rate for the analog and optical stages.
    pub fn sim_rate(&self) -> f64 {
        self.link.dac_rate_gsa * self.link.sim_oversampling as f64
    }

    /// Symbols discarded at each end before counting errors.
    pub fn guard_symbols(&self) -> usize {
        self.rx
            .equalizers
            .iter()
            .map(|e| e.ff_taps.max(e.fb_taps))
            .max()
            .unwrap_or(0)
            .max(64)
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::LinkConfig;
use crate::harness::link::{run_link, LinkResult};
use crate::laser::wavelength_from_temperature;
use crate::rng::derive_seed;
use crate::rx::EqualizerConfig;
use crate::wdm::{build_wdm_grid, WdmChannelPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SymbolRate,
    Rop,
    Temperature,
    WdmChannel,
    Dr8Lane,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            Self::SymbolRate => "symbol_rate_gbd",
            Self::Rop => "rop_dbm",
            Self::Temperature => "temperature_c",
            Self::WdmChannel => "wdm_channel",
            Self::Dr8Lane => "dr8_lane",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WdmSettings {
    pub start_wavelength_nm: f64,
    pub spacing_ghz: f64,
    pub channels: usize,
    /// Symbol delay between aggressor patterns and the channel under test.
    pub decorrelation_delay_symbols: usize,
}

impl Default for WdmSettings {
    fn default() -> Self {
        WdmSettings {
            start_wavelength_nm: 1295.56,
            spacing_ghz: 400.0,
            channels: 8,
            decorrelation_delay_symbols: 1024,
        }
    }
}

impl WdmSettings {
    pub fn plan(&self) -> Result<WdmChannelPlan> {
        build_wdm_grid(self.start_wavelength_nm, self.spacing_ghz, self.channels)
    }
}

pub const DR8_LANES: usize = 8;

/// Differential V_pi of the DR8 modulators.
pub const DR8_V_PI_V: f64 = 4.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dr8Settings {
    pub laser_power_dbm: f64,
    pub splitter_excess_loss_db: f64,
    pub v_pi_v: f64,
}

impl Default for Dr8Settings {
    fn default() -> Self {
        Dr8Settings {
            laser_power_dbm: 23.0,
            splitter_excess_loss_db: 0.0,
            v_pi_v: DR8_V_PI_V,
        }
    }
}

/// Per-lane launch power after the 1:8 split.
pub fn dr8_lane_power_dbm(laser_power_dbm: f64, splitter_excess_loss_db: f64) -> f64 {
    laser_power_dbm - 10.0 * (DR8_LANES as f64).log10() - splitter_excess_loss_db
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: LinkConfig,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub equalizers: Vec<EqualizerConfig>,
    pub wdm: Option<WdmSettings>,
    pub dr8: Option<Dr8Settings>,
}

impl SweepSpec {
    pub fn new(base: LinkConfig, variable: SweepVariable, values: Vec<f64>) -> Self {
        let equalizers = base.rx.equalizers.clone();
        SweepSpec {
            base,
            variable,
            values,
            equalizers,
            wdm: None,
            dr8: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.is_empty() {
            return Err(Error::invalid("values", "sweep needs at least one value"));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::invalid(
                "values",
                "values must be finite and sorted ascending",
            ));
        }
        if self.equalizers.is_empty() {
            return Err(Error::invalid(
                "equalizers",
                "sweep needs at least one equalizer",
            ));
        }
        for e in &self.equalizers {
            e.validate()?;
        }
        let integral = |max: usize| {
            self.values
                .iter()
                .all(|&v| v.fract() == 0.0 && v >= 1.0 && v <= max as f64)
        };
        match self.variable {
            SweepVariable::SymbolRate => {
                if self
                    .values
                    .iter()
                    .any(|&v| !(v > 0.0 && v <= self.base.link.dac_rate_gsa))
                {
                    return Err(Error::invalid(
                        "values",
                        "symbol rates must lie in (0, dac_rate_gsa]",
                    ));
                }
            }
            SweepVariable::Rop => {}
            SweepVariable::Temperature => {
                if let Some(t) = self
                    .values
                    .iter()
                    .find(|&&t| !self.base.laser.temperature_in_range(t))
                {
                    return Err(Error::invalid(
                        "values",
                        format!("{t} C is outside the laser calibration range"),
                    ));
                }
            }
            SweepVariable::WdmChannel => {
                let wdm = self.wdm.as_ref().ok_or_else(|| {
                    Error::invalid("wdm", "wdm_channel sweeps need a [wdm] section")
                })?;
                wdm.plan()?;
                if !integral(wdm.channels) {
                    return Err(Error::invalid(
                        "values",
                        format!("channels must be integers in 1..={}", wdm.channels),
                    ));
                }
            }
            SweepVariable::Dr8Lane => {
                if self.dr8.is_none() {
                    return Err(Error::invalid(
                        "dr8",
                        "dr8_lane sweeps need a [dr8] section",
                    ));
                }
                if !integral(DR8_LANES) {
                    return Err(Error::invalid(
                        "values",
                        format!("lanes must be integers in 1..={DR8_LANES}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Effective configuration, lane and warnings for point `index`.
    pub fn point(&self, index: usize) -> Result<(LinkConfig, Option<usize>, Vec<String>)> {
        let value = self.values[index];
        let mut c = self.base.clone();
        c.rx.equalizers = self.equalizers.clone();
        let mut lane = None;
        let mut warnings = Vec::new();
        match self.variable {
            SweepVariable::SymbolRate => c.link.symbol_rate_gbd = value,
            SweepVariable::Rop => c.channel.rop_dbm = Some(value),
            SweepVariable::Temperature => {
                c.laser.wavelength_nm = wavelength_from_temperature(value, &self.base.laser);
                c.laser.power_dbm = self.base.laser.power_at_temperature_dbm(value);
            }
            SweepVariable::WdmChannel => {
                let wdm = self.wdm.as_ref().expect("validated");
                let cut = value as usize;
                let (cfg, w) = wdm_config(&c, &wdm.plan()?, cut, wdm.decorrelation_delay_symbols)?;
                c = cfg;
                warnings = w;
                lane = Some(cut);
            }
            SweepVariable::Dr8Lane => {
                let dr8 = self.dr8.as_ref().expect("validated");
                let l = value as usize;
                c = dr8_config(&c, l, dr8)?;
                lane = Some(l);
            }
        }
        c.link.seed = derive_seed(self.base.link.seed, index as u64, lane.unwrap_or(0) as u64);
        Ok((c, lane, warnings))
    }
}

fn finish(
    mut r: LinkResult,
    spec: &SweepSpec,
    index: usize,
    lane: Option<usize>,
    warnings: Vec<String>,
) -> LinkResult {
    r.point = index;
    r.variable = Some(spec.variable);
    r.value = Some(spec.values[index]);
    r.lane = lane;
    r.warnings.extend(warnings);
    r
}

fn run_point(spec: &SweepSpec, index: usize) -> LinkResult {
    match spec.point(index) {
        Ok((c, lane, warnings)) => match run_link(&c) {
            Ok(r) => finish(r, spec, index, lane, warnings),
            Err(e) => finish(
                LinkResult::failed(index, c, &e),
                spec,
                index,
                lane,
                warnings,
            ),
        },
        Err(e) => finish(
            LinkResult::failed(index, spec.base.clone(), &e),
            spec,
            index,
            None,
            Vec::new(),
        ),
    }
}

/// Runs every sweep point. Point failures are recorded in the point's
/// result; only an invalid spec fails the whole sweep. Results are in value
/// order and independent of `jobs` (`None` uses all cores).
pub fn sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<LinkResult>> {
    spec.validate()?;
    let indices: Vec<usize> = (0..spec.values.len()).collect();
    match jobs {
        Some(1) => Ok(indices.iter().map(|&i| run_point(spec, i)).collect()),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = jobs {
                builder = builder.num_threads(n);
            }
            let pool = builder
                .build()
                .map_err(|e| Error::invalid("jobs", e.to_string()))?;
            Ok(pool.install(|| indices.par_iter().map(|&i| run_point(spec, i)).collect()))
        }
    }
}

fn wdm_config(
    base: &LinkConfig,
    plan: &WdmChannelPlan,
    cut: usize,
    delay: usize,
) -> Result<(LinkConfig, Vec<String>)> {
    let ch = plan.channel(cut).ok_or_else(|| {
        Error::invalid("cut_index", format!("{cut} is outside 1..={}", plan.len()))
    })?;
    let mut c = base.clone();
    c.laser.wavelength_nm = ch.wavelength_nm;
    let mut warnings = Vec::new();
    if delay == 0 {
        warnings.push(
            "decorrelation_delay is 0: aggressor channels carry the same pattern as the channel under test".into(),
        );
    }
    if plan.len() > 1 {
        let total = c.laser.power_dbm + 10.0 * (plan.len() as f64).log10();
        warnings.push(format!(
            "{} aggressor channel(s) included in power bookkeeping only; aggregate launch {total:.2} dBm",
            plan.len() - 1
        ));
    }
    Ok((c, warnings))
}

/// Channel under test `cut` of a WDM plan. Aggressors enter only the power
/// bookkeeping (linear regime, no inter-channel interaction).
pub fn run_wdm(
    base: &LinkConfig,
    plan: &WdmChannelPlan,
    cut: usize,
    decorrelation_delay: usize,
) -> Result<LinkResult> {
    let (mut c, warnings) = wdm_config(base, plan, cut, decorrelation_delay)?;
    c.link.seed = derive_seed(base.link.seed, 0, cut as u64);
    let mut r = run_link(&c)?;
    r.lane = Some(cut);
    r.warnings.extend(warnings);
    Ok(r)
}

fn dr8_config(base: &LinkConfig, lane: usize, dr8: &Dr8Settings) -> Result<LinkConfig> {
    if !(1..=DR8_LANES).contains(&lane) {
        return Err(Error::invalid(
            "lane",
            format!("{lane} is outside 1..={DR8_LANES}"),
        ));
    }
    let mut c = base.clone();
    c.laser.power_dbm = dr8_lane_power_dbm(dr8.laser_power_dbm, dr8.splitter_excess_loss_db);
    c.channel.mzm.v_pi_v = dr8.v_pi_v;
    Ok(c)
}

/// One DR8 lane: the shared laser split eight ways, DR8 modulator V_pi.
pub fn run_dr8(
    base: &LinkConfig,
    lane: usize,
    laser_power_dbm: f64,
    splitter_excess_loss_db: f64,
) -> Result<LinkResult> {
    let dr8 = Dr8Settings {
        laser_power_dbm,
        splitter_excess_loss_db,
        ..Default::default()
    };
    let mut c = dr8_config(base, lane, &dr8)?;
    c.link.seed = derive_seed(base.link.seed, 0, lane as u64);
    let mut r = run_link(&c)?;
    r.lane = Some(lane);
    Ok(r)
}

/// BER against laser temperature: wavelength from the calibration line,
/// power with the ripple model, dispersion recomputed per point.
pub fn sweep_temperature(
    base: &LinkConfig,
    temps: &[f64],
    jobs: Option<usize>,
) -> Result<Vec<LinkResult>> {
    let spec = SweepSpec::new(base.clone(), SweepVariable::Temperature, temps.to_vec());
    sweep(&spec, jobs)
}

use serde::{Deserialize, Serialize};

use crate::channel::{
    add_noise, apply_gain, apply_response, bessel_response, mzm_modulate, photodetect,
    propagate_dispersion, BesselThomson, FrequencyResponse, NoiseSpec, DESIGN_GRID_POINTS,
};
use crate::error::{Error, Result, Stage};
use crate::fec::{net_rate, FecCode};
use crate::harness::config::{AnalogResponse, LinkConfig, ResponseKind, ResponsePosition};
use crate::harness::eye::EyeHistogram;
use crate::harness::sweep::SweepVariable;
use crate::rng::{stream_seed, Stream};
use crate::rx::{
    equalize, estimate_postcursor, measure_ber, mlse_1tap, resample_to_2sps, synchronize,
    BerReport, Equalized, EqualizerConfig, EqualizerKind,
};
use crate::signal::{resample_waveform, Samples, Waveform};
use crate::tx::{
    apply_preemphasis, clip_at, clip_threshold, demap, generate_bits_with, map_symbols, quantize,
    resample_to_dac, BitSequence, SymbolSequence,
};
use crate::units::{dbm_to_mw, mw_to_dbm};

/// Outcome of one equalizer on one received waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerResult {
    pub equalizer: EqualizerConfig,
    pub ber: BerReport,
    pub symbol_errors: usize,
    pub symbols_compared: usize,
    /// Postcursor handed to the sequence detector (0 without MLSE).
    pub postcursor: f64,
    pub training_mse: f64,
    /// Lowest-overhead code whose threshold covers the measured BER.
    pub fec: Option<FecCode>,
    /// Net rate under `fec`, truncated to 0.1 Gbps.
    pub net_rate_gbps: Option<f64>,
}

/// Where and why a sweep point failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub stage: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub point: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<SweepVariable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// WDM channel or DR8 lane (1-based), when the run belongs to one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lane: Option<usize>,
    pub seed: u64,
    pub wavelength_nm: f64,
    pub launch_power_dbm: f64,
    pub received_power_dbm: f64,
    pub accumulated_dispersion_ps_nm: f64,
    pub equalizers: Vec<EqualizerResult>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<PointFailure>,
    pub config: LinkConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eye: Option<EyeHistogram>,
}

impl LinkResult {
    /// Result for `kind`, if that equalizer ran.
    pub fn equalizer(&self, kind: EqualizerKind) -> Option<&EqualizerResult> {
        self.equalizers.iter().find(|e| e.equalizer.kind == kind)
    }

    pub(crate) fn failed(point: usize, config: LinkConfig, err: &Error) -> Self {
        LinkResult {
            point,
            variable: None,
            value: None,
            lane: None,
            seed: config.link.seed,
            wavelength_nm: config.laser.wavelength_nm,
            launch_power_dbm: config.laser.power_dbm,
            received_power_dbm: f64::NAN,
            accumulated_dispersion_ps_nm: config
                .fiber
                .accumulated_dispersion(config.laser.wavelength_nm),
            equalizers: Vec::new(),
            warnings: Vec::new(),
            error: Some(PointFailure {
                stage: err.stage().map(|s| s.to_string()),
                message: err.to_string(),
            }),
            config,
            eye: None,
        }
    }
}

/// Transmitted reference and DAC output.
#[derive(Debug, Clone)]
pub struct Transmitted {
    pub bits: BitSequence,
    pub symbols: SymbolSequence,
    /// Modulator drive voltage at the simulation rate.
    pub drive: Waveform,
}

/// Photocurrent as captured by the receiver front end.
#[derive(Debug, Clone)]
pub struct Received {
    pub waveform: Waveform,
    pub received_power_dbm: f64,
}

fn load_response(r: &AnalogResponse, f_max_ghz: f64) -> Result<FrequencyResponse> {
    match r.kind {
        ResponseKind::Bessel => {
            let bt = BesselThomson::new(r.order.unwrap_or(4), r.cutoff_ghz.unwrap_or(f64::NAN))?;
            bessel_response(&bt, f_max_ghz)
        }
        ResponseKind::Table => {
            let path = r
                .path
                .as_ref()
                .ok_or_else(|| Error::invalid("path", "table response without path"))?;
            crate::io::read_response_table(path).map(|t| t.response)
        }
    }
}

/// Combined response of every analog stage at `position`.
pub fn analog_cascade(
    config: &LinkConfig,
    position: ResponsePosition,
) -> Result<Option<FrequencyResponse>> {
    let f_max = config.sim_rate() / 2.0;
    let parts: Vec<FrequencyResponse> = config
        .channel
        .responses
        .iter()
        .filter(|r| r.position == position)
        .map(|r| load_response(r, f_max))
        .collect::<Result<_>>()?;
    if parts.is_empty() {
        return Ok(None);
    }
    let refs: Vec<&FrequencyResponse> = parts.iter().collect();
    FrequencyResponse::cascade(&refs, f_max, DESIGN_GRID_POINTS).map(Some)
}

/// Bits, symbols and the modulator drive signal.
pub fn transmit(config: &LinkConfig) -> Result<Transmitted> {
    let l = &config.link;
    let (bb, bs) = l.modulation.block();
    let bits = generate_bits_with(
        l.prng,
        stream_seed(l.seed, Stream::Bits),
        l.num_symbols / bs * bb,
    )?;
    let symbols = map_symbols(&bits, l.modulation, l.symbol_rate_gbd)?;
    let mut w = resample_to_dac(&symbols, l.dac_rate_gsa)?;
    let cascade = analog_cascade(config, ResponsePosition::Tx)?;
    if config.tx.preemphasis {
        if let Some(r) = &cascade {
            w = apply_preemphasis(&w, r, config.tx.max_boost_db)?;
        }
    }
    let level = clip_threshold(w.as_real()?, config.tx.clip_ratio);
    let (clipped, level) = clip_at(&w, level)?;
    let half_scale = config.tx.full_scale_vpp / 2.0;
    let scaled = apply_gain(&clipped, 20.0 * (half_scale / level).log10())?;
    let dac = quantize(&scaled, config.tx.dac_bits, config.tx.full_scale_vpp)?;
    let mut drive = resample_waveform(&dac, config.sim_rate())?;
    if let Some(r) = &cascade {
        drive = apply_response(&drive, r)?;
    }
    let drive = apply_gain(&drive, config.channel.driver_gain_db)?;
    Ok(Transmitted {
        bits,
        symbols,
        drive,
    })
}

/// Optical path and receiver front end for `drive`, with receiver noise
/// drawn from `noise_seed`.
pub fn propagate(config: &LinkConfig, drive: &Waveform, noise_seed: u64) -> Result<Received> {
    let c = &config.channel;
    let lambda = config.laser.wavelength_nm;
    let field = mzm_modulate(drive, &c.mzm, dbm_to_mw(config.laser.power_dbm))?;
    let field = propagate_dispersion(&field, &config.fiber, lambda)?;
    let mut field = apply_gain(
        &field,
        -config.fiber.total_loss_db() - c.extra_loss_db + c.soa_gain_db,
    )?;
    if c.soa_noise_sigma > 0.0 {
        let seed = stream_seed(config.link.seed, Stream::AmplifierNoise);
        field = add_noise(&field, &NoiseSpec::white(c.soa_noise_sigma), seed)?;
    }
    if let Some(rop) = c.rop_dbm {
        let now = mw_to_dbm(field.mean_power());
        field = apply_gain(&field, rop - now)?;
    }
    let received_power_dbm = mw_to_dbm(field.mean_power());
    let mut current = photodetect(&field, &c.pd)?;
    if let Some(r) = analog_cascade(config, ResponsePosition::Rx)? {
        current = apply_response(&current, &r)?;
    }
    let current = add_noise(&current, &c.noise, noise_seed)?;
    let waveform = match config.rx.scope_rate_gsa {
        Some(rate) => resample_waveform(&current, rate)?,
        None => current,
    };
    Ok(Received {
        waveform,
        received_power_dbm,
    })
}

/// One equalizer, optional MLSE, demapping and error counting on an aligned
/// 2 samples-per-symbol waveform.
pub fn evaluate_equalizer(
    config: &LinkConfig,
    aligned: &[f64],
    tx: &Transmitted,
    eq: &EqualizerConfig,
) -> Result<(EqualizerResult, Equalized)> {
    let reference = &tx.symbols;
    let format = reference.format();
    let out = equalize(aligned, eq, reference).map_err(|e| e.at(Stage::Equalization))?;
    let (decided, postcursor) = if eq.kind.uses_mlse() {
        let train = eq.training_symbols.min(reference.len());
        let prefix = SymbolSequence::new(
            reference.indices()[..train].to_vec(),
            format,
            reference.rate(),
        )?;
        let h1 = estimate_postcursor(&out.soft[..train], &prefix)
            .map_err(|e| e.at(Stage::Equalization))?
            .clamp(-0.95, 0.95);
        (
            mlse_1tap(&out.soft, h1, format).map_err(|e| e.at(Stage::Equalization))?,
            h1,
        )
    } else {
        (out.decisions.clone(), 0.0)
    };
    let decided = SymbolSequence::new(decided, format, reference.rate())?;
    let guard = config.guard_symbols();
    let rx_bits = demap(&decided).map_err(|e| e.at(Stage::Measurement))?;
    let ber =
        measure_ber(&rx_bits, &tx.bits, guard, format).map_err(|e| e.at(Stage::Measurement))?;
    let (_, bs) = format.block();
    let g = guard.div_ceil(bs) * bs;
    let n = reference.len();
    let symbol_errors = (g..n - g)
        .filter(|&k| decided.indices()[k] != reference.indices()[k])
        .count();
    let fec = config.fec.select(ber.ber).code().cloned();
    let net = fec
        .as_ref()
        .map(|code| net_rate(config.link.symbol_rate_gbd, format, code));
    Ok((
        EqualizerResult {
            equalizer: *eq,
            ber,
            symbol_errors,
            symbols_compared: n - 2 * g,
            postcursor,
            training_mse: out.training_mse,
            fec,
            net_rate_gbps: net,
        },
        out,
    ))
}

/// Resample to 2 sps and align to the transmitted symbols.
pub fn align(received: &Waveform, tx: &Transmitted) -> Result<Vec<f64>> {
    let rs = tx.symbols.rate();
    let two = resample_to_2sps(received, rs, tx.symbols.len())
        .map_err(|e| e.at(Stage::Synchronization))?;
    let sync = synchronize(&two, &tx.symbols).map_err(|e| e.at(Stage::Synchronization))?;
    match sync.aligned.samples() {
        Samples::Real(x) => Ok(x.clone()),
        Samples::Complex(_) => unreachable!("synchronize returns a real waveform"),
    }
}

/// End-to-end simulation of one link configuration; every configured
/// equalizer sees the same received waveform.
pub fn run_link(config: &LinkConfig) -> Result<LinkResult> {
    config.validate()?;
    let tx = transmit(config).map_err(|e| e.at(Stage::Transmitter))?;
    let noise_seed = stream_seed(config.link.seed, Stream::ReceiverNoise);
    let rx = propagate(config, &tx.drive, noise_seed).map_err(|e| e.at(Stage::Channel))?;
    let aligned = align(&rx.waveform, &tx)?;
    let equalizers = config
        .rx
        .equalizers
        .iter()
        .map(|eq| evaluate_equalizer(config, &aligned, &tx, eq).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    let lambda = config.laser.wavelength_nm;
    Ok(LinkResult {
        point: 0,
        variable: None,
        value: None,
        lane: None,
        seed: config.link.seed,
        wavelength_nm: lambda,
        launch_power_dbm: config.laser.power_dbm,
        received_power_dbm: rx.received_power_dbm,
        accumulated_dispersion_ps_nm: config.fiber.accumulated_dispersion(lambda),
        equalizers,
        warnings: Vec::new(),
        error: None,
        config: config.clone(),
        eye: None,
    })
}

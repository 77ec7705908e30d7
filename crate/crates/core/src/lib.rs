//! Desk-scale simulator for high-baud-rate PAM4/6/8 intensity-modulation
//! direct-detection links.
//!
//! The crate covers the full chain: seeded bit generation and PAM mapping,
//! DAC-rate resampling with pre-emphasis, clipping and quantization; a
//! field-domain channel (MZM, dispersive fiber, square-law photodiode, colored
//! receiver noise); and a receiver with FFE, DFE and 1-tap MLSE equalizers,
//! followed by FEC threshold selection and net-rate accounting.

// `!(x > 0.0)` is the idiom for rejecting NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod fec;
pub mod fiber;
pub mod harness;
pub mod io;
pub mod laser;
pub mod modulation;
pub mod rng;
pub mod rx;
pub mod signal;
pub mod tx;
pub mod units;
pub mod wdm;

pub use error::{ConfigIssue, Error, Result, Stage};
pub use fec::{net_rate, select_fec, FecCode, FecLedger, FecVerdict};
pub use fiber::{dispersion_parameter, FiberSpec};
pub use harness::{
    eye_diagram, run_dr8, run_link, run_wdm, sweep, sweep_temperature, EyeHistogram, LinkConfig,
    LinkResult, SweepSpec, SweepVariable,
};
pub use io::{emit_results, parse_config, parse_response_table, ConfigDocument, OutputFormat};
pub use laser::{wavelength_from_temperature, LaserSpec};
pub use modulation::ModulationFormat;
pub use rx::{BerReport, EqualizerConfig, EqualizerKind};
pub use signal::{Origin, Samples, Waveform};
pub use wdm::{build_wdm_grid, WdmChannel, WdmChannelPlan};

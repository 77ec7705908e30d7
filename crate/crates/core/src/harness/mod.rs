//! Experiment orchestration: end-to-end link runs, parameter sweeps, the
//! WDM and DR8 campaigns, temperature sweeps and eye diagrams.

mod config;
mod eye;
mod link;
mod sweep;

pub use config::{
    AnalogResponse, ChannelSettings, LinkConfig, LinkParams, ResponseKind, ResponsePosition,
    RxSettings, TxSettings, MIN_SYMBOLS,
};
pub use eye::{eye_diagram, link_eye, EyeHistogram, MIN_EYE_SYMBOLS};
pub use link::{
    align, analog_cascade, evaluate_equalizer, propagate, run_link, transmit, EqualizerResult,
    LinkResult, PointFailure, Received, Transmitted,
};
pub use sweep::{
    dr8_lane_power_dbm, run_dr8, run_wdm, sweep, sweep_temperature, Dr8Settings, SweepSpec,
    SweepVariable, WdmSettings, DR8_LANES, DR8_V_PI_V,
};

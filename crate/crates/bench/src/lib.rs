//! Fixtures shared by the benchmarks.

use pamlink::harness::{align, propagate, transmit, Transmitted};
use pamlink::rng::{stream_seed, Stream};
use pamlink::{EqualizerConfig, EqualizerKind, LinkConfig};

/// The default link at `num_symbols`, one DFE.
pub fn link(num_symbols: usize) -> LinkConfig {
    let mut c = LinkConfig::default();
    c.link.num_symbols = num_symbols;
    c.rx.equalizers = vec![EqualizerConfig::new(EqualizerKind::Dfe)];
    c
}

/// Transmitted block and its aligned 2 samples-per-symbol reception.
pub fn received(config: &LinkConfig) -> (Transmitted, Vec<f64>) {
    let tx = transmit(config).expect("transmit");
    let rx = propagate(
        config,
        &tx.drive,
        stream_seed(config.link.seed, Stream::ReceiverNoise),
    )
    .expect("propagate");
    let x = align(&rx.waveform, &tx).expect("align");
    (tx, x)
}

//! End-to-end behaviour of the harness on the shipped scenario files.

use std::path::{Path, PathBuf};

use pamlink::fec::{net_rate, select_fec};
use pamlink::harness::{align, evaluate_equalizer, propagate, run_dr8, run_wdm, transmit};
use pamlink::io::{emit_results, load_config, ConfigDocument, OutputFormat};
use pamlink::rng::{stream_seed, Stream};
use pamlink::{
    build_wdm_grid, run_link, sweep, sweep_temperature, EqualizerConfig, EqualizerKind, LinkConfig,
    ModulationFormat, SweepSpec, SweepVariable,
};

fn scenario(name: &str) -> ConfigDocument {
    let p: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// The default scenario at CI length.
fn short_default() -> LinkConfig {
    let mut c = scenario("default.toml").link_config();
    c.link.num_symbols = 1 << 16;
    c
}

fn dfe_ber(c: &LinkConfig) -> f64 {
    let r = run_link(c).unwrap();
    r.equalizer(EqualizerKind::Dfe).unwrap().ber.ber
}

#[test]
fn every_shipped_scenario_validates() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let doc = load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            assert!(
                doc.issues().is_empty(),
                "{}: {:?}",
                p.display(),
                doc.issues()
            );
            n += 1;
        }
    }
    assert!(n >= 6);
}

#[test]
fn ber_non_decreasing_in_symbol_rate() {
    let mut base = short_default();
    base.rx.equalizers = vec![EqualizerConfig::new(EqualizerKind::Dfe)];
    let spec = SweepSpec::new(
        base,
        SweepVariable::SymbolRate,
        vec![150.0, 175.0, 200.0, 225.0],
    );
    let results = sweep(&spec, None).unwrap();
    let bers: Vec<f64> = results
        .iter()
        .map(|r| r.equalizer(EqualizerKind::Dfe).unwrap().ber.upper_bound())
        .collect();
    for w in bers.windows(2) {
        assert!(w[1] >= w[0], "{bers:?}");
    }
}

#[test]
fn pam8_is_worse_than_pam4() {
    let c = short_default();
    let mut c8 = c.clone();
    c8.link.modulation = ModulationFormat::Pam8;
    assert!(dfe_ber(&c8) > dfe_ber(&c));
}

#[test]
fn ber_non_increasing_in_rop() {
    let mut base = short_default();
    base.rx.equalizers = vec![EqualizerConfig::new(EqualizerKind::Dfe)];
    let spec = SweepSpec::new(base, SweepVariable::Rop, vec![2.0, 4.0, 6.0, 8.0]);
    let bers: Vec<f64> = sweep(&spec, None)
        .unwrap()
        .iter()
        .map(|r| r.equalizer(EqualizerKind::Dfe).unwrap().ber.ber)
        .collect();
    for w in bers.windows(2) {
        assert!(w[1] <= w[0], "{bers:?}");
    }
}

#[test]
fn forced_decision_error_propagates_only_through_feedback() {
    let c = short_default();
    let tx = transmit(&c).unwrap();
    let rx = propagate(
        &c,
        &tx.drive,
        stream_seed(c.link.seed, Stream::ReceiverNoise),
    )
    .unwrap();
    let x = align(&rx.waveform, &tx).unwrap();
    let truth = tx.symbols.indices();
    let extra = |kind| {
        let (_, out) = evaluate_equalizer(&c, &x, &tx, &EqualizerConfig::new(kind)).unwrap();
        let (clean_soft, clean) = out.engine.run_fixed(&x, &tx.symbols, None);
        let mut added = 0usize;
        let mut soft_changed = 0usize;
        for at in (1000..60000).step_by(500) {
            let wrong = if truth[at] == 0 { 1 } else { truth[at] - 1 };
            let (soft, dec) = out.engine.run_fixed(&x, &tx.symbols, Some((at, wrong)));
            let window = at + 1..at + 40;
            let errs = |d: &[u8]| window.clone().filter(|&k| d[k] != truth[k]).count();
            added += errs(&dec).saturating_sub(errs(&clean));
            soft_changed += usize::from(soft[at + 1] != clean_soft[at + 1]);
        }
        (added, soft_changed)
    };
    let (ffe_added, ffe_changed) = extra(EqualizerKind::Ffe);
    let (dfe_added, dfe_changed) = extra(EqualizerKind::Dfe);
    assert_eq!((ffe_added, ffe_changed), (0, 0));
    assert!(dfe_changed > 100, "{dfe_changed}");
    assert!(dfe_added > 0, "no propagated errors");
}

#[test]
fn verdicts_match_fec_arithmetic() {
    let c = short_default();
    let r = run_link(&c).unwrap();
    for e in &r.equalizers {
        let verdict = select_fec(e.ber.ber, c.fec.codes());
        assert_eq!(e.fec.as_ref(), verdict.code());
        let expected = verdict
            .code()
            .map(|code| net_rate(c.link.symbol_rate_gbd, c.link.modulation, code));
        assert_eq!(e.net_rate_gbps, expected);
        assert_eq!(
            e.ber.ber,
            e.ber.bit_errors as f64 / e.ber.bits_compared as f64
        );
    }
}

#[test]
fn dr8_lane_budget_and_range() {
    let mut c = scenario("dr8_500m_temperature.toml").link_config();
    c.link.num_symbols = 1 << 14;
    let r = run_dr8(&c, 3, 23.0, 0.0).unwrap();
    assert_eq!(r.lane, Some(3));
    assert!(
        (r.launch_power_dbm - 13.97).abs() < 0.005,
        "{}",
        r.launch_power_dbm
    );
    assert!(run_dr8(&c, 9, 23.0, 0.0).is_err());
    assert!(run_dr8(&c, 0, 23.0, 0.0).is_err());
}

#[test]
fn wdm_delay_zero_warns_and_centre_has_least_dispersion() {
    let mut c = short_default();
    c.link.num_symbols = 1 << 14;
    c.fiber.length_km = 2.0;
    let plan = build_wdm_grid(1295.56, 400.0, 8).unwrap();
    let r = run_wdm(&c, &plan, 7, 0).unwrap();
    assert!(
        r.warnings.iter().any(|w| w.contains("decorrelation")),
        "{:?}",
        r.warnings
    );
    let edge = run_wdm(&c, &plan, 1, 1024).unwrap();
    assert!(r.accumulated_dispersion_ps_nm.abs() < edge.accumulated_dispersion_ps_nm.abs());
    assert!(plan.channels.iter().all(|ch| {
        c.fiber.accumulated_dispersion(ch.wavelength_nm).abs()
            >= r.accumulated_dispersion_ps_nm.abs()
    }));
}

#[test]
fn constant_wavelength_laser_isolates_ripple() {
    let mut c = scenario("dr8_500m_temperature.toml").link_config();
    c.link.num_symbols = 1 << 14;
    let w = c.laser.calibration[0].wavelength_nm;
    c.laser.calibration[1].wavelength_nm = w + 1e-9;
    let results = sweep_temperature(&c, &[30.0, 50.0, 70.0], None).unwrap();
    let d0 = results[0].accumulated_dispersion_ps_nm;
    for r in &results {
        assert!((r.wavelength_nm - w).abs() < 1e-6);
        assert!((r.accumulated_dispersion_ps_nm - d0).abs() < 1e-6);
    }
    let powers: Vec<f64> = results.iter().map(|r| r.launch_power_dbm).collect();
    assert!(
        powers.windows(2).any(|p| p[0] != p[1]),
        "ripple missing: {powers:?}"
    );
}

#[test]
fn repeated_runs_are_identical() {
    let mut c = short_default();
    c.link.num_symbols = 1 << 14;
    let a = run_link(&c).unwrap();
    let b = run_link(&c).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scenario_results_emit_to_disk() {
    let mut doc = scenario("rop_sweep.toml");
    doc.link.num_symbols = 1 << 14;
    let mut spec = doc.sweep_spec().unwrap();
    spec.values.truncate(2);
    let results = sweep(&spec, Some(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_results(&results, OutputFormat::Both, dir.path()).unwrap();
    assert!(!written.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert_eq!(json["results"].as_array().unwrap().len(), 2);
}

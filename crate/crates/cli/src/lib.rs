//! Command-line front end: argument parsing and subcommand dispatch.
//!
//! Every subcommand returns a process exit status: 0 on success, 1 on any
//! error (missing file, invalid configuration, failed run), 2 on usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pamlink::fec::{aggregate_rate_tbps, net_rate};
use pamlink::harness::{link_eye, SweepVariable, DR8_LANES};
use pamlink::io::{
    effective_toml, emit_results, load_config, read_response_table, render_eye_matrix,
};
use pamlink::{
    run_link, sweep, ConfigDocument, EqualizerConfig, EqualizerKind, Error, FecVerdict, LinkResult,
    ModulationFormat, OutputFormat, SweepSpec,
};

#[derive(Debug, Parser)]
#[command(name = "pamlink", version, about = "IM/DD PAM link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the single link described by the config.
    Run(SimArgs),
    /// Run the `[sweep]` section of the config.
    Sweep(SimArgs),
    /// Iterate the channel under test over the `[wdm]` grid.
    Wdm {
        #[command(flatten)]
        sim: SimArgs,
        /// Only these channels (1-based); default all.
        #[arg(long = "channel", value_delimiter = ',')]
        channels: Vec<usize>,
    },
    /// Run the eight DR8 lanes from the `[dr8]` budget.
    Dr8 {
        #[command(flatten)]
        sim: SimArgs,
        /// Only these lanes (1-based); default all eight.
        #[arg(long = "lane", value_delimiter = ',')]
        lanes: Vec<usize>,
    },
    /// Capture an eye histogram of the received signal.
    Eye {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10)]
        averages: usize,
        #[arg(long, default_value_t = 64)]
        time_bins: usize,
        #[arg(long, default_value_t = 128)]
        amplitude_bins: usize,
        /// Pass the capture through a trained FFE of this kind first.
        #[arg(long)]
        equalizer: Option<EqualizerKind>,
    },
    /// FEC code and net rate for a BER, without simulation.
    Fec {
        #[arg(long)]
        ber: f64,
        #[arg(long)]
        baud: f64,
        /// Modulation format (pam4, pam6, pam8).
        #[arg(long, default_value = "pam4")]
        format: ModulationFormat,
        /// Also report the aggregate over this many lanes.
        #[arg(long)]
        lanes: Option<usize>,
        /// Take the FEC ledger from this config instead of the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Parse and validate a config, then print the effective document.
    Validate {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
        #[arg(long = "config", value_name = "CONFIG")]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(value_name = "CONFIG")]
    path: Option<PathBuf>,
    #[arg(long = "config", value_name = "CONFIG")]
    config: Option<PathBuf>,
    /// Override `link.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// tabular (csv), structured (json) or both.
    #[arg(long, default_value = "both")]
    format: OutputFormat,
    /// Worker threads; default is one per core.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Reports to the user; carries the exit status.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn config_path(path: &Option<PathBuf>, flag: &Option<PathBuf>) -> Result<PathBuf, Failure> {
    match (path, flag) {
        (Some(_), Some(_)) => Err(Failure(
            "give the config either positionally or with --config, not both".into(),
        )),
        (Some(p), None) | (None, Some(p)) => Ok(p.clone()),
        (None, None) => Err(Failure("no config file given".into())),
    }
}

fn load(common: &CommonArgs) -> Result<ConfigDocument, Failure> {
    let path = config_path(&common.path, &common.config)?;
    let mut doc = load_config(&path)?;
    if let Some(seed) = common.seed {
        doc.link.seed = seed;
    }
    let issues = doc.issues();
    if !issues.is_empty() {
        return Err(Error::Config(issues).into());
    }
    Ok(doc)
}

fn report(out: &mut dyn Write, results: &[LinkResult]) -> std::io::Result<()> {
    for r in results {
        let label = match (r.variable, r.value) {
            (Some(v), Some(x)) => format!("{}={x}", v.label()),
            _ => format!("point {}", r.point),
        };
        if let Some(e) = &r.error {
            writeln!(out, "{label}: failed: {}", e.message)?;
            continue;
        }
        for e in &r.equalizers {
            let fec = match (&e.fec, e.net_rate_gbps) {
                (Some(code), Some(rate)) => {
                    format!("{} {} OH, {rate:.1} Gbps", code.name, code.overhead_label())
                }
                _ => "no FEC".into(),
            };
            writeln!(
                out,
                "{label}: {:<10} BER {:.3e} ({} / {} bits), {fec}",
                e.equalizer.kind.to_string(),
                e.ber.upper_bound(),
                e.ber.bit_errors,
                e.ber.bits_compared
            )?;
        }
        for w in &r.warnings {
            writeln!(out, "{label}: warning: {w}")?;
        }
    }
    Ok(())
}

fn simulate(out: &mut dyn Write, sim: &SimArgs, results: Vec<LinkResult>) -> Outcome {
    report(out, &results).map_err(|e| Failure(e.to_string()))?;
    let written = emit_results(&results, sim.format, &sim.common.out_dir)?;
    for p in written {
        writeln!(out, "wrote {}", p.display()).map_err(|e| Failure(e.to_string()))?;
    }
    match results.iter().find_map(|r| r.error.as_ref()) {
        Some(e) => Err(Failure(format!("at least one point failed: {}", e.message))),
        None => Ok(()),
    }
}

fn run_spec(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<LinkResult>, Failure> {
    spec.validate()?;
    Ok(sweep(spec, jobs)?)
}

fn cmd_run(out: &mut dyn Write, sim: &SimArgs) -> Outcome {
    let doc = load(&sim.common)?;
    let results = vec![run_link(&doc.link_config())?];
    simulate(out, sim, results)
}

fn cmd_sweep(out: &mut dyn Write, sim: &SimArgs) -> Outcome {
    let doc = load(&sim.common)?;
    let spec = doc
        .sweep_spec()
        .ok_or_else(|| Failure("config has no [sweep] section".into()))?;
    simulate(out, sim, run_spec(&spec, sim.jobs)?)
}

fn indices(selected: &[usize], all: usize) -> Vec<f64> {
    if selected.is_empty() {
        (1..=all).map(|i| i as f64).collect()
    } else {
        selected.iter().map(|&i| i as f64).collect()
    }
}

fn cmd_wdm(out: &mut dyn Write, sim: &SimArgs, channels: &[usize]) -> Outcome {
    let doc = load(&sim.common)?;
    let wdm = doc
        .wdm
        .clone()
        .ok_or_else(|| Failure("config has no [wdm] section".into()))?;
    let mut spec = SweepSpec::new(
        doc.link_config(),
        SweepVariable::WdmChannel,
        indices(channels, wdm.channels),
    );
    spec.wdm = Some(wdm);
    simulate(out, sim, run_spec(&spec, sim.jobs)?)
}

fn cmd_dr8(out: &mut dyn Write, sim: &SimArgs, lanes: &[usize]) -> Outcome {
    let doc = load(&sim.common)?;
    let mut spec = SweepSpec::new(
        doc.link_config(),
        SweepVariable::Dr8Lane,
        indices(lanes, DR8_LANES),
    );
    spec.dr8 = Some(doc.dr8.clone().unwrap_or_default());
    simulate(out, sim, run_spec(&spec, sim.jobs)?)
}

fn cmd_eye(
    out: &mut dyn Write,
    common: &CommonArgs,
    averages: usize,
    bins: (usize, usize),
    equalizer: Option<EqualizerKind>,
) -> Outcome {
    let doc = load(common)?;
    let eq = equalizer.map(EqualizerConfig::new);
    let eye = link_eye(&doc.link_config(), averages, bins, eq.as_ref())?;
    std::fs::create_dir_all(&common.out_dir)
        .map_err(|e| Failure(format!("{}: {e}", common.out_dir.display())))?;
    let path = common.out_dir.join("eye.txt");
    std::fs::write(&path, render_eye_matrix(&eye))
        .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    writeln!(out, "wrote {}", path.display()).map_err(|e| Failure(e.to_string()))?;
    Ok(())
}

fn cmd_fec(
    out: &mut dyn Write,
    ber: f64,
    baud: f64,
    format: ModulationFormat,
    lanes: Option<usize>,
    config: Option<&Path>,
) -> Outcome {
    if !(0.0..0.5).contains(&ber) {
        return Err(Failure(format!("--ber must lie in [0, 0.5), got {ber}")));
    }
    if baud.is_nan() || baud <= 0.0 || baud.is_infinite() {
        return Err(Failure(format!("--baud must be > 0, got {baud}")));
    }
    let ledger = match config {
        Some(p) => load_config(p)?.fec,
        None => Default::default(),
    };
    match ledger.select(ber) {
        FecVerdict::Recoverable(code) => {
            let rate = net_rate(baud, format, &code);
            let mut line = format!("{} OH, {rate:.1} Gbps", code.overhead_label());
            if let Some(n) = lanes {
                line.push_str(&format!(
                    ", {n} x {rate:.1} = {:.2} Tbps",
                    aggregate_rate_tbps(n, rate)
                ));
            }
            writeln!(out, "{line}").map_err(|e| Failure(e.to_string()))?;
            Ok(())
        }
        FecVerdict::Unrecoverable => Err(Failure(format!(
            "BER {ber:e} is above every FEC threshold in the ledger"
        ))),
    }
}

fn cmd_validate(
    out: &mut dyn Write,
    err: &mut dyn Write,
    path: &Option<PathBuf>,
    flag: &Option<PathBuf>,
) -> Outcome {
    let path = config_path(path, flag)?;
    let doc = load_config(&path)?;
    let issues = doc.issues();
    if !issues.is_empty() {
        return Err(Error::Config(issues).into());
    }
    for r in &doc.channel.responses {
        if let Some(p) = &r.path {
            for w in read_response_table(p)?.warnings {
                let _ = writeln!(err, "warning: {}: {w}", p.display());
            }
        }
    }
    let text = effective_toml(&doc)?;
    out.write_all(text.as_bytes())
        .map_err(|e| Failure(e.to_string()))?;
    Ok(())
}

/// Parses `argv` (program name first) and runs the subcommand, writing
/// normal output to `out` and diagnostics to `err`. Returns the exit status.
pub fn dispatch_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Run(sim) => cmd_run(out, sim),
        Command::Sweep(sim) => cmd_sweep(out, sim),
        Command::Wdm { sim, channels } => cmd_wdm(out, sim, channels),
        Command::Dr8 { sim, lanes } => cmd_dr8(out, sim, lanes),
        Command::Eye {
            common,
            averages,
            time_bins,
            amplitude_bins,
            equalizer,
        } => cmd_eye(
            out,
            common,
            *averages,
            (*time_bins, *amplitude_bins),
            *equalizer,
        ),
        Command::Fec {
            ber,
            baud,
            format,
            lanes,
            config,
        } => cmd_fec(out, *ber, *baud, *format, *lanes, config.as_deref()),
        Command::Validate { path, config } => cmd_validate(out, err, path, config),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

/// [`dispatch_with`] on the process's stdout and stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    dispatch_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = dispatch_with(
            std::iter::once("pamlink").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn fec_table_row() {
        let (code, out, _) = call(&["fec", "--ber", "4e-3", "--baud", "225", "--format", "pam4"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "7% OH, 420.5 Gbps");
    }

    #[test]
    fn fec_with_lanes() {
        let (code, out, _) = call(&["fec", "--ber", "4e-3", "--baud", "225", "--lanes", "8"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "7% OH, 420.5 Gbps, 8 x 420.5 = 3.36 Tbps");
    }

    #[test]
    fn unrecoverable_ber_fails() {
        let (code, _, err) = call(&["fec", "--ber", "0.1", "--baud", "225"]);
        assert_eq!(code, 1);
        assert!(err.contains("above every FEC threshold"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&[]).0, 2);
        assert_eq!(call(&["fec", "--baud", "225"]).0, 2);
    }

    #[test]
    fn both_config_forms_rejected_together() {
        let (code, _, err) = call(&["validate", "a.toml", "--config", "b.toml"]);
        assert_eq!(code, 1);
        assert!(err.contains("not both"));
    }
}

//! Result serialization.
//!
//! Both formats are rendered from the same rounded values, so a number that
//! appears in the table and in the structured document is the same `f64`.
//! Precision rules: BER to 3 significant digits (with raw error and bit
//! counts alongside), rates truncated to 0.1 Gbps, aggregates to 0.01 Tbps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fec::{aggregate_rate_tbps, net_rate, select_fec, FecCode, FecVerdict};
use crate::harness::{EqualizerResult, EyeHistogram, LinkConfig, LinkResult, SweepVariable};
use crate::io::config::SCHEMA_VERSION;
use crate::modulation::ModulationFormat;
use crate::rx::EqualizerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Tabular,
    Structured,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tabular" | "csv" => Ok(Self::Tabular),
            "structured" | "json" => Ok(Self::Structured),
            "both" => Ok(Self::Both),
            _ => Err(format!(
                "unknown output format `{s}` (expected tabular, structured or both)"
            )),
        }
    }
}

/// `x` rounded to 3 significant digits.
pub fn round_ber(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.2e}").parse().expect("formatted float parses")
}

fn round_dp(x: f64, decimals: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.decimals$}")
        .parse()
        .expect("formatted float parses")
}

fn fmt_ber(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.2e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| {
        if v.is_finite() {
            format!("{v}")
        } else {
            String::new()
        }
    })
}

fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// Per-equalizer row shared by both formats.
#[derive(Debug, Clone, Serialize)]
struct EqualizerRecord {
    equalizer: EqualizerKind,
    bit_errors: usize,
    bits_compared: usize,
    ber: f64,
    /// True when no errors were seen and `ber` is the 3/bits bound.
    ber_is_upper_bound: bool,
    symbol_errors: usize,
    symbols_compared: usize,
    postcursor: f64,
    training_mse: f64,
    fec: Option<FecCode>,
    net_rate_gbps: Option<f64>,
}

impl EqualizerRecord {
    fn new(e: &EqualizerResult) -> Self {
        let bound = e.ber.bit_errors == 0;
        EqualizerRecord {
            equalizer: e.equalizer.kind,
            bit_errors: e.ber.bit_errors,
            bits_compared: e.ber.bits_compared,
            ber: round_ber(e.ber.upper_bound()),
            ber_is_upper_bound: bound,
            symbol_errors: e.symbol_errors,
            symbols_compared: e.symbols_compared,
            postcursor: round_dp(e.postcursor, 6),
            training_mse: round_ber(e.training_mse),
            fec: e.fec.clone(),
            net_rate_gbps: e.net_rate_gbps,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ResultRecord<'a> {
    point: usize,
    variable: Option<SweepVariable>,
    value: Option<f64>,
    lane: Option<usize>,
    seed: u64,
    modulation: ModulationFormat,
    symbol_rate_gbd: f64,
    wavelength_nm: f64,
    launch_power_dbm: f64,
    received_power_dbm: Option<f64>,
    accumulated_dispersion_ps_nm: f64,
    equalizers: Vec<EqualizerRecord>,
    warnings: &'a [String],
    error: Option<String>,
    config: &'a LinkConfig,
}

impl<'a> ResultRecord<'a> {
    fn new(r: &'a LinkResult) -> Self {
        ResultRecord {
            point: r.point,
            variable: r.variable,
            value: r.value,
            lane: r.lane,
            seed: r.seed,
            modulation: r.config.link.modulation,
            symbol_rate_gbd: r.config.link.symbol_rate_gbd,
            wavelength_nm: round_dp(r.wavelength_nm, 4),
            launch_power_dbm: round_dp(r.launch_power_dbm, 3),
            received_power_dbm: Some(round_dp(r.received_power_dbm, 3)).filter(|v| v.is_finite()),
            accumulated_dispersion_ps_nm: round_dp(r.accumulated_dispersion_ps_nm, 4),
            equalizers: r.equalizers.iter().map(EqualizerRecord::new).collect(),
            warnings: &r.warnings,
            error: r.error.as_ref().map(|e| e.message.clone()),
            config: &r.config,
        }
    }
}

/// One Table-1 style row: the worst lane of a group decides the code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variable: Option<SweepVariable>,
    pub modulation: ModulationFormat,
    pub symbol_rate_gbd: f64,
    pub equalizer: EqualizerKind,
    pub lanes: usize,
    /// Highest BER over the lanes (3 significant digits).
    pub worst_ber: f64,
    pub fec: Option<String>,
    pub fec_overhead: Option<f64>,
    pub ber_threshold: Option<f64>,
    pub net_rate_gbps: Option<f64>,
    pub aggregate_tbps: Option<f64>,
}

/// Groups lane results (WDM channels, DR8 lanes) that share format, rate and
/// equalizer; every other result is its own single-lane group.
pub fn summarize(results: &[LinkResult]) -> Vec<SummaryRow> {
    // (variable, format, rate, equalizer, lane BERs, first result)
    type Group<'a> = (
        Option<SweepVariable>,
        ModulationFormat,
        f64,
        EqualizerKind,
        Vec<f64>,
        &'a LinkResult,
    );
    let mut groups: Vec<Group> = Vec::new();
    for r in results.iter().filter(|r| r.error.is_none()) {
        for e in &r.equalizers {
            let key = (
                r.config.link.modulation,
                r.config.link.symbol_rate_gbd,
                e.equalizer.kind,
            );
            let ber = e.ber.upper_bound();
            let existing = r.lane.and_then(|_| {
                groups
                    .iter_mut()
                    .find(|g| g.5.lane.is_some() && g.0 == r.variable && (g.1, g.2, g.3) == key)
            });
            match existing {
                Some(g) => g.4.push(ber),
                None => groups.push((r.variable, key.0, key.1, key.2, vec![ber], r)),
            }
        }
    }
    groups
        .into_iter()
        .map(|(variable, modulation, rate, equalizer, bers, first)| {
            let worst = bers.iter().copied().fold(0.0, f64::max);
            let verdict = select_fec(worst, first.config.fec.codes());
            let (fec, net, agg) = match verdict {
                FecVerdict::Recoverable(code) => {
                    let net = net_rate(rate, modulation, &code);
                    let agg = aggregate_rate_tbps(bers.len(), net);
                    (Some(code), Some(net), Some(agg))
                }
                FecVerdict::Unrecoverable => (None, None, None),
            };
            SummaryRow {
                variable,
                modulation,
                symbol_rate_gbd: rate,
                equalizer,
                lanes: bers.len(),
                worst_ber: round_ber(worst),
                fec_overhead: fec.as_ref().map(|c| c.overhead),
                ber_threshold: fec.as_ref().map(|c| c.ber_threshold),
                fec: fec.map(|c| c.name),
                net_rate_gbps: net,
                aggregate_tbps: agg,
            }
        })
        .collect()
}

/// Column order of [`render_csv`].
pub const RESULT_COLUMNS: &[&str] = &[
    "point",
    "variable",
    "value",
    "lane",
    "seed",
    "modulation",
    "symbol_rate_gbd",
    "wavelength_nm",
    "launch_power_dbm",
    "received_power_dbm",
    "accumulated_dispersion_ps_nm",
    "equalizer",
    "bit_errors",
    "bits_compared",
    "ber",
    "ber_is_upper_bound",
    "symbol_errors",
    "symbols_compared",
    "fec",
    "fec_overhead",
    "ber_threshold",
    "net_rate_gbps",
    "error",
];

/// Column order of [`render_summary_csv`], following the rate table layout.
pub const SUMMARY_COLUMNS: &[&str] = &[
    "ber_threshold",
    "fec",
    "fec_overhead",
    "symbol_rate_gbd",
    "modulation",
    "equalizer",
    "lanes",
    "worst_ber",
    "net_rate_gbps",
    "aggregate_tbps",
];

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per (result, equalizer); failed points get one row with the
/// error and empty measurement columns.
pub fn render_csv(results: &[LinkResult]) -> String {
    let mut out = RESULT_COLUMNS.join(",");
    out.push('\n');
    for r in results {
        let rec = ResultRecord::new(r);
        let head = [
            rec.point.to_string(),
            rec.variable
                .map_or(String::new(), |v| v.label().to_string()),
            fmt_opt(rec.value),
            rec.lane.map_or(String::new(), |l| l.to_string()),
            rec.seed.to_string(),
            rec.modulation.to_string(),
            fmt_f(rec.symbol_rate_gbd),
            fmt_f(rec.wavelength_nm),
            fmt_f(rec.launch_power_dbm),
            fmt_opt(rec.received_power_dbm),
            fmt_f(rec.accumulated_dispersion_ps_nm),
        ]
        .join(",");
        let error = csv_text(rec.error.as_deref().unwrap_or(""));
        if rec.equalizers.is_empty() {
            let _ = writeln!(
                out,
                "{head},{}{error}",
                ",".repeat(RESULT_COLUMNS.len() - 12)
            );
        }
        for e in &rec.equalizers {
            let _ = writeln!(
                out,
                "{head},{},{},{},{},{},{},{},{},{},{},{},{}",
                e.equalizer,
                e.bit_errors,
                e.bits_compared,
                fmt_ber(e.ber),
                e.ber_is_upper_bound,
                e.symbol_errors,
                e.symbols_compared,
                e.fec.as_ref().map_or(String::new(), |c| csv_text(&c.name)),
                fmt_opt(e.fec.as_ref().map(|c| c.overhead)),
                fmt_opt(e.fec.as_ref().map(|c| c.ber_threshold)),
                e.net_rate_gbps.map_or(String::new(), |v| format!("{v:.1}")),
                error,
            );
        }
    }
    out
}

pub fn render_summary_csv(results: &[LinkResult]) -> String {
    let mut out = SUMMARY_COLUMNS.join(",");
    out.push('\n');
    for s in summarize(results) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_opt(s.ber_threshold),
            s.fec.as_deref().map_or(String::new(), csv_text),
            fmt_opt(s.fec_overhead),
            fmt_f(s.symbol_rate_gbd),
            s.modulation,
            s.equalizer,
            s.lanes,
            fmt_ber(s.worst_ber),
            s.net_rate_gbps.map_or(String::new(), |v| format!("{v:.1}")),
            s.aggregate_tbps
                .map_or(String::new(), |v| format!("{v:.2}")),
        );
    }
    out
}

#[derive(Serialize)]
struct Document<'a> {
    schema_version: u32,
    generator: &'static str,
    results: Vec<ResultRecord<'a>>,
    summary: Vec<SummaryRow>,
}

/// Self-describing JSON document: config snapshots, seeds, error counts and
/// the rate summary.
pub fn render_json(results: &[LinkResult]) -> Result<String> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        generator: concat!("pamlink ", env!("CARGO_PKG_VERSION")),
        results: results.iter().map(ResultRecord::new).collect(),
        summary: summarize(results),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Plain-text matrix: `#` metadata lines, then one row per amplitude bin
/// (highest amplitude first) with one column per time bin. The time axis
/// spans two unit intervals.
pub fn render_eye_matrix(eye: &EyeHistogram) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# eye histogram, rows = amplitude (high to low), columns = time over 2 UI"
    );
    let _ = writeln!(out, "# symbol_rate_gbd {}", eye.symbol_rate_gbd);
    let _ = writeln!(out, "# averages {}", eye.averages);
    let _ = writeln!(
        out,
        "# amplitude_range {} {}",
        eye.amplitude_min, eye.amplitude_max
    );
    let _ = writeln!(out, "# dimensions {} {}", eye.amplitude_bins, eye.time_bins);
    for a in (0..eye.amplitude_bins).rev() {
        let row: Vec<String> = (0..eye.time_bins)
            .map(|t| eye.count(t, a).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

/// Writes `results.csv` and `summary.csv` (tabular) and/or `results.json`
/// (structured) into `out_dir`, plus `eye_<point>.txt` for every result
/// carrying an eye. Returns the files written.
pub fn emit_results(
    results: &[LinkResult],
    format: OutputFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::invalid("results", "nothing to emit"));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Tabular | OutputFormat::Both) {
        write(
            out_dir.join("results.csv"),
            &render_csv(results),
            &mut written,
        )?;
        write(
            out_dir.join("summary.csv"),
            &render_summary_csv(results),
            &mut written,
        )?;
    }
    if matches!(format, OutputFormat::Structured | OutputFormat::Both) {
        write(
            out_dir.join("results.json"),
            &render_json(results)?,
            &mut written,
        )?;
    }
    for r in results {
        if let Some(eye) = &r.eye {
            write(
                out_dir.join(format!("eye_{}.txt", r.point)),
                &render_eye_matrix(eye),
                &mut written,
            )?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rx::{BerReport, EqualizerConfig};

    fn result(lane: Option<usize>, bit_errors: usize) -> LinkResult {
        let config = LinkConfig::default();
        let bits = 262_144;
        let ber = BerReport {
            bit_errors,
            bits_compared: bits,
            ber: bit_errors as f64 / bits as f64,
        };
        let code = select_fec(ber.ber, config.fec.codes()).code().cloned();
        LinkResult {
            point: lane.unwrap_or(1) - 1,
            variable: lane.map(|_| SweepVariable::Dr8Lane),
            value: lane.map(|l| l as f64),
            lane,
            seed: 11,
            wavelength_nm: 1310.0,
            launch_power_dbm: 13.9794,
            received_power_dbm: 8.123456,
            accumulated_dispersion_ps_nm: 0.0,
            equalizers: vec![EqualizerResult {
                equalizer: EqualizerConfig::new(EqualizerKind::Dfe),
                net_rate_gbps: code
                    .as_ref()
                    .map(|c| net_rate(225.0, ModulationFormat::Pam4, c)),
                fec: code,
                ber,
                symbol_errors: bit_errors,
                symbols_compared: bits / 2,
                postcursor: 0.0,
                training_mse: 0.01,
            }],
            warnings: vec![],
            error: None,
            config,
            eye: None,
        }
    }

    #[test]
    fn ber_keeps_three_digits() {
        assert_eq!(round_ber(1.23456e-4), 1.23e-4);
        assert_eq!(round_ber(9.996e-3), 1.0e-2);
        assert_eq!(fmt_ber(round_ber(4.5e-3)), "4.50e-3");
    }

    #[test]
    fn dr8_aggregate_row() {
        // Worst lane at 1000 errors (3.8e-3) selects the 7% code.
        let results: Vec<LinkResult> = (1..=8).map(|l| result(Some(l), 100 * l + 200)).collect();
        let rows = summarize(&results);
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.lanes, 8);
        assert_eq!(row.fec_overhead, Some(0.07));
        assert_eq!(row.net_rate_gbps, Some(420.5));
        assert_eq!(row.aggregate_tbps, Some(3.36));
        let csv = render_summary_csv(&results);
        assert!(
            csv.lines()
                .nth(1)
                .unwrap()
                .ends_with(",8,3.81e-3,420.5,3.36"),
            "{csv}"
        );
    }

    #[test]
    fn single_result_one_row() {
        let csv = render_csv(&[result(None, 5)]);
        assert_eq!(csv.lines().count(), 2);
        let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(header.len(), row.len());
    }

    #[test]
    fn formats_agree_on_shared_fields() {
        let results = vec![result(None, 7), result(Some(2), 0)];
        let csv = render_csv(&results);
        let json: serde_json::Value =
            serde_json::from_str(&render_json(&results).unwrap()).unwrap();
        let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        for (i, line) in csv.lines().skip(1).enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            let rec = &json["results"][i];
            let eq = &rec["equalizers"][0];
            for (col, cell) in header.iter().zip(&cells) {
                let j = if eq.get(*col).is_some() {
                    &eq[*col]
                } else {
                    &rec[*col]
                };
                if let (Ok(x), Some(y)) = (cell.parse::<f64>(), j.as_f64()) {
                    assert_eq!(x, y, "{col}");
                }
            }
        }
        assert_eq!(
            json["results"][1]["equalizers"][0]["ber_is_upper_bound"],
            true
        );
    }

    #[test]
    fn emission_is_byte_stable() {
        let results = vec![result(None, 3)];
        assert_eq!(
            render_json(&results).unwrap(),
            render_json(&results).unwrap()
        );
        let dir = tempfile::tempdir().unwrap();
        let files = emit_results(&results, OutputFormat::Both, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        assert!(emit_results(&[], OutputFormat::Both, dir.path()).is_err());
    }

    #[test]
    fn unwritable_destination_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_results(
            &[result(None, 1)],
            OutputFormat::Tabular,
            &blocker.join("out"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("file/out"), "{err}");
    }

    #[test]
    fn eye_matrix_has_dimensions() {
        let eye = EyeHistogram {
            symbol_rate_gbd: 225.0,
            averages: 10,
            time_bins: 3,
            amplitude_bins: 2,
            amplitude_min: -1.0,
            amplitude_max: 1.0,
            counts: vec![1, 2, 3, 4, 5, 6],
        };
        let text = render_eye_matrix(&eye);
        assert!(text.contains("# dimensions 2 3\n"));
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, ["2 4 6", "1 3 5"]);
    }
}

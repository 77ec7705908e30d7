use std::path::Path;

use crate::channel::FrequencyResponse;
use crate::error::{Error, Result};

/// One measured point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseRow {
    pub frequency_ghz: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

/// A parsed (frequency_ghz, magnitude_db, phase_deg) table and the response
/// it describes.
#[derive(Debug, Clone)]
pub struct ResponseTable {
    /// Rows as used, including a synthesized DC row.
    pub rows: Vec<ResponseRow>,
    pub warnings: Vec<String>,
    pub response: FrequencyResponse,
}

fn row_err(row: usize, reason: impl Into<String>) -> Error {
    Error::ResponseTable {
        row,
        reason: reason.into(),
    }
}

fn cells(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parses a comma- or whitespace-separated table.
///
/// `#` starts a comment; a first non-numeric line is taken as a header. Row
/// numbers in errors are 1-based line numbers. A missing 0 GHz row is
/// synthesized as (0, 0 dB, 0 deg) with a warning. Phase is unwrapped as
/// given.
pub fn parse_response_table(text: &str) -> Result<ResponseTable> {
    let mut rows: Vec<ResponseRow> = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let c = cells(line);
        let first = !seen_content;
        seen_content = true;
        if first && c.iter().any(|s| !s.is_empty() && s.parse::<f64>().is_err()) {
            continue;
        }
        if c.len() != 3 {
            return Err(row_err(
                line_no,
                format!("expected 3 cells, found {}", c.len()),
            ));
        }
        let mut v = [0.0; 3];
        for (k, s) in c.iter().enumerate() {
            if s.is_empty() {
                return Err(row_err(line_no, format!("cell {} is empty", k + 1)));
            }
            let x: f64 = s
                .parse()
                .map_err(|_| row_err(line_no, format!("cell {} (`{s}`) is not a number", k + 1)))?;
            if !x.is_finite() {
                return Err(row_err(line_no, format!("cell {} is not finite", k + 1)));
            }
            v[k] = x;
        }
        let row = ResponseRow {
            frequency_ghz: v[0],
            magnitude_db: v[1],
            phase_deg: v[2],
        };
        if row.frequency_ghz < 0.0 {
            return Err(row_err(line_no, "frequency must be >= 0"));
        }
        if let Some(prev) = rows.last() {
            if row.frequency_ghz == prev.frequency_ghz {
                return Err(row_err(
                    line_no,
                    format!("duplicate frequency {} GHz", row.frequency_ghz),
                ));
            }
            if row.frequency_ghz < prev.frequency_ghz {
                return Err(row_err(
                    line_no,
                    format!(
                        "frequency {} GHz is below the previous row",
                        row.frequency_ghz
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(row_err(0, "table has no data rows"));
    }
    let mut warnings = Vec::new();
    if rows[0].frequency_ghz > 0.0 {
        warnings.push(format!(
            "no 0 GHz row; synthesized (0 GHz, 0 dB, 0 deg) below {} GHz",
            rows[0].frequency_ghz
        ));
        rows.insert(
            0,
            ResponseRow {
                frequency_ghz: 0.0,
                magnitude_db: 0.0,
                phase_deg: 0.0,
            },
        );
    }
    let response = FrequencyResponse::from_db_phase(
        rows.iter().map(|r| r.frequency_ghz).collect(),
        rows.iter().map(|r| r.magnitude_db).collect(),
        rows.iter().map(|r| r.phase_deg.to_radians()).collect(),
    )?;
    Ok(ResponseTable {
        rows,
        warnings,
        response,
    })
}

pub fn read_response_table(path: &Path) -> Result<ResponseTable> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_response_table(&text)
}

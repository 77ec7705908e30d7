use std::fmt;
use std::path::PathBuf;

/// Pipeline stage that produced an error during an end-to-end link run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Transmitter,
    Channel,
    Synchronization,
    Equalization,
    Measurement,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Transmitter => "transmitter",
            Stage::Channel => "channel",
            Stage::Synchronization => "synchronization",
            Stage::Equalization => "equalization",
            Stage::Measurement => "measurement",
        };
        f.write_str(s)
    }
}

/// A single problem found while validating a configuration document.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConfigIssue {
    /// Dotted path to the offending key, e.g. `link.symbol_rate_gbd`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bit count {bits} is not a multiple of {block} for {format}")]
    IndivisibleBits {
        bits: usize,
        block: usize,
        format: &'static str,
    },

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("synchronization failed: correlation peak is {ratio:.2}x RMS, need {threshold:.2}x")]
    SyncFailure { ratio: f64, threshold: f64 },

    #[error("equalizer adaptation diverged: training MSE went from {initial:.3e} to {last:.3e}")]
    AdaptationFailure { initial: f64, last: f64 },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration has {} problem(s):\n{}", .0.len(), format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("response table row {row}: {reason}")]
    ResponseTable { row: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Stage that failed, if the error came out of a link run.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Machine-parsable error classes reported by the command-line front end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Io,
    Parse,
    Weather,
    Coverage,
    NoTruth,
    Infeasible,
    Config,
    Data,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Io => "E_IO",
            ErrorCode::Parse => "E_PARSE",
            ErrorCode::Weather => "E_WEATHER",
            ErrorCode::Coverage => "E_COVERAGE",
            ErrorCode::NoTruth => "E_NOTRUTH",
            ErrorCode::Infeasible => "E_INFEASIBLE",
            ErrorCode::Config => "E_CONFIG",
            ErrorCode::Data => "E_DATA",
        }
    }

    /// Process exit status used for this class.
    pub fn exit_status(self) -> i32 {
        match self {
            ErrorCode::Io => 2,
            ErrorCode::Parse => 3,
            ErrorCode::Weather => 4,
            ErrorCode::Coverage => 5,
            ErrorCode::NoTruth => 6,
            ErrorCode::Infeasible => 7,
            ErrorCode::Config => 8,
            ErrorCode::Data => 9,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One offending `(customer, channel, timestamp)` row found during ingestion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateRow {
    pub customer_id: String,
    pub channel: String,
    pub timestamp: String,
}

impl fmt::Display for DuplicateRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}@{}", self.customer_id, self.channel, self.timestamp)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {detail}")]
    Parse {
        file: String,
        line: u64,
        detail: String,
    },

    #[error("duplicate meter rows: {}", join(.0))]
    Duplicates(Vec<DuplicateRow>),

    #[error("unknown weather condition {0:?}")]
    UnknownCondition(String),

    #[error("no weather observations on day(s): {}", join(.0))]
    WeatherCoverage(Vec<String>),

    #[error("day {day} ({date}) has no daytime intervals")]
    DegenerateDay { day: usize, date: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data quality: {0}")]
    DataQuality(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("solar customer {customer}: only {valid} valid similarity entries, need at least 2")]
    InsufficientPool { customer: String, valid: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no usable ground truth: {0}")]
    NoTruth(String),

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn code(&self) -> ErrorCode {
        match self {
            Error::Io { .. } => ErrorCode::Io,
            Error::Parse { .. } | Error::Duplicates(_) => ErrorCode::Parse,
            Error::UnknownCondition(_) => ErrorCode::Weather,
            Error::WeatherCoverage(_) | Error::DegenerateDay { .. } => ErrorCode::Coverage,
            Error::NoTruth(_) => ErrorCode::NoTruth,
            Error::Infeasible(_) => ErrorCode::Infeasible,
            Error::Config(_) => ErrorCode::Config,
            Error::DataQuality(_)
            | Error::Alignment(_)
            | Error::InsufficientPool { .. }
            | Error::Contract(_)
            | Error::ZeroDenominator(_) => ErrorCode::Data,
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    const SHOWN: usize = 20;
    let mut out = items
        .iter()
        .take(SHOWN)
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if items.len() > SHOWN {
        out.push_str(&format!(" (+{} more)", items.len() - SHOWN));
    }
    out
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unexpected header {found:?}, expected {expected:?}")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad data: {0}")]
    Data(String),

    #[error("no reference days")]
    NoReferenceDays,

    #[error("distance matrix is incomplete; undefined pairs: {}", format_pairs(.0))]
    IncompleteMatrix(Vec<(String, String)>),

    #[error("distance matrices have mismatched ids")]
    MismatchedIds,

    #[error("oracle refuses n = {n} (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

fn format_pairs(pairs: &[(String, String)]) -> String {
    const SHOWN: usize = 8;
    let mut out = pairs
        .iter()
        .take(SHOWN)
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(", ");
    if pairs.len() > SHOWN {
        out.push_str(&format!(" and {} more", pairs.len() - SHOWN));
    }
    out
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 2 for configuration
    /// problems (including unreadable paths), 3 for problems with the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } | Error::Infeasible(_) | Error::TooLarge { .. } => 2,
            _ => 3,
        }
    }
}

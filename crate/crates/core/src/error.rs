use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("index out of range: {what} = {index} (len {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure{}: {reason}", locate(*bin, *cell))]
    Factorization {
        bin: Option<usize>,
        cell: Option<(usize, usize)>,
        reason: String,
    },

    #[error("batch statistics need at least two elements per channel, got {0}")]
    Statistics(usize),

    #[error("training diverged at epoch {epoch}, batch {batch} (loss {loss}); epoch losses so far: {history:?}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
        history: Vec<f64>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn locate(bin: Option<usize>, cell: Option<(usize, usize)>) -> String {
    match (bin, cell) {
        (Some(b), Some((i, j))) => format!(" at range bin {b}, grid cell ({i}, {j})"),
        (Some(b), None) => format!(" at range bin {b}"),
        (None, Some((i, j))) => format!(" at grid cell ({i}, {j})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front-end.
    ///
    /// 2 = usage/configuration, 3 = data/shape, 4 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json { .. } => 2,
            Error::Shape(_)
            | Error::Index { .. }
            | Error::Data(_)
            | Error::Statistics(_)
            | Error::Io { .. } => 3,
            Error::Domain(_) | Error::Factorization { .. } | Error::Diverged { .. } => 4,
        }
    }
}

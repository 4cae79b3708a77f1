use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("ill-conditioned Gram matrix: Cholesky failed after adding jitter {jitter:e}")]
    Conditioning { jitter: f64 },

    #[error("numerical blow-up: state `{state}` (index {index}) became {value}")]
    NonFinite {
        state: String,
        index: usize,
        value: f64,
    },

    #[error("particle filter degeneracy: every likelihood underflowed (innovation norm {innovation_norm:.4e})")]
    Degeneracy { innovation_norm: f64 },

    #[error("non-finite objective or gradient at the initial point")]
    NonFiniteStart,

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate post id `{id}` on line {line}")]
    DuplicatePost { id: String, line: usize },

    #[error("invalid lexicon: {0}")]
    Lexicon(String),

    #[error("embedding format error at byte {offset}: {message}")]
    EmbeddingFormat { offset: u64, message: String },

    #[error("model format error at byte {offset}: {message}")]
    ModelFormat { offset: u64, message: String },

    #[error("zero-norm embedding for id `{0}`")]
    ZeroNorm(String),

    #[error("missing embeddings for {} id(s): {}", .0.len(), .0.join(", "))]
    MissingEmbeddings(Vec<String>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid annotation on line {line}: {message}")]
    Annotation { line: usize, message: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing artifact {path}: {hint}")]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("malformed table {path} line {line}: {message}")]
    Table {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// Short machine-readable kind, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::DuplicatePost { .. } => "duplicate_post",
            Error::Lexicon(_) => "lexicon",
            Error::EmbeddingFormat { .. } => "embedding_format",
            Error::ModelFormat { .. } => "model_format",
            Error::ZeroNorm(_) => "zero_norm",
            Error::MissingEmbeddings(_) => "missing_embeddings",
            Error::Domain(_) => "domain",
            Error::Annotation { .. } => "annotation",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Config(_) => "config",
            Error::MissingArtifact { .. } => "missing_artifact",
            Error::Table { .. } => "table",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

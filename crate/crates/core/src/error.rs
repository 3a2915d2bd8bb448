use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("document {doc_id}: {message}")]
    Validation { doc_id: String, message: String },

    #[error("lexicon format error: {0}")]
    LexiconFormat(String),

    #[error("embedding file: {message} (byte offset {offset})")]
    EmbeddingFormat { offset: u64, message: String },

    #[error("model file: {message} (byte offset {offset})")]
    ModelFormat { offset: u64, message: String },

    #[error("dimension mismatch: model expects {model}-dimensional token embeddings, provider gives {provided}")]
    DimMismatch { model: usize, provided: usize },

    #[error("no embeddings for document {0}")]
    MissingEmbeddings(String),

    #[error("non-finite loss in document {doc_id}, anaphor {anaphor}")]
    NonFiniteLoss { doc_id: String, anaphor: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(doc_id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            doc_id: doc_id.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the filesystem rather than by the content of an input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

use thiserror::Error;

/// Errors produced by the parsing, training, chunking and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input line (missing fields, bad separators, ...).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Inconsistent constituent structure (unbalanced or mismatched brackets,
    /// tree/token length mismatch, misaligned corpora).
    #[error("structural error ({context}): {msg}")]
    Structure { context: String, msg: String },

    /// Tag absent from the SUSANNE-to-LOB table. Never passed through silently.
    #[error("unknown tag {tag:?}: not present in the tag map")]
    UnknownTag { tag: String },

    /// Input outside an operation's domain (empty sentence, probability
    /// outside [0,1], oversized brute-force request).
    #[error("domain error: {0}")]
    Domain(String),

    /// A data file failed validation (priority table, FSM spec, model file,
    /// configuration).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub fn structure(context: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Structure { context: context.into(), msg: msg.into() }
    }

    /// Short machine-parsable code, used by the CLI for one-line error output
    /// and exit-status mapping.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "E_PARSE",
            Error::Structure { .. } => "E_STRUCT",
            Error::UnknownTag { .. } => "E_TAG",
            Error::Domain(_) => "E_DOMAIN",
            Error::Validation(_) => "E_VALID",
            Error::Io(_) => "E_IO",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad caller input: missing fields, mismatched lengths, unknown formats.
    #[error("input error: {0}")]
    Input(String),

    /// Malformed XML in a lexicon source file.
    #[error("XML parse error at line {line}: {message}")]
    XmlParse { line: usize, message: String },

    /// A lexicon source yielded no terms.
    #[error("empty lexicon: no terms extracted from {0}")]
    EmptyLexicon(String),

    /// A reasoning decomposition could not be parsed into a step count.
    #[error("unparseable reasoning trace: {0}")]
    UnparseableTrace(String),

    /// One of the two style groups is absent from an evaluation batch.
    #[error("missing style group: no records with style {0}")]
    MissingStyle(String),

    /// Question-type classification failed after retries.
    #[error("classification error: {0}")]
    Classification(String),

    /// Augmentation produced no usable answer.
    #[error("augmentation error: {0}")]
    Augmentation(String),

    /// Threshold fitting needs both labels present.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A balance plan cannot be satisfied from the available records.
    #[error("unsatisfiable balance plan: {0}")]
    UnsatisfiablePlan(String),

    /// Remote provider failure after retries.
    #[error("transport error: {0}")]
    Transport(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 0 success, 2 input, 3 transport,
    /// 4 unsatisfiable plan.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Transport(_) => 3,
            Error::UnsatisfiablePlan(_) => 4,
            _ => 2,
        }
    }
}

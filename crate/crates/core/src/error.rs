//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bundle schema error: {0}")]
    BundleSchema(String),

    #[error("bundle failed validation with {0} diagnostic(s); run `validate` for details")]
    BundleInvalid(usize),

    #[error("no applicable {side} rule at turn {turn}")]
    NoApplicableRule { side: &'static str, turn: usize },

    #[error("cannot update a terminated dialogue state")]
    TerminatedStateUpdate,

    #[error("{op}: shape mismatch (expected {expected}, got {got})")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("empty item list passed to {0}")]
    EmptyInput(&'static str),

    #[error("target index {target} out of range for {len} logits")]
    TargetOutOfRange { target: usize, len: usize },

    #[error("non-finite gradient in parameter `{0}`")]
    NanGradient(String),

    #[error("non-finite loss from closure under gradient check")]
    NonFiniteLoss,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint/bundle mismatch: {0}")]
    CheckpointMismatch(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("malformed log line {line}: {message}")]
    LogLine { line: usize, message: String },

    #[error("replay pool is empty")]
    EmptyPool,

    #[error("replay pool holds {have} transitions, need at least {need}")]
    PoolTooSmall { have: usize, need: usize },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("unsupported operation for model kind {0}")]
    UnsupportedModelKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

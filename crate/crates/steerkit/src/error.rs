//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside steerkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands of a linear-algebra or activation operation do not line up.
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    /// An operation received an empty collection it cannot work with.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    /// A value left the finite range (NaN or infinity).
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Classifier or probe training needs at least two classes.
    #[error("training requires at least 2 distinct classes, found {0}")]
    SingleClass(usize),

    /// Token id exceeds the model vocabulary.
    #[error("token id {token} out of range for vocabulary of {vocab}")]
    TokenOutOfRange { token: u32, vocab: usize },

    /// Layer index exceeds the model depth.
    #[error("layer {layer} out of range for model with {n_layers} layers")]
    LayerOutOfRange { layer: usize, n_layers: usize },

    /// Latent index exceeds the SAE latent width.
    #[error("latent index {index} out of range for m = {m}")]
    LatentOutOfRange { index: usize, m: usize },

    /// The planted style token sets must be disjoint and nonempty.
    #[error("invalid planted style: {0}")]
    InvalidPlant(String),

    /// Not enough samples for a training operation.
    #[error("too few samples: {got} < {min} required")]
    TooFewSamples { got: usize, min: usize },

    /// A binary weight file starts with the wrong magic bytes.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    /// A binary weight file ended before its declared payload.
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    /// Declared shapes in a weight file are inconsistent with its payload.
    #[error("shape mismatch in weight file: {0}")]
    FileShape(String),

    /// A dataset line failed schema validation.
    #[error("dataset line {line}: {reason}")]
    DatasetLine { line: usize, reason: String },

    /// An experiment config failed validation; the pointer names the field.
    #[error("config error at {pointer}: {reason}")]
    Config { pointer: String, reason: String },

    /// A pipeline stage aborted; the stage name survives for diagnosis.
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// A required companion object was not supplied.
    #[error("missing {0}")]
    Missing(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

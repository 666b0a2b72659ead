use thiserror::Error;

pub type Result<T, E = NnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("non-finite gradient; optimizer step skipped")]
    NonFiniteGradient,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

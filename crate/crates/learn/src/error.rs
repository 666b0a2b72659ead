use thiserror::Error;

pub type Result<T, E = LearnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("replay buffer holds {available} tuples, batch needs {needed}")]
    BufferTooSmall { needed: usize, available: usize },
    #[error("dataset line {line}: {message}")]
    CorruptDataset { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("an actor thread panicked")]
    ActorPanicked,
    #[error(transparent)]
    Search(#[from] guidedplan_core::Error),
    #[error(transparent)]
    Network(#[from] guidedplan_nn::NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

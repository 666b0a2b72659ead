use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("observation has zero likelihood under the belief (normalizer {0:e})")]
    ZeroLikelihood(f64),
    #[error("belief is empty")]
    EmptyBelief,
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("state is terminal")]
    TerminalState,
    #[error("scenario depth must be >= 1, got {0}")]
    InvalidDepth(usize),
    #[error("upper bound {upper} below lower bound {lower} at depth {depth}")]
    BoundInversion { depth: usize, lower: f64, upper: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("oracle would need {required} node-steps, limit is {limit}")]
    SizeGuard { required: u128, limit: u128 },
}

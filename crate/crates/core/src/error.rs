use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },
    #[error("{what} overflows double precision at argument {value}")]
    Overflow { what: &'static str, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature spaces carry different weight vectors")]
    WeightMismatch,
    #[error("norm `{norm}` does not support {operation}")]
    UnsupportedNorm {
        norm: String,
        operation: &'static str,
    },
    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },
    #[error("orlicz norm search found a non-unimodal objective near log c = {at}")]
    NonUnimodal { at: f64 },
    #[error("feature vectors at the samples have rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("sampling points {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },
    #[error("point {x} is not on the delta-map grid")]
    OffGrid { x: f64 },
    #[error("side mismatch: {0}")]
    SideMismatch(&'static str),
    #[error("unknown {what} `{name}`")]
    UnknownKind { what: &'static str, name: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

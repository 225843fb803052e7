use thiserror::Error;

/// Errors raised by chain construction and the spectral diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph has no vertices or edges")]
    EmptyGraph,
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("self loop or repeated edge at {0}")]
    SelfLoopOrMultiEdge(String),
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error("generator is reducible")]
    Reducible,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("chain failed validation: {0}")]
    ValidationFailed(String),
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),
    #[error("state space of {size} states exceeds cap {cap}")]
    StateSpaceTooLarge { size: usize, cap: usize },
    #[error("function is not centered (mean {0:e})")]
    NotCentered(f64),
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("alpha must be positive, got {0}")]
    NonpositiveAlpha(f64),
    #[error("function is not Boolean")]
    NotBoolean,
    #[error("subset size {m} not in 1..{size}")]
    BadSubsetSize { m: usize, size: usize },
    #[error("band subspace is empty")]
    EmptySubspace,
    #[error("coefficient vector is zero")]
    ZeroCoefficients,
    #[error("no threshold satisfies both mass conditions")]
    NoAdmissibleThreshold,
    #[error("vector is zero")]
    ZeroVector,
    #[error("band is empty")]
    EmptyBand,
    #[error("vector is not centered and normalized: {0}")]
    BadNormalization(String),
    #[error("set has stationary mass 0 or 1")]
    TrivialSet,
    #[error("permutation is not an automorphism: {0}")]
    NotAnAutomorphism(String),
    #[error("set is empty or the full state space")]
    EmptyOrFullSet,
    #[error("no subset with mass in (1/4, 1/2]")]
    NoSubsetInMassWindow,
    #[error("unknown state label {0:?}")]
    UnknownState(String),
    #[error("bad spec: {0}")]
    BadSpec(String),
}

impl Error {
    /// Stable machine-readable code, used in CLI error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyGraph => "EmptyGraph",
            Error::DisconnectedGraph => "DisconnectedGraph",
            Error::SelfLoopOrMultiEdge(_) => "SelfLoopOrMultiEdge",
            Error::InvalidParams(_) => "InvalidParams",
            Error::Reducible => "Reducible",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::ValidationFailed(_) => "ValidationFailed",
            Error::EigensolverFailure(_) => "EigensolverFailure",
            Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            Error::NotCentered(_) => "NotCentered",
            Error::ZeroFunction => "ZeroFunction",
            Error::NegativeTime(_) => "NegativeTime",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonpositiveAlpha(_) => "NonpositiveAlpha",
            Error::NotBoolean => "NotBoolean",
            Error::BadSubsetSize { .. } => "BadSubsetSize",
            Error::EmptySubspace => "EmptySubspace",
            Error::ZeroCoefficients => "ZeroCoefficients",
            Error::NoAdmissibleThreshold => "NoAdmissibleThreshold",
            Error::ZeroVector => "ZeroVector",
            Error::EmptyBand => "EmptyBand",
            Error::BadNormalization(_) => "BadNormalization",
            Error::TrivialSet => "TrivialSet",
            Error::NotAnAutomorphism(_) => "NotAnAutomorphism",
            Error::EmptyOrFullSet => "EmptyOrFullSet",
            Error::NoSubsetInMassWindow => "NoSubsetInMassWindow",
            Error::UnknownState(_) => "UnknownState",
            Error::BadSpec(_) => "BadSpec",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

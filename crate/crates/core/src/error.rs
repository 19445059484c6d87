use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("type mismatch for variable {var}: {reason}")]
    TypeMismatch { var: String, reason: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("variable sets overlap on variable {0}")]
    OverlappingVarSets(usize),
    #[error("variable set must not be empty")]
    EmptyVarSet,
    #[error("Monte Carlo accuracy must be at least 1")]
    AccuracyZero,
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("ensemble must have at least one member")]
    EmptyEnsemble,
    #[error("dependence probability needs two distinct variables, got {0} twice")]
    SameVariable(usize),
    #[error("condition shape mismatch: {0}")]
    ConditionShapeMismatch(&'static str),
    #[error("joint state space of {0} configurations exceeds the enumeration limit")]
    StateSpaceTooLarge(u128),
    #[error("conditioning event has zero probability")]
    ZeroProbabilityCondition,
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error(transparent)]
    Syntax(#[from] crate::query::SyntaxError),
}

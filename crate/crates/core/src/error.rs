use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed rational {0:?}")]
    Scalar(String),
    #[error("malformed coordinate name {0:?}")]
    Coordinate(String),
    #[error("schema violation: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("containment check needs {selections} selections (limit {limit})")]
    TooLarge { selections: u128, limit: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("{what} has {size} elements, limit is {limit}")]
    SizeGuard { what: &'static str, size: usize, limit: usize },
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("duplicate element label {0:?}")]
    DuplicateLabel(String),
    #[error("order is not antisymmetric: {0:?} <= {1:?} and {1:?} <= {0:?}")]
    NotAntisymmetric(String, String),
    #[error("no least upper bound for {0:?} and {1:?}")]
    NoJoin(String, String),
    #[error("no greatest lower bound for {0:?} and {1:?}")]
    NoMeet(String, String),
    #[error("declared zero {0:?} is not the least element")]
    BadZero(String),
    #[error("not distributive: x={0:?}, y={1:?}, z={2:?} violate x∧(y∨z) = (x∧y)∨(x∧z)")]
    NotDistributive(String, String, String),
    #[error("not completely normal: pair ({0:?}, {1:?}) has no splitting pair")]
    NotCompletelyNormal(String, String),
    #[error("map does not preserve {0}")]
    NotHomomorphism(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("literal {0} is outside the generator set")]
    DomainMiss(String),
    #[error("ground values missing for {0:?}")]
    IncompleteDomain(Vec<String>),
    #[error("extension impossible: {0:?}")]
    ExtensionImpossible(Vec<String>),
    #[error("incoherent assignment: {0}")]
    Incoherent(String),
    #[error("closure step failed: {0}")]
    ClosureStepFailed(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

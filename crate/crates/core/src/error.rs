use thiserror::Error;

use crate::units::UnitVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("malformed exponent in `{0}`")]
    MalformedExponent(String),
    #[error("malformed unit token `{0}`")]
    MalformedToken(String),
    #[error("duplicate base unit `{0}`")]
    DuplicateBaseUnit(String),
    #[error("invalid base unit name `{0}`")]
    InvalidBaseUnit(String),
    #[error("unit vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unit mismatch: {0} vs {1}")]
    UnitMismatch(UnitVector, UnitVector),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent arithmetic overflowed")]
    ExponentOverflow,
    #[error("group element components must be finite and > 0")]
    NonPositiveScale,

    #[error("integer overflow during exact matrix arithmetic")]
    IntegerOverflow,
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix must be nonempty")]
    EmptyMatrix,

    #[error("duplicate feature name `{0}`")]
    DuplicateName(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature spec has no features")]
    EmptySpec,
    #[error("degree weight of feature `{0}` must be positive")]
    ZeroDegreeWeight(String),
    #[error("enumeration would visit {count} candidates, cap is {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("feature {0} is zero but carries a negative exponent")]
    PoleAtZero(usize),
    #[error("monomial evaluation is not finite")]
    NonFinite,
    #[error("row {row}, column {col}")]
    AtCell {
        row: usize,
        col: usize,
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ensemble has no members")]
    EmptyEnsemble,
    #[error("loss scale is zero")]
    ZeroScale,
    #[error("both state vectors are zero")]
    BothZero,
    #[error("mass must be positive")]
    NonPositiveMass,
    #[error("numerical blow-up at step {0}")]
    NumericalBlowup(usize),
    #[error("only {found} surviving runs, {needed} requested")]
    InsufficientSurvivors { found: usize, needed: usize },

    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("composite of consecutive differentials is not zero")]
    CompositionNotZero,
    #[error("degree {degree} exceeds the supported range")]
    DegreeOverflow { degree: i64 },
    #[error("permutation is invalid: {0}")]
    InvalidPermutation(String),
    #[error("arity {arity} exceeds the bound {bound}")]
    ArityOverflow { arity: usize, bound: usize },
    #[error("presentation is malformed: {0}")]
    MalformedPresentation(String),
    #[error("relations are not closed under the symmetric group action")]
    NonEquivariantRelations,
    #[error("differential does not square to zero at chain index {index}")]
    DifferentialNotSquareZero { index: usize },
    #[error("requested weight {requested} exceeds the configured bound {bound}")]
    BoundExceeded { requested: i64, bound: i64 },
    #[error("cohomology did not stabilize between truncation bounds {low} and {high}")]
    NotStabilized { low: i64, high: i64 },
    #[error("element is not a cocycle")]
    NotACocycle,
    #[error("validity bound {available} is below the requested bound {requested}")]
    ValidityUnderflow { available: i64, requested: i64 },
    #[error("operations do not satisfy the defining relations: {0}")]
    InvalidStructure(String),
    #[error("obstruction at stage {stage} is not exact: {cocycle}")]
    ObstructionNotExact { stage: usize, cocycle: String },
    #[error("structure has a nonzero linear part; rescaling needs Q1 = 0")]
    NonzeroQ1,
    #[error("usage: {0}")]
    Usage(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

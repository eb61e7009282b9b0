use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("population size must be even and at least 2, got {0}")]
    OddPopulation(usize),
    #[error("invalid dimension: {0}")]
    InvalidDimension(&'static str),
    #[error("locus {locus} out of range for chromosome length {len}")]
    LocusOutOfRange { locus: usize, len: usize },
    #[error("chromosome length {got} does not match expected length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("invalid staircase descriptor: {0}")]
    InvalidDescriptor(&'static str),
    #[error("schema models overlap at locus {0}")]
    NotOrthogonal(usize),
    #[error("enumeration over {len} loci exceeds the bound of {max}")]
    EnumerationBound { len: usize, max: usize },
    #[error("stage index {index} out of range 1..={height}")]
    StageOutOfRange { index: usize, height: usize },
    #[error("invalid clause: {0}")]
    InvalidClause(&'static str),
    #[error("invalid refractal addressing system: {0}")]
    InvalidAddressing(&'static str),
}

//! Exact-arithmetic laboratory for vector-valued Riemann integration.
//!
//! Everything is computed over arbitrary-precision rationals: sparse
//! vectors over several index universes, four norm families (c0, lp,
//! l1-sum, James tree), tagged partitions of [0,1] and their Riemann
//! sums, a gallery of explicitly constructed functions with certified
//! integrability/non-integrability bounds, and matrix operators with a
//! finite Dunford-Pettis test.

pub mod analysis;
pub mod cli;
pub mod dp_operators;
pub mod exec;
pub mod gallery;
pub mod intervals;
pub mod jt_norm;
pub mod partitions;
pub mod rat;
pub mod report;
pub mod spaces;

pub use rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("index {0} is not valid in universe {1}")]
    IndexOutOfUniverse(String, String),
    #[error("universe {0} is incompatible with space {1}")]
    IncompatibleSpace(String, String),
    #[error("lp exponent must be a rational integer >= 1, got {0}")]
    UnsupportedExponent(String),
    #[error("block assignment is not total: index {0} has no block")]
    MissingBlock(String),
    #[error("index sets A and B overlap at block {0}")]
    OverlappingBlocks(String),
    #[error("support of size {0} exceeds the brute-force cap {1}")]
    SupportTooLarge(usize, usize),
    #[error("tree level {0} exceeds the cap {1}")]
    LevelTooLarge(u32, u32),
    #[error("{0} out of range: {1}")]
    OutOfRange(&'static str, String),
    #[error("evaluation point {0} outside [0,1]")]
    PointOutOfDomain(String),
    #[error("tag {0} is not strictly inside its interval")]
    TagNotInterior(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("partition too coarse: {0}")]
    PartitionTooCoarse(String),
    #[error("insufficient stage depth: {0}")]
    InsufficientDepth(String),
    #[error("sequence bound violated: ||x_{0}|| exceeds declared bound {1}")]
    SequenceBoundViolated(u64, String),
    #[error("renormalization impossible: {0}")]
    Renormalization(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

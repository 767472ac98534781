//! Error type shared by every protocol module in this crate.

use thiserror::Error;

/// Errors surfaced by field, group, token-store and protocol operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two values built over different field or group parameters were mixed.
    #[error("parameter mismatch: operands belong to different field/group instances")]
    ParamsMismatch,

    /// A vector-valued operation was asked for an empty vector.
    #[error("vector length must be at least 1")]
    EmptyVector,

    /// Two vectors that must be the same length were not.
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A raw integer does not encode a valid element (out of `[0, p)` or `[1, q)`).
    #[error("value out of range for this field/group")]
    ValueOutOfRange,

    /// A cell index fell outside `[1, M]`.
    #[error("cell index {cell} outside [1, {m}]")]
    CellOutOfRange { cell: u32, m: u32 },

    /// The citizen's true cell is missing from its chosen index vector.
    #[error("cell {cell} is not among the chosen indices")]
    CellNotCovered { cell: u32 },

    /// An index list that must be duplicate-free contained a repeat.
    #[error("duplicate cell index in vector")]
    DuplicateIndex,

    /// A structurally invalid argument; the message names the constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    /// A modulus that must be prime failed the primality test.
    #[error("modulus is not prime")]
    NotPrime,

    /// A group element is not a member of the prime-order subgroup.
    #[error("element is not in the prime-order subgroup")]
    NotInSubgroup,

    /// A protocol message arrived in the wrong session phase.
    #[error("protocol session is in the wrong phase for this operation")]
    WrongPhase,

    /// The minimum-size guard rejected a comparison (input of `size` needs `> min`).
    #[error("comparison refused: input set of size {size} does not exceed the minimum {min}")]
    ComparisonRefused { size: usize, min: usize },

    /// The two aggregation servers saw different participant sets.
    #[error("participant sets differ between servers")]
    ParticipantMismatch,

    /// More contributions than the field modulus can count without wrapping.
    #[error("participant count {participants} is not below the field modulus")]
    PopulationExceedsModulus { participants: usize },

    /// A hex string failed to decode into the expected value.
    #[error("invalid hex encoding")]
    InvalidHex,
}

pub type Result<T> = core::result::Result<T, Error>;

//! Protocol core for privacy-preserving epidemic data collection.
//!
//! Four tasks are covered, all built from two primitives:
//!
//! * additive masking over a prime field, split across two non-colluding
//!   servers, for the per-cell population census ([`density`]);
//! * a commutative exponentiation cipher ([`group`]) driving private
//!   set-intersection protocols ([`psi`]), used for contact tracing against
//!   an infected-token registry ([`tracing`]) and for counting infections
//!   per location and over time ([`analytics`]).
//!
//! Citizens store their broadcast and received tokens in retention-pruned
//! logs ([`token`]). Everything here is transport-free and allocation-only
//! (`no_std` + `alloc`): callers drive the message exchanges and supply all
//! randomness explicitly, which keeps runs reproducible under a fixed seed.
//!
//! All values are immutable after construction and safe to move across
//! threads; sessions are single-threaded state machines.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analytics;
pub mod density;
pub mod error;
pub mod field;
pub mod group;
pub mod histogram;
pub mod partition;
pub mod primes;
pub mod psi;
pub mod token;
pub mod tracing;

pub use error::{Error, Result};
pub use field::{random_field_vector, FieldElement, FieldParams};
pub use group::{hash_to_group, CommutativeKey, GroupElement, GroupParams};
pub use histogram::LocationHistogram;
pub use partition::{CellIndex, Partition};
pub use token::{EpochClock, ReceivedLog, SentLog, Token, TOKEN_BYTES};

//! Deterministic multi-party simulation harness for the epidemic
//! data-collection protocols.
//!
//! Citizens move over a partitioned region, exchange random tokens in
//! proximity, and an infection process drives reports. Two server roles and
//! all citizens live in one process connected by an in-memory message bus
//! that carries serialized wire payloads and records a complete transcript.
//! Every protocol output is checked against a plaintext oracle computed
//! solely from the ground-truth event log, and `(config, seed)` fully
//! determines every output byte.

pub mod adversary;
pub mod bus;
pub mod cli;
pub mod config;
pub mod error;
pub mod oracle;
pub mod pipelines;
pub mod report;
pub mod rng;
pub mod runner;
pub mod snapshot;
pub mod verify;
pub mod wire;
pub mod world;

pub use config::WorldConfig;
pub use error::{Result, SimError};
pub use world::World;

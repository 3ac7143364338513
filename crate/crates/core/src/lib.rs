//! Variable-length multi-codebook channel coding over discrete memoryless channels.
//!
//! The crate covers the whole pipeline: method-of-types primitives, (L,q)-array
//! combinatorics, constant-composition codebook libraries with γ-expurgation,
//! asynchronous stream transmission, the two-stage sliding-window universal
//! decoder, random-coding exponents, and a Monte Carlo / enumeration harness.

pub mod channel;
pub mod channel_sim;
pub mod codebook;
pub mod decoder;
pub mod error;
pub mod exponents;
pub mod harness;
pub mod lq_array;
pub mod rng;
mod serde_float;
pub mod types;

pub use channel::ChannelMatrix;
pub use error::{Error, Result};
pub use types::{Distribution, JointDistribution, Symbol};

//! Cryptographic building blocks for the agora voting system.
//!
//! Everything here is deterministic given an explicit RNG, so the whole
//! stack can run inside a seeded simulation and replay bit-for-bit.

pub mod codec;
pub mod commit;
pub mod group;
pub mod hashcommit;
pub mod rng;
pub mod sign;
pub mod symenc;
pub mod vss;
pub mod zkp;

mod error;

pub use error::CryptoError;

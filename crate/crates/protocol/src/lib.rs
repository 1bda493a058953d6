//! Distributed end-to-end verifiable voting: election setup, fault-tolerant
//! vote collection in two flavors (synchronized and fully asynchronous),
//! a replicated bulletin board, threshold trustees, and the voter and
//! auditor checks that tie it together.
//!
//! Everything here is a pure state machine. Nodes consume messages and
//! timer events and emit effects into an [`messages::Outbox`]; scheduling,
//! delivery, clock drift and adversarial behavior live in the simulator
//! crate.

pub mod audit;
pub mod board;
pub mod collector;
pub mod consensus;
pub mod count;
pub mod ids;
pub mod messages;
pub mod params;
pub mod reader;
pub mod setup;
pub mod sigmsg;
pub mod trustee;
pub mod voter;

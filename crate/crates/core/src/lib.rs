//! Zero-knowledge mutual authentication for wireless body area networks.
//!
//! A node proves it knows its shared secret `V` by answering a fresh
//! exponentiation challenge; the sink proves itself by committing to the
//! answer before the node reveals anything. The crate runs both sides as
//! state machines inside a deterministic multi-hop simulator, attacks them
//! with external adversaries, and prices them against a TinyZKP baseline.

pub mod adversary;
pub mod batch;
pub mod costmodel;
pub mod crypto;
pub mod netsim;
pub mod protocol;
pub mod selftest;

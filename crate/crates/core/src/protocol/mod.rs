//! The five-message mutual authentication handshake.
//!
//! ```text
//! node                                   sink
//!  | M1  E(K, id ‖ V^p)                   |
//!  |------------------------------------->|
//!  | M2  E(K, 0 ‖ V^q ‖ RI), E(Kcs, V^pq) |
//!  |<-------------------------------------|
//!  | M3  E(K, id ‖ window(V^qp, RI))      |
//!  |------------------------------------->|   compare windows
//!  | M4  Kcs                              |
//!  |<-------------------------------------|
//!  open commitment, compare windows       |
//!  | M5  E(K, id ‖ data)                  |
//!  |------------------------------------->|
//! ```
//!
//! Both state machines are step functions driven by a host that owns time,
//! transport, and the random stream.

mod message;
mod node;
mod session;
mod sink;

use serde::{Deserialize, Serialize};

pub use message::{
    m1_ct_len, m2_ct_len, m3_ct_len, DecodeError, EncodeError, Message, MessageTag, NodeId, SINK_ID,
};
pub use node::{NodeEvent, NodeFsm, NodeOutput, NodeState, RetryPolicy, TimerRequest};
pub use session::{register_nodes, NodeIdentity, Registry};
pub use sink::{SinkFsm, SinkOutput, SinkSessionMaterial, SinkState};

/// A decryption performed by an endpoint while handling a message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecryptAttempt {
    pub tag: MessageTag,
    pub ok: bool,
}

#[cfg(test)]
mod tests;

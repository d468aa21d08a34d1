use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RoutingTable;
use crate::costmodel::CostLedger;
use crate::protocol::{MessageTag, NodeId, NodeState, SinkState};

pub type FrameId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Node,
    Sink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Loss,
    NoRoute,
    Intercepted,
    Horizon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapAction {
    Pass,
    Drop,
    Replace,
}

/// Ground-truth session values recorded by the simulator host. Attackers
/// never read these; verdicts use them to check what leaked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecretKind {
    /// Shared secret V of a node.
    Secret,
    SessionKey,
    /// Node exponent p.
    NodeExponent,
    /// Sink exponent q.
    SinkExponent,
    /// (V^p)^q.
    SharedValue,
    IntervalOffset,
    CommitKey,
}

impl SecretKind {
    /// Whether the value must never appear on the wire. The commit key is
    /// revealed in M4 and the offset travels sealed but is not secret.
    pub fn must_stay_hidden(self) -> bool {
        !matches!(self, Self::IntervalOffset | Self::CommitKey)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Material {
        t: u64,
        node: NodeId,
        kind: SecretKind,
        #[serde(with = "hex::serde")]
        value: Vec<u8>,
    },
    RouteAdopted {
        t: u64,
        node: NodeId,
        parent: NodeId,
        hops: u32,
    },
    AppStart {
        t: u64,
        node: NodeId,
        #[serde(with = "hex::serde")]
        data: Vec<u8>,
    },
    /// One transmission over one link. `from: None` is an attacker;
    /// `to: None` means the sender had no route and the frame is dropped.
    Sent {
        t: u64,
        frame: FrameId,
        from: Option<NodeId>,
        to: Option<NodeId>,
        origin: NodeId,
        destination: NodeId,
        tag: Option<MessageTag>,
        #[serde(with = "hex::serde")]
        bytes: Vec<u8>,
    },
    Delivered {
        t: u64,
        frame: FrameId,
        at: NodeId,
    },
    Dropped {
        t: u64,
        frame: FrameId,
        at: Option<NodeId>,
        reason: DropReason,
    },
    Intercepted {
        t: u64,
        frame: FrameId,
        at: NodeId,
        action: TapAction,
    },
    Malformed {
        t: u64,
        frame: FrameId,
        at: NodeId,
        error: String,
    },
    Decrypt {
        t: u64,
        node: NodeId,
        frame: FrameId,
        tag: MessageTag,
        ok: bool,
    },
    Transition {
        t: u64,
        node: NodeId,
        role: Role,
        from: String,
        to: String,
    },
    /// Data accepted by the sink from an authenticated node.
    Delivery {
        t: u64,
        node: NodeId,
        #[serde(with = "hex::serde")]
        data: Vec<u8>,
    },
    Audit {
        t: u64,
        node: NodeId,
        role: Role,
        note: String,
    },
}

impl Record {
    pub fn time(&self) -> u64 {
        match self {
            Record::Material { t, .. }
            | Record::RouteAdopted { t, .. }
            | Record::AppStart { t, .. }
            | Record::Sent { t, .. }
            | Record::Delivered { t, .. }
            | Record::Dropped { t, .. }
            | Record::Intercepted { t, .. }
            | Record::Malformed { t, .. }
            | Record::Decrypt { t, .. }
            | Record::Transition { t, .. }
            | Record::Delivery { t, .. }
            | Record::Audit { t, .. } => *t,
        }
    }
}

/// Everything a run produced. A pure function of the scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario: String,
    pub seed: u64,
    pub modulus_bits: usize,
    pub end_ms: u64,
    pub records: Vec<Record>,
    pub routes: RoutingTable,
    pub node_states: BTreeMap<NodeId, NodeState>,
    pub sink_states: BTreeMap<NodeId, SinkState>,
    pub ledger: CostLedger,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub frames_sent: u64,
    pub frames_delivered: u64,
    pub frames_dropped: u64,
    pub bytes_sent: u64,
    pub nodes_authenticated: usize,
    pub nodes_aborted: usize,
    pub sink_authenticated: usize,
    pub sink_rejected: usize,
    pub deliveries: usize,
}

impl Trace {
    /// Line-delimited JSON: one header line, one line per record, one
    /// summary line with final states and the ledger.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        let header = serde_json::json!({
            "type": "header",
            "scenario": self.scenario,
            "seed": self.seed,
            "modulus_bits": self.modulus_bits,
        });
        writeln!(out, "{header}").unwrap();
        for r in &self.records {
            writeln!(
                out,
                "{}",
                serde_json::to_string(r).expect("records serialize")
            )
            .unwrap();
        }
        let tail = serde_json::json!({
            "type": "summary",
            "end_ms": self.end_ms,
            "summary": self.summary(),
            "routes": self.routes,
            "node_states": self.node_states,
            "sink_states": self.sink_states,
            "ledger": self.ledger,
        });
        writeln!(out, "{tail}").unwrap();
        out
    }

    /// SHA-256 over the line export, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_lines().as_bytes()))
    }

    pub fn summary(&self) -> TraceSummary {
        let mut s = TraceSummary::default();
        for r in &self.records {
            match r {
                Record::Sent { bytes, .. } => {
                    s.frames_sent += 1;
                    s.bytes_sent += bytes.len() as u64;
                }
                Record::Delivered { .. } => s.frames_delivered += 1,
                Record::Dropped { .. } => s.frames_dropped += 1,
                Record::Delivery { .. } => s.deliveries += 1,
                _ => {}
            }
        }
        s.nodes_authenticated = self
            .node_states
            .values()
            .filter(|s| **s == NodeState::Authenticated)
            .count();
        s.nodes_aborted = self
            .node_states
            .values()
            .filter(|s| **s == NodeState::Aborted)
            .count();
        s.sink_authenticated = self
            .sink_states
            .values()
            .filter(|s| **s == SinkState::Authenticated)
            .count();
        s.sink_rejected = self
            .sink_states
            .values()
            .filter(|s| **s == SinkState::Rejected)
            .count();
        s
    }

    /// Data the sink accepted, in order.
    pub fn deliveries(&self) -> impl Iterator<Item = (u64, NodeId, &[u8])> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::Delivery { t, node, data } => Some((*t, *node, data.as_slice())),
            _ => None,
        })
    }

    /// Application inputs, in order.
    pub fn app_inputs(&self) -> impl Iterator<Item = (u64, NodeId, &[u8])> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::AppStart { t, node, data } => Some((*t, *node, data.as_slice())),
            _ => None,
        })
    }

    /// Every transmitted frame body, one entry per hop.
    pub fn wire_frames(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::Sent { bytes, .. } => Some(bytes.as_slice()),
            _ => None,
        })
    }

    pub fn material(&self, kind: SecretKind) -> impl Iterator<Item = (u64, NodeId, &[u8])> + '_ {
        self.records.iter().filter_map(move |r| match r {
            Record::Material {
                t,
                node,
                kind: k,
                value,
            } if *k == kind => Some((*t, *node, value.as_slice())),
            _ => None,
        })
    }

    pub fn node_state(&self, node: NodeId) -> Option<NodeState> {
        self.node_states.get(&node).copied()
    }

    pub fn sink_state(&self, node: NodeId) -> Option<SinkState> {
        self.sink_states.get(&node).copied()
    }

    /// Times at which the sink moved `node`'s session into `to`.
    pub fn sink_transitions_to(&self, node: NodeId, to: SinkState) -> Vec<u64> {
        let to = to.to_string();
        self.records
            .iter()
            .filter_map(|r| match r {
                Record::Transition {
                    t,
                    node: n,
                    role: Role::Sink,
                    to: state,
                    ..
                } if *n == node && *state == to => Some(*t),
                _ => None,
            })
            .collect()
    }

    /// Frames of a given tag that `node` originated.
    pub fn originated(&self, node: NodeId, tag: MessageTag) -> usize {
        self.records
            .iter()
            .filter(|r| {
                matches!(r, Record::Sent { from: Some(f), origin, tag: Some(t), .. }
                    if *f == node && *origin == node && *t == tag)
            })
            .count()
    }
}

//! Communication, computation, memory, and energy accounting.
//!
//! Two accounting modes coexist. `PaperFields` counts only the enumerated
//! 200-bit protocol fields and reproduces the published handshake sums.
//! `Wire` counts every framed byte a run actually put on the air.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::{ProtocolParams, SESSION_KEY_LEN, TAG_LEN};
use crate::netsim::{Record, Trace};
use crate::protocol::{m1_ct_len, m2_ct_len, m3_ct_len, MessageTag, NodeId, SINK_ID};

pub use report::{compare, CostReport, MetricRow, RoleRow, CSV_HEADER};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeCost {
    pub bits_tx: u64,
    pub bits_rx: u64,
    pub modmuls: u64,
    pub mem_bytes: u64,
    pub energy_mj: f64,
}

/// Per-node totals for one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: BTreeMap<NodeId, NodeCost>,
}

impl CostLedger {
    pub fn entry(&mut self, node: NodeId) -> &mut NodeCost {
        self.entries.entry(node).or_default()
    }

    pub fn get(&self, node: NodeId) -> Option<&NodeCost> {
        self.entries.get(&node)
    }

    pub fn total(&self) -> NodeCost {
        self.entries
            .values()
            .fold(NodeCost::default(), |mut acc, c| {
                acc.bits_tx += c.bits_tx;
                acc.bits_rx += c.bits_rx;
                acc.modmuls += c.modmuls;
                acc.mem_bytes += c.mem_bytes;
                acc.energy_mj += c.energy_mj;
                acc
            })
    }
}

/// Bit widths charged for each counted field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldBits {
    /// `V^p` and `V^q`.
    pub v_power: u64,
    /// `(V^q)^p`, both as the commitment and as the revealed window.
    pub interval: u64,
    pub kcs: u64,
}

impl Default for FieldBits {
    fn default() -> Self {
        Self {
            v_power: 200,
            interval: 200,
            kcs: 200,
        }
    }
}

impl FieldBits {
    /// Counted bits for one originated frame of the given type.
    pub fn for_tag(&self, tag: MessageTag) -> u64 {
        match tag {
            MessageTag::M1 => self.v_power,
            MessageTag::M2 => self.v_power + self.interval,
            MessageTag::M3 => self.interval,
            MessageTag::M4 => self.kcs,
            MessageTag::M5 | MessageTag::RouteFlood => 0,
        }
    }

    /// `2 L(V^p/q) + 2 L((V^q)^p) + L(K_CS)`.
    pub fn handshake(&self) -> u64 {
        2 * self.v_power + 2 * self.interval + self.kcs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccountingMode {
    PaperFields(FieldBits),
    Wire,
}

impl AccountingMode {
    pub fn paper() -> Self {
        Self::PaperFields(FieldBits::default())
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::PaperFields(_) => "paper",
            Self::Wire => "wire",
        }
    }
}

/// Radio energy model. Energy per bit is `voltage * current / data_rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioModel {
    pub voltage_v: f64,
    pub current_a: f64,
    pub data_rate_bps: f64,
    pub modmul_uj: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        Self {
            voltage_v: 3.3,
            current_a: 0.010,
            data_rate_bps: 250_000.0,
            modmul_uj: 1.0,
        }
    }
}

impl RadioModel {
    pub fn energy_per_bit_j(&self) -> f64 {
        self.voltage_v * self.current_a / self.data_rate_bps
    }

    pub fn energy_mj(&self, bits: u64, modmuls: u64) -> f64 {
        (bits as f64 * self.energy_per_bit_j() + modmuls as f64 * self.modmul_uj * 1e-6) * 1e3
    }
}

/// Cost constants for the comparison baseline. Nothing here is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TinyZkpBaseline {
    pub private_keys_per_node: u64,
    pub public_keys_per_node: u64,
    pub private_key_bytes: u64,
    pub public_key_bytes: u64,
    pub signature_bits: u64,
    pub digest_bytes: u64,
    pub session_key_bytes: u64,
    pub comm_bits: u64,
    pub modmul_t: u64,
    pub modmul_k: u64,
}

impl Default for TinyZkpBaseline {
    fn default() -> Self {
        Self {
            private_keys_per_node: 20,
            public_keys_per_node: 20,
            private_key_bytes: 20,
            public_key_bytes: 40,
            signature_bits: 320,
            digest_bytes: 20,
            session_key_bytes: SESSION_KEY_LEN as u64,
            comm_bits: 1710,
            modmul_t: 1,
            modmul_k: 20,
        }
    }
}

impl TinyZkpBaseline {
    pub fn keys_per_node(&self) -> u64 {
        self.private_keys_per_node + self.public_keys_per_node
    }

    pub fn sink_public_keys(&self, n_nodes: u64) -> u64 {
        self.public_keys_per_node * n_nodes
    }

    /// Modular multiplications to generate or verify an identity.
    pub fn modmuls(&self) -> u64 {
        modmul_cost(self.modmul_t, self.modmul_k)
    }

    /// Keys plus one signature buffer and one digest buffer.
    pub fn node_memory(&self) -> u64 {
        self.private_keys_per_node * self.private_key_bytes
            + self.public_keys_per_node * self.public_key_bytes
            + self.signature_bits / 8
            + self.digest_bytes
    }

    /// Every node's public keys, an authentication and a data key per node,
    /// and one signature-verification buffer per node.
    pub fn sink_memory(&self, n_nodes: u64) -> u64 {
        self.sink_public_keys(n_nodes) * self.public_key_bytes
            + 2 * n_nodes * self.session_key_bytes
            + n_nodes * (self.signature_bits / 8 + self.digest_bytes)
    }
}

/// `T * (k + 2) / 2`, rounded down when `T * (k + 2)` is odd.
pub fn modmul_cost(t: u64, k: u64) -> u64 {
    t * (k + 2) / 2
}

/// Expected square-and-multiply count for a uniform `bits`-wide exponent.
pub fn expected_modexp_modmuls(bits: u64) -> u64 {
    (bits - 1) + (bits / 2 - 1)
}

/// Bits of one handshake on a single hop under the chosen mode.
pub fn handshake_bits(params: &ProtocolParams, mode: AccountingMode) -> u64 {
    match mode {
        AccountingMode::PaperFields(f) => f.handshake(),
        AccountingMode::Wire => {
            let frames = [
                2 + 2 + m1_ct_len(params),
                1 + 2 + m2_ct_len(params) + params.width_bytes() + TAG_LEN,
                2 + 2 + m3_ct_len(params),
                1 + 2 + params.kcs_bytes(),
            ];
            8 * frames.iter().sum::<usize>() as u64
        }
    }
}

/// Communication cost of a run.
///
/// `PaperFields` charges each handshake frame once, at the hop where its
/// endpoint sent it. `Wire` charges every transmitted hop at its full
/// framed length, attacker frames included.
pub fn comm_cost(trace: &Trace, mode: AccountingMode) -> u64 {
    trace
        .records
        .iter()
        .map(|r| match (r, mode) {
            (
                Record::Sent {
                    from: Some(f),
                    to: Some(_),
                    origin,
                    tag: Some(tag),
                    ..
                },
                AccountingMode::PaperFields(fields),
            ) if f == origin => fields.for_tag(*tag),
            (
                Record::Sent {
                    to: Some(_), bytes, ..
                },
                AccountingMode::Wire,
            ) => 8 * bytes.len() as u64,
            _ => 0,
        })
        .sum()
}

/// Per-session scalars: `p` or `q`, the offset, `K_CS`, and the window.
fn session_scalars(params: &ProtocolParams) -> u64 {
    (params.exponent_bytes() + 2 + params.kcs_bytes() + params.interval_bytes()) as u64
}

/// Pre-distributed items a node holds: its session key and `V`.
pub fn node_base_memory(params: &ProtocolParams) -> u64 {
    (SESSION_KEY_LEN + params.width_bytes()) as u64
}

/// A node's footprint. A live session adds the commitment envelope and the
/// session scalars.
pub fn node_memory(params: &ProtocolParams, in_session: bool) -> u64 {
    let session = if in_session {
        (params.width_bytes() + TAG_LEN) as u64 + session_scalars(params)
    } else {
        0
    };
    node_base_memory(params) + session
}

/// The sink keeps every node's key and secret plus scalars per live session.
pub fn sink_memory(params: &ProtocolParams, n_nodes: u64, sessions: u64) -> u64 {
    n_nodes * node_base_memory(params) + sessions * session_scalars(params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryFootprint {
    pub n_nodes: u64,
    pub node_bytes: u64,
    pub sink_bytes: u64,
}

impl MemoryFootprint {
    pub fn total(&self) -> u64 {
        self.n_nodes * self.node_bytes + self.sink_bytes
    }

    /// Every node mid-session and the sink holding one session per node.
    pub fn banzkp(params: &ProtocolParams, n_nodes: u64) -> Self {
        Self {
            n_nodes,
            node_bytes: node_memory(params, true),
            sink_bytes: sink_memory(params, n_nodes, n_nodes),
        }
    }

    pub fn tinyzkp(baseline: &TinyZkpBaseline, n_nodes: u64) -> Self {
        Self {
            n_nodes,
            node_bytes: baseline.node_memory(),
            sink_bytes: baseline.sink_memory(n_nodes),
        }
    }

    /// Percentage by which `self` is smaller than `other`.
    pub fn reduction_vs(&self, other: &Self) -> f64 {
        percent_reduction(self.total() as f64, other.total() as f64)
    }
}

pub fn percent_reduction(ours: f64, theirs: f64) -> f64 {
    if theirs == 0.0 {
        0.0
    } else {
        (theirs - ours) / theirs * 100.0
    }
}

/// Fills each entry's energy from its bits and multiplications. Returns
/// the network total in mJ.
pub fn energy_cost(ledger: &mut CostLedger, radio: &RadioModel) -> f64 {
    for c in ledger.entries.values_mut() {
        c.energy_mj = radio.energy_mj(c.bits_tx + c.bits_rx, c.modmuls);
    }
    ledger.entries.values().map(|c| c.energy_mj).sum()
}

/// Memory and energy for a finished run. `started` lists every node that
/// opened a session, once per session.
pub(crate) fn finalize_ledger(
    ledger: &mut CostLedger,
    params: &ProtocolParams,
    started: &[NodeId],
    n_sensors: usize,
    radio: &RadioModel,
) {
    let mut distinct: Vec<NodeId> = started.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for (id, c) in ledger.entries.iter_mut() {
        c.mem_bytes = if *id == SINK_ID {
            sink_memory(params, n_sensors as u64, distinct.len() as u64)
        } else {
            node_memory(params, distinct.binary_search(id).is_ok())
        };
    }
    energy_cost(ledger, radio);
}

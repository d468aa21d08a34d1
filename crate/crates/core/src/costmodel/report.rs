use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    expected_modexp_modmuls, handshake_bits, node_memory, percent_reduction, sink_memory,
    AccountingMode, MemoryFootprint, RadioModel, TinyZkpBaseline,
};
use crate::crypto::{ProtocolParams, SESSION_KEY_LEN};
use crate::protocol::MessageTag;

pub const CSV_HEADER: &str = "role,bits_tx,bits_rx,modmuls,mem_bytes,energy_mJ,mode";

/// Data each node sends per round after authenticating: six full
/// 802.15.4 frames. Both schemes carry it identically.
const DATA_FRAMES: u64 = 6;
const DATA_FRAME_BYTES: u64 = 127;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub banzkp: f64,
    pub tinyzkp: f64,
    /// How much smaller the BANZKP figure is, in percent.
    pub reduction_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleRow {
    pub role: String,
    pub bits_tx: u64,
    pub bits_rx: u64,
    pub modmuls: u64,
    pub mem_bytes: u64,
    pub energy_mj: f64,
}

/// One round: every node authenticates once and sends its data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub mode: String,
    pub n_nodes: u64,
    pub metrics: Vec<MetricRow>,
    pub roles: Vec<RoleRow>,
    pub calibration: Vec<String>,
}

fn metric(name: &str, ours: f64, theirs: f64) -> MetricRow {
    MetricRow {
        metric: name.into(),
        banzkp: ours,
        tinyzkp: theirs,
        reduction_pct: percent_reduction(ours, theirs),
    }
}

fn role(
    name: &str,
    bits_tx: u64,
    bits_rx: u64,
    modmuls: u64,
    mem: u64,
    radio: &RadioModel,
) -> RoleRow {
    RoleRow {
        role: name.into(),
        bits_tx,
        bits_rx,
        modmuls,
        mem_bytes: mem,
        energy_mj: radio.energy_mj(bits_tx + bits_rx, modmuls),
    }
}

/// BANZKP against the baseline for one round of `n_nodes` sessions.
///
/// Bits are charged at both the sender and the receiver. In paper mode
/// BANZKP is charged no modular multiplications, since its exponentiations
/// use pre-distributed material; in wire mode each endpoint is charged two
/// exponentiations at the expected square-and-multiply count.
pub fn compare(
    params: &ProtocolParams,
    mode: AccountingMode,
    radio: &RadioModel,
    baseline: &TinyZkpBaseline,
    n_nodes: u64,
) -> CostReport {
    let n = n_nodes;
    let data_bits = DATA_FRAMES * DATA_FRAME_BYTES * 8;

    let (up, down) = match mode {
        AccountingMode::PaperFields(f) => (
            f.for_tag(MessageTag::M1) + f.for_tag(MessageTag::M3),
            f.for_tag(MessageTag::M2) + f.for_tag(MessageTag::M4),
        ),
        AccountingMode::Wire => {
            let wire = |m: usize| 8 * m as u64;
            let up = wire(4 + crate::protocol::m1_ct_len(params))
                + wire(4 + crate::protocol::m3_ct_len(params));
            (up, handshake_bits(params, AccountingMode::Wire) - up)
        }
    };
    let modexp_cost = match mode {
        AccountingMode::PaperFields(_) => 0,
        AccountingMode::Wire => 2 * expected_modexp_modmuls(params.exponent_bits() as u64),
    };

    let ours_mem = MemoryFootprint::banzkp(params, n);
    let theirs_mem = MemoryFootprint::tinyzkp(baseline, n);

    let b_node = role(
        "banzkp-node",
        up + data_bits,
        down,
        modexp_cost,
        node_memory(params, true),
        radio,
    );
    let b_sink = role(
        "banzkp-sink",
        n * down,
        n * (up + data_bits),
        n * modexp_cost,
        sink_memory(params, n, n),
        radio,
    );
    let t_node = role(
        "tinyzkp-node",
        baseline.comm_bits + data_bits,
        0,
        baseline.modmuls(),
        baseline.node_memory(),
        radio,
    );
    let t_sink = role(
        "tinyzkp-sink",
        0,
        n * (baseline.comm_bits + data_bits),
        n * baseline.modmuls(),
        baseline.sink_memory(n),
        radio,
    );

    let round_energy = |node: &RoleRow, sink: &RoleRow| n as f64 * node.energy_mj + sink.energy_mj;
    let metrics = vec![
        metric(
            "handshake bits per session",
            (up + down) as f64,
            baseline.comm_bits as f64,
        ),
        metric(
            "modmuls per session",
            (2 * modexp_cost) as f64,
            (2 * baseline.modmuls()) as f64,
        ),
        metric("keys per node", 2.0, baseline.keys_per_node() as f64),
        metric("sink public keys", 0.0, baseline.sink_public_keys(n) as f64),
        metric("sink shared keys", (2 * n) as f64, (2 * n) as f64),
        metric(
            "node memory bytes",
            ours_mem.node_bytes as f64,
            theirs_mem.node_bytes as f64,
        ),
        metric(
            "sink memory bytes",
            ours_mem.sink_bytes as f64,
            theirs_mem.sink_bytes as f64,
        ),
        metric(
            "total memory bytes",
            ours_mem.total() as f64,
            theirs_mem.total() as f64,
        ),
        metric(
            "energy per round mJ",
            round_energy(&b_node, &b_sink),
            round_energy(&t_node, &t_sink),
        ),
    ];

    let calibration = vec![
        format!("modulus width {} bits; V stored as {} bytes", params.modulus_bits(), params.width_bytes()),
        format!("session key {SESSION_KEY_LEN} bytes; commit key {} bytes", params.kcs_bytes()),
        format!(
            "baseline ECDSA key {} bytes private, {} bytes public; signature {} bits; SHA-1 digest {} bytes",
            baseline.private_key_bytes,
            baseline.public_key_bytes,
            baseline.signature_bits,
            baseline.digest_bytes
        ),
        format!(
            "radio {} V, {} mA, {} kbps = {:.0} nJ/bit; {} uJ per modmul",
            radio.voltage_v,
            radio.current_a * 1e3,
            radio.data_rate_bps / 1e3,
            radio.energy_per_bit_j() * 1e9,
            radio.modmul_uj
        ),
        format!("round: {n} nodes, each one handshake plus {DATA_FRAMES} data frames of {DATA_FRAME_BYTES} bytes; bits charged at sender and receiver"),
        match mode {
            AccountingMode::PaperFields(f) => format!(
                "counted fields: V^p {} bits, window {} bits, K_CS {} bits; BANZKP charged 0 modmuls",
                f.v_power, f.interval, f.kcs
            ),
            AccountingMode::Wire => format!(
                "wire: full framed bytes; {} modmuls per {}-bit exponentiation",
                expected_modexp_modmuls(params.exponent_bits() as u64),
                params.exponent_bits()
            ),
        },
        format!(
            "baseline modmuls T*(k+2)/2 with T={}, k={} at node and at sink",
            baseline.modmul_t, baseline.modmul_k
        ),
    ];

    CostReport {
        mode: mode.label().into(),
        n_nodes: n,
        metrics,
        roles: vec![b_node, b_sink, t_node, t_sink],
        calibration,
    }
}

impl CostReport {
    pub fn metric(&self, name: &str) -> Option<&MetricRow> {
        self.metrics.iter().find(|m| m.metric == name)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<28} {:>14} {:>14} {:>12}",
            "metric", "BANZKP", "TinyZKP", "reduction_%"
        )
        .unwrap();
        for m in &self.metrics {
            writeln!(
                out,
                "{:<28} {:>14} {:>14} {:>12.2}",
                m.metric,
                fmt_num(m.banzkp),
                fmt_num(m.tinyzkp),
                m.reduction_pct
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "mode: {}", self.mode).unwrap();
        for c in &self.calibration {
            writeln!(out, "calibration: {c}").unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.roles {
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{}",
                r.role, r.bits_tx, r.bits_rx, r.modmuls, r.mem_bytes, r.energy_mj, self.mode
            )
            .unwrap();
        }
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.4}")
    }
}

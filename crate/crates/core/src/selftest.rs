//! Quick invariant checks runnable from the command line.

use num_bigint::BigUint;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::adversary::node_complete;
use crate::costmodel::{handshake_bits, modmul_cost, AccountingMode, TinyZkpBaseline};
use crate::crypto::{extract_interval, modexp, seeded_rng, ProtocolParams};
use crate::netsim::{run, DropReason, Record, Role, Scenario};
use crate::protocol::Message;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        pass,
        detail: detail.into(),
    }
}

fn repeated_mul(base: u64, exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    for _ in 0..exp {
        acc = acc * base % m;
    }
    acc
}

fn commutativity(seed: u64, cases: usize) -> Check {
    let mut rng = seeded_rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let m: u64 = rng.gen_range(3..1 << 16) | 1;
        let v = rng.gen_range(2..m);
        let p = rng.gen_range(1..64);
        let q = rng.gen_range(1..64);
        let big = |x: u64| BigUint::from(x);
        let vp = modexp(&big(v), &big(p), &big(m)).unwrap();
        let vq = modexp(&big(v), &big(q), &big(m)).unwrap();
        let a = modexp(&vp, &big(q), &big(m)).unwrap();
        let b = modexp(&vq, &big(p), &big(m)).unwrap();
        let oracle = repeated_mul(repeated_mul(v, p, m), q, m);
        if a != b || a != big(oracle) {
            bad += 1;
        }
    }
    check(
        "modexp commutativity",
        bad == 0,
        format!("{bad}/{cases} mismatches"),
    )
}

fn intervals(seed: u64, cases: usize) -> Check {
    let mut rng = seeded_rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let width = 8 * rng.gen_range(1..=16);
        let mut bytes = vec![0u8; width / 8];
        rng.fill_bytes(&mut bytes);
        let bits: String = bytes.iter().map(|b| format!("{b:08b}")).collect();
        let start = rng.gen_range(0..width);
        let len = rng.gen_range(1..=width - start);
        let got = extract_interval(&BigUint::from_bytes_be(&bytes), width, start, len).unwrap();
        let got_bits: String = got.iter().map(|b| format!("{b:08b}")).collect();
        let want = &bits[start..start + len];
        // Window bits first, zero padding after.
        if &got_bits[..len] != want || got_bits[len..].contains('1') {
            bad += 1;
        }
    }
    check(
        "interval extraction",
        bad == 0,
        format!("{bad}/{cases} mismatches"),
    )
}

fn honest_run(seed: u64, modulus_bits: usize) -> Vec<Check> {
    let s = Scenario::honest7(seed).with_modulus_bits(modulus_bits);
    let trace = match run(&s) {
        Ok(t) => t,
        Err(e) => return vec![check("honest run", false, e.to_string())],
    };
    let complete = s
        .topology
        .sensors()
        .into_iter()
        .filter(|n| node_complete(&trace, *n))
        .count();
    let sum = trace.summary();
    let relay_decrypts = trace
        .records
        .iter()
        .filter(|r| {
            matches!(r, Record::Decrypt { node, frame, .. } if {
                // The decrypting node must be the frame's final destination.
                let dest = trace.records.iter().find_map(|x| match x {
                    Record::Sent { frame: f, destination, .. } if f == frame => Some(*destination),
                    _ => None,
                });
                dest != Some(*node)
            })
        })
        .count();
    let undelivered = trace.records.iter().any(|r| {
        matches!(
            r,
            Record::Dropped {
                reason: DropReason::NoRoute,
                ..
            }
        )
    });
    let again = run(&s).map(|t| t.digest()).unwrap_or_default();
    let sink_transitions = trace
        .records
        .iter()
        .filter(|r| {
            matches!(
                r,
                Record::Transition {
                    role: Role::Sink,
                    ..
                }
            )
        })
        .count();
    vec![
        check("completeness", complete == 6, format!("{complete}/6 nodes")),
        check(
            "conservation",
            sum.frames_sent == sum.frames_delivered + sum.frames_dropped && !undelivered,
            format!(
                "{} sent, {} delivered, {} dropped",
                sum.frames_sent, sum.frames_delivered, sum.frames_dropped
            ),
        ),
        check(
            "relay opacity",
            relay_decrypts == 0,
            format!("{relay_decrypts} relay decrypts"),
        ),
        check("determinism", again == trace.digest(), trace.digest()),
        check(
            "sink bookkeeping",
            sink_transitions == 12 && trace.routes.len() == 6,
            format!("{sink_transitions} sink transitions"),
        ),
    ]
}

fn codec(seed: u64, params: &ProtocolParams) -> Check {
    let mut rng = seeded_rng(seed);
    let mut bad = 0;
    for _ in 0..1000 {
        let mut frame = vec![0u8; rng.gen_range(0..600)];
        rng.fill_bytes(&mut frame);
        if let Ok(m) = Message::decode(&frame, params) {
            if m.encode().ok().as_deref() != Some(frame.as_slice()) {
                bad += 1;
            }
        }
    }
    check(
        "codec noise",
        bad == 0,
        format!("{bad} non-canonical decodes"),
    )
}

fn costs(params: &ProtocolParams) -> Check {
    let ours = handshake_bits(params, AccountingMode::paper());
    let theirs = TinyZkpBaseline::default().comm_bits;
    check(
        "published cost constants",
        ours == 1000 && theirs == 1710 && modmul_cost(1, 20) == 11,
        format!("{ours} vs {theirs} bits"),
    )
}

/// Runs every check at the given modulus width.
pub fn run_all(seed: u64, modulus_bits: usize) -> Vec<Check> {
    let params = match ProtocolParams::with_modulus_bits(modulus_bits) {
        Ok(p) => p,
        Err(e) => return vec![check("parameters", false, e.to_string())],
    };
    let mut out = vec![
        commutativity(seed, 10_000),
        intervals(seed, 10_000),
        codec(seed, &params),
        costs(&params),
    ];
    out.extend(honest_run(seed, modulus_bits));
    out
}

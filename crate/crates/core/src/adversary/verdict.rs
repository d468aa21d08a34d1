use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AdversarySpec;
use crate::netsim::{Record, SecretKind, Trace};
use crate::protocol::{MessageTag, NodeId, NodeState, SinkState};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// The attack got something accepted it should not have.
    pub accepted: bool,
    /// Every node outside the attack still authenticated and delivered.
    pub control_ok: bool,
    pub detail: String,
}

/// Both ends authenticated and the sink delivered exactly what the
/// application handed over, in order.
pub fn node_complete(trace: &Trace, node: NodeId) -> bool {
    let sent: Vec<&[u8]> = trace
        .app_inputs()
        .filter(|(_, n, _)| *n == node)
        .map(|(_, _, d)| d)
        .collect();
    let got: Vec<&[u8]> = trace
        .deliveries()
        .filter(|(_, n, _)| *n == node)
        .map(|(_, _, d)| d)
        .collect();
    trace.node_state(node) == Some(NodeState::Authenticated)
        && trace.sink_state(node) == Some(SinkState::Authenticated)
        && !sent.is_empty()
        && sent == got
}

/// Completeness for every node with traffic except `victim`.
pub fn bystanders_complete(trace: &Trace, victim: Option<NodeId>) -> bool {
    let nodes: BTreeSet<NodeId> = trace.app_inputs().map(|(_, n, _)| n).collect();
    nodes
        .into_iter()
        .filter(|n| Some(*n) != victim)
        .all(|n| node_complete(trace, n))
}

/// Occurrences of hidden session material inside any transmitted frame.
pub fn secrecy_hits(trace: &Trace) -> usize {
    let hidden: Vec<&[u8]> = trace
        .records
        .iter()
        .filter_map(|r| match r {
            Record::Material { kind, value, .. } if kind.must_stay_hidden() => {
                Some(value.as_slice())
            }
            _ => None,
        })
        .collect();
    trace
        .wire_frames()
        .map(|frame| {
            hidden
                .iter()
                .filter(|h| !h.is_empty() && frame.windows(h.len()).any(|w| w == **h))
                .count()
        })
        .sum()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Freshness {
    pub sessions: usize,
    pub distinct_p: usize,
    pub distinct_q: usize,
    pub distinct_kcs: usize,
    pub distinct_tuples: usize,
}

impl Freshness {
    pub fn all_fresh(&self) -> bool {
        self.distinct_p == self.sessions
            && self.distinct_q == self.sessions
            && self.distinct_kcs == self.sessions
            && self.distinct_tuples == self.sessions
    }
}

/// Distinctness of per-session values over every session the sink opened.
/// Each sink session is paired with the node exponent in force when it
/// was opened.
/// Node exponent, sink exponent, interval offset, commit key.
type SessionTuple = (Vec<u8>, Vec<u8>, Vec<u8>, Vec<u8>);

pub fn freshness(trace: &Trace) -> Freshness {
    let mut current_p: std::collections::BTreeMap<NodeId, &[u8]> = Default::default();
    let mut tuples: Vec<SessionTuple> = Vec::new();
    let mut pending: Option<(NodeId, Vec<u8>, Vec<u8>)> = None;
    for r in &trace.records {
        let Record::Material {
            node, kind, value, ..
        } = r
        else {
            continue;
        };
        match kind {
            SecretKind::NodeExponent => {
                current_p.insert(*node, value);
            }
            SecretKind::SinkExponent => pending = Some((*node, value.clone(), Vec::new())),
            SecretKind::IntervalOffset => {
                if let Some(p) = pending.as_mut() {
                    p.2 = value.clone();
                }
            }
            SecretKind::CommitKey => {
                if let Some((n, q, ri)) = pending.take() {
                    let p = current_p.get(&n).map(|v| v.to_vec()).unwrap_or_default();
                    tuples.push((p, q, ri, value.clone()));
                }
            }
            _ => {}
        }
    }
    let distinct =
        |f: &dyn Fn(&SessionTuple) -> Vec<u8>| tuples.iter().map(f).collect::<BTreeSet<_>>().len();
    Freshness {
        sessions: tuples.len(),
        distinct_p: distinct(&|t| t.0.clone()),
        distinct_q: distinct(&|t| t.1.clone()),
        distinct_kcs: distinct(&|t| t.3.clone()),
        distinct_tuples: tuples.iter().collect::<BTreeSet<_>>().len(),
    }
}

/// Time of the first attacker transmission or interception.
fn attack_start(trace: &Trace) -> Option<u64> {
    trace.records.iter().find_map(|r| match r {
        Record::Sent { from: None, t, .. } | Record::Intercepted { t, .. } => Some(*t),
        _ => None,
    })
}

fn deliveries_for(trace: &Trace, node: NodeId) -> Vec<&[u8]> {
    trace
        .deliveries()
        .filter(|(_, n, _)| *n == node)
        .map(|(_, _, d)| d)
        .collect()
}

/// Judges one run against the attacker it contained.
pub fn judge(spec: &AdversarySpec, trace: &Trace) -> Verdict {
    let control_ok = bystanders_complete(trace, spec.victim());
    let start = attack_start(trace).unwrap_or(u64::MAX);
    let (accepted, expected_end, detail) = match *spec {
        AdversarySpec::ForgeNode { victim, .. } => {
            let delivered = deliveries_for(trace, victim).len();
            let authed = !trace
                .sink_transitions_to(victim, SinkState::Authenticated)
                .is_empty();
            let state = trace.sink_state(victim);
            (
                delivered > 0 || authed,
                state == Some(SinkState::Rejected),
                format!("sink {state:?}, {delivered} deliveries"),
            )
        }
        AdversarySpec::ForgeSink { victim, .. } => {
            let m5_after = trace
                .records
                .iter()
                .filter(|r| {
                    matches!(r, Record::Sent { t, from: Some(f), origin, tag: Some(MessageTag::M5), .. }
                        if *t >= start && *f == victim && *origin == victim)
                })
                .count();
            let state = trace.node_state(victim);
            (
                m5_after > 0,
                state == Some(NodeState::Aborted),
                format!("node {state:?}, {m5_after} data frames after the attack began"),
            )
        }
        AdversarySpec::Replay { victim, .. } => {
            let late_auth = trace
                .sink_transitions_to(victim, SinkState::Authenticated)
                .into_iter()
                .filter(|t| *t >= start)
                .count();
            let state = trace.sink_state(victim);
            let own_data = deliveries_for(trace, victim).len()
                == trace.app_inputs().filter(|(_, n, _)| *n == victim).count();
            (
                late_auth > 0,
                state == Some(SinkState::Rejected) && own_data,
                format!("sink {state:?}, {late_auth} authentications after replay"),
            )
        }
        AdversarySpec::Inject { victim, .. } => {
            let honest: Vec<&[u8]> = trace
                .app_inputs()
                .filter(|(_, n, _)| *n == victim)
                .map(|(_, _, d)| d)
                .collect();
            let got = deliveries_for(trace, victim);
            let foreign = got.iter().filter(|d| !honest.contains(d)).count();
            let extra = got
                .len()
                .saturating_sub(trace.originated(victim, MessageTag::M5));
            (
                foreign + extra > 0,
                node_complete(trace, victim),
                format!(
                    "{} deliveries, {foreign} foreign, {extra} duplicated",
                    got.len()
                ),
            )
        }
        AdversarySpec::Mitm { victim, target } => match target {
            None => (
                false,
                node_complete(trace, victim),
                "pass-through".to_string(),
            ),
            Some(tag) => {
                let delivered = deliveries_for(trace, victim).len();
                let node = trace.node_state(victim);
                let sink = trace.sink_state(victim);
                let handshake_accepted =
                    tag != MessageTag::M5 && node == Some(NodeState::Authenticated);
                let detected = tag == MessageTag::M5
                    || node == Some(NodeState::Aborted)
                    || sink == Some(SinkState::Rejected);
                (
                    delivered > 0 || handshake_accepted,
                    detected,
                    format!("{tag} mutated: node {node:?}, sink {sink:?}, {delivered} deliveries"),
                )
            }
        },
        AdversarySpec::Eavesdrop => {
            let hits = secrecy_hits(trace);
            (
                hits > 0,
                true,
                format!("{hits} secret substrings on the wire"),
            )
        }
    };
    Verdict {
        pass: !accepted && expected_end && control_ok,
        accepted,
        control_ok,
        detail,
    }
}

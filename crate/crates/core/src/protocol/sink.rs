use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::session::{self, Binding, Registry};
use super::{DecryptAttempt, Message, MessageTag, NodeId, SINK_ID};
use crate::crypto::{
    draw_commit_key, draw_exponent, draw_ri, extract_interval, modmul_count, open, seal, CommitKey,
    CommitmentEnvelope, ProtocolParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SinkState {
    Idle,
    SentM2,
    Authenticated,
    Rejected,
}

impl fmt::Display for SinkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Fresh values the sink drew for one session, exposed for auditing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SinkSessionMaterial {
    pub q: BigUint,
    pub ri: u16,
    pub kcs: CommitKey,
    pub shared: BigUint,
}

#[derive(Debug, Default)]
pub struct SinkOutput {
    /// Replies, each addressed to a node.
    pub messages: Vec<(NodeId, Message)>,
    /// Data accepted from an authenticated node.
    pub delivered: Option<(NodeId, Vec<u8>)>,
    pub decrypts: Vec<DecryptAttempt>,
    pub modmuls: u64,
    pub transition: Option<(NodeId, SinkState, SinkState)>,
    /// Set when this step opened a session for the node.
    pub new_session: Option<NodeId>,
    /// Frames the sink refused, with the reason.
    pub audit: Vec<(NodeId, &'static str)>,
}

#[derive(Clone, Debug)]
struct SinkSession {
    state: SinkState,
    material: Option<SinkSessionMaterial>,
    vp_binding: Binding,
    session_binding: Binding,
    expected_interval: Vec<u8>,
    next_seq: u32,
}

impl SinkSession {
    fn idle() -> Self {
        Self {
            state: SinkState::Idle,
            material: None,
            vp_binding: [0; session::BINDING_LEN],
            session_binding: [0; session::BINDING_LEN],
            expected_interval: Vec::new(),
            next_seq: 0,
        }
    }
}

/// The sink's side of every node's handshake, one session per node.
///
/// A validly sealed M1 opens a fresh session from any state, including
/// `Rejected`. Nothing else leaves `Rejected`.
#[derive(Clone, Debug)]
pub struct SinkFsm {
    params: ProtocolParams,
    registry: Registry,
    sessions: BTreeMap<NodeId, SinkSession>,
}

impl SinkFsm {
    pub fn new(params: ProtocolParams, registry: Registry) -> Self {
        let sessions = registry.ids().map(|id| (id, SinkSession::idle())).collect();
        Self {
            params,
            registry,
            sessions,
        }
    }

    /// Session state for a registered node.
    pub fn state(&self, node: NodeId) -> Option<SinkState> {
        self.sessions.get(&node).map(|s| s.state)
    }

    pub fn states(&self) -> impl Iterator<Item = (NodeId, SinkState)> + '_ {
        self.sessions.iter().map(|(id, s)| (*id, s.state))
    }

    pub fn session_material(&self, node: NodeId) -> Option<&SinkSessionMaterial> {
        self.sessions.get(&node).and_then(|s| s.material.as_ref())
    }

    /// The 200-bit window fixed when M2 went out.
    pub fn expected_interval(&self, node: NodeId) -> Option<&[u8]> {
        self.sessions
            .get(&node)
            .filter(|s| s.material.is_some())
            .map(|s| s.expected_interval.as_slice())
    }

    pub fn step<R: RngCore + ?Sized>(&mut self, msg: Message, rng: &mut R) -> SinkOutput {
        let mut out = SinkOutput::default();
        let Some(sender) = msg.sender() else {
            return out;
        };
        if matches!(msg, Message::RouteFlood { .. }) {
            return out;
        }
        if !self.sessions.contains_key(&sender) {
            out.audit.push((sender, "unregistered sender"));
            return out;
        }
        let before = self.sessions[&sender].state;
        match msg {
            Message::M1 { ct, .. } => self.on_hello(sender, &ct, rng, &mut out),
            Message::M3 { ct, .. } => self.on_response(sender, &ct, &mut out),
            Message::M5 { ct, .. } => self.on_data(sender, &ct, &mut out),
            _ => {}
        }
        let after = self.sessions[&sender].state;
        if after != before {
            out.transition = Some((sender, before, after));
        }
        out
    }

    fn reject(&mut self, node: NodeId, out: &mut SinkOutput, reason: &'static str) {
        let s = self.sessions.get_mut(&node).expect("registered");
        s.state = SinkState::Rejected;
        out.audit.push((node, reason));
    }

    fn on_hello<R: RngCore + ?Sized>(
        &mut self,
        node: NodeId,
        ct: &[u8],
        rng: &mut R,
        out: &mut SinkOutput,
    ) {
        let (key, secret) = self.registry.get(node).expect("registered").clone();
        let plain = open(&key, ct, &session::ctx_m1(node));
        out.decrypts.push(DecryptAttempt {
            tag: MessageTag::M1,
            ok: plain.is_ok(),
        });
        let Ok(plain) = plain else {
            return self.reject(node, out, "M1 failed to decrypt");
        };
        let w = self.params.width_bytes();
        if plain.len() != 1 + w || plain[0] != node {
            return self.reject(node, out, "M1 identity mismatch");
        }
        let vp = BigUint::from_bytes_be(&plain[1..]);
        if !self.params.is_nondegenerate(&vp) {
            return self.reject(node, out, "M1 carries a degenerate element");
        }

        let q = draw_exponent(rng, &self.params);
        let ri = draw_ri(rng, &self.params);
        let kcs = draw_commit_key(rng, &self.params);
        let vq = self
            .params
            .pow(secret.value(), &q)
            .expect("secret is reduced");
        let shared = self.params.pow(&vp, &q).expect("vp is reduced");
        out.modmuls += 2 * modmul_count(&q);
        let expected_interval = extract_interval(
            &shared,
            self.params.modulus_bits(),
            ri as usize,
            self.params.interval_bits(),
        )
        .expect("ri drawn in range");

        let vp_binding = session::binding(&self.params, &[&vp]);
        let mut a = Vec::with_capacity(1 + w + 2);
        a.push(SINK_ID);
        a.extend_from_slice(&self.params.encode_element(&vq));
        a.extend_from_slice(&ri.to_be_bytes());
        let ct_a = seal(&key, &a, &session::ctx_m2(node, &vp_binding));
        let committed = seal(
            &kcs,
            &self.params.encode_element(&shared),
            &session::ctx_commit(node, &vp_binding),
        );
        let commitment =
            CommitmentEnvelope::new(committed, &self.params).expect("fixed-width plaintext");

        let s = self.sessions.get_mut(&node).expect("registered");
        *s = SinkSession {
            state: SinkState::SentM2,
            session_binding: session::binding(&self.params, &[&vp, &vq]),
            material: Some(SinkSessionMaterial { q, ri, kcs, shared }),
            vp_binding,
            expected_interval,
            next_seq: 0,
        };
        out.new_session = Some(node);
        out.messages.push((node, Message::M2 { ct_a, commitment }));
    }

    fn on_response(&mut self, node: NodeId, ct: &[u8], out: &mut SinkOutput) {
        let key = self.registry.get(node).expect("registered").0.clone();
        let s = &self.sessions[&node];
        if s.state != SinkState::SentM2 {
            out.audit.push((node, "M3 outside a challenge"));
            return;
        }
        let plain = open(&key, ct, &session::ctx_m3(node, &s.vp_binding));
        out.decrypts.push(DecryptAttempt {
            tag: MessageTag::M3,
            ok: plain.is_ok(),
        });
        let Ok(plain) = plain else {
            return self.reject(node, out, "M3 failed to decrypt");
        };
        if plain.first() != Some(&node) {
            return self.reject(node, out, "M3 identity mismatch");
        }
        if plain[1..] != s.expected_interval[..] {
            return self.reject(node, out, "interval mismatch");
        }
        let kcs = s.material.as_ref().expect("set at M1").kcs.clone();
        let s = self.sessions.get_mut(&node).expect("registered");
        s.state = SinkState::Authenticated;
        out.messages.push((node, Message::M4 { kcs }));
    }

    fn on_data(&mut self, node: NodeId, ct: &[u8], out: &mut SinkOutput) {
        let key = self.registry.get(node).expect("registered").0.clone();
        let s = self.sessions.get_mut(&node).expect("registered");
        if s.state != SinkState::Authenticated {
            out.audit
                .push((node, "data from unauthenticated node dropped"));
            return;
        }
        let plain = open(
            &key,
            ct,
            &session::ctx_m5(node, &s.session_binding, s.next_seq),
        );
        out.decrypts.push(DecryptAttempt {
            tag: MessageTag::M5,
            ok: plain.is_ok(),
        });
        match plain {
            Ok(plain) if plain.first() == Some(&node) => {
                s.next_seq += 1;
                out.delivered = Some((node, plain[1..].to_vec()));
            }
            // A bad data frame does not end an authenticated session.
            _ => out.audit.push((node, "data frame failed authentication")),
        }
    }
}

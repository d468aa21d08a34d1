use std::fmt;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::session::{self, Binding, NodeIdentity};
use super::{DecryptAttempt, Message, MessageTag, SINK_ID};
use crate::crypto::{
    draw_exponent, extract_interval, modmul_count, open, seal, CommitmentEnvelope, ProtocolParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeState {
    Idle,
    SentM1,
    SentM3,
    Authenticated,
    Aborted,
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug)]
pub enum NodeEvent {
    /// The application has data to deliver; opens a new session.
    Start(Vec<u8>),
    Incoming(Message),
    /// A timer previously requested through [`NodeOutput::timer`] fired.
    Timeout(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimerRequest {
    pub id: u64,
    pub delay_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_backoff_ms: 250,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> u64 {
        self.base_backoff_ms << attempt.min(16)
    }
}

/// Everything a single step produced, for the host to act on and record.
#[derive(Debug, Default)]
pub struct NodeOutput {
    pub messages: Vec<Message>,
    pub timer: Option<TimerRequest>,
    pub decrypts: Vec<DecryptAttempt>,
    pub modmuls: u64,
    pub transition: Option<(NodeState, NodeState)>,
    /// A fresh exponent was drawn during this step.
    pub new_session: bool,
    pub reason: Option<&'static str>,
}

#[derive(Clone, Debug)]
struct Session {
    p: BigUint,
    vp: BigUint,
    vp_binding: Binding,
    session_binding: Option<Binding>,
    m1: Message,
    commitment: Option<CommitmentEnvelope>,
    ri: Option<u16>,
    vq: Option<BigUint>,
    own_window: Option<Vec<u8>>,
}

/// Node side of the handshake.
///
/// `Idle -> SentM1 -> SentM3 -> Authenticated`, with `Aborted` reachable
/// from either in-flight state. Only `Start` leaves a terminal state.
#[derive(Clone, Debug)]
pub struct NodeFsm {
    identity: NodeIdentity,
    params: ProtocolParams,
    retry: RetryPolicy,
    state: NodeState,
    session: Option<Session>,
    pending_data: Vec<u8>,
    retries: u32,
    timer_seq: u64,
    armed_timer: Option<u64>,
    data_sent: u32,
}

impl NodeFsm {
    pub fn new(identity: NodeIdentity, params: ProtocolParams) -> Self {
        Self::with_retry(identity, params, RetryPolicy::default())
    }

    pub fn with_retry(identity: NodeIdentity, params: ProtocolParams, retry: RetryPolicy) -> Self {
        Self {
            identity,
            params,
            retry,
            state: NodeState::Idle,
            session: None,
            pending_data: Vec::new(),
            retries: 0,
            timer_seq: 0,
            armed_timer: None,
            data_sent: 0,
        }
    }

    pub fn id(&self) -> u8 {
        self.identity.id
    }

    pub fn state(&self) -> NodeState {
        self.state
    }

    /// Current session exponent, for host-side auditing.
    pub fn session_exponent(&self) -> Option<&BigUint> {
        self.session.as_ref().map(|s| &s.p)
    }

    /// The unopened commitment received in M2, if any.
    pub fn stored_commitment(&self) -> Option<&CommitmentEnvelope> {
        self.session.as_ref().and_then(|s| s.commitment.as_ref())
    }

    pub fn received_ri(&self) -> Option<u16> {
        self.session.as_ref().and_then(|s| s.ri)
    }

    pub fn step<R: RngCore + ?Sized>(&mut self, event: NodeEvent, rng: &mut R) -> NodeOutput {
        let before = self.state;
        let mut out = NodeOutput::default();
        match event {
            NodeEvent::Start(data) => {
                self.pending_data = data;
                self.retries = 0;
                self.begin_session(rng, &mut out);
            }
            NodeEvent::Incoming(msg) => match (self.state, msg) {
                (NodeState::SentM1, Message::M2 { ct_a, commitment }) => {
                    self.on_challenge(&ct_a, commitment, &mut out)
                }
                (NodeState::SentM3, Message::M4 { kcs }) => self.on_reveal(&kcs, &mut out),
                // Out-of-order, duplicated, or foreign frames change nothing.
                _ => {}
            },
            NodeEvent::Timeout(id) => {
                if self.armed_timer == Some(id) {
                    self.armed_timer = None;
                    self.on_timeout(rng, &mut out);
                }
            }
        }
        if self.state != before {
            out.transition = Some((before, self.state));
        }
        out
    }

    fn arm_timer(&mut self, out: &mut NodeOutput) {
        self.timer_seq += 1;
        self.armed_timer = Some(self.timer_seq);
        out.timer = Some(TimerRequest {
            id: self.timer_seq,
            delay_ms: self.retry.backoff(self.retries),
        });
    }

    fn abort(&mut self, out: &mut NodeOutput, reason: &'static str) {
        self.state = NodeState::Aborted;
        self.armed_timer = None;
        out.reason = Some(reason);
    }

    fn begin_session<R: RngCore + ?Sized>(&mut self, rng: &mut R, out: &mut NodeOutput) {
        let p = draw_exponent(rng, &self.params);
        let v = self.identity.secret.value();
        let vp = self.params.pow(v, &p).expect("secret is reduced");
        out.modmuls += modmul_count(&p);
        let id = self.identity.id;

        let mut plain = Vec::with_capacity(1 + self.params.width_bytes());
        plain.push(id);
        plain.extend_from_slice(&self.params.encode_element(&vp));
        let ct = seal(&self.identity.session_key, &plain, &session::ctx_m1(id));
        let m1 = Message::M1 { sender: id, ct };

        self.session = Some(Session {
            vp_binding: session::binding(&self.params, &[&vp]),
            session_binding: None,
            vp,
            p,
            m1: m1.clone(),
            commitment: None,
            ri: None,
            vq: None,
            own_window: None,
        });
        self.state = NodeState::SentM1;
        self.data_sent = 0;
        out.messages.push(m1);
        out.new_session = true;
        self.arm_timer(out);
    }

    fn on_challenge(&mut self, ct_a: &[u8], commitment: CommitmentEnvelope, out: &mut NodeOutput) {
        let id = self.identity.id;
        let session = self.session.as_ref().expect("session exists in SentM1");
        let plain = open(
            &self.identity.session_key,
            ct_a,
            &session::ctx_m2(id, &session.vp_binding),
        );
        out.decrypts.push(DecryptAttempt {
            tag: MessageTag::M2,
            ok: plain.is_ok(),
        });
        let Ok(plain) = plain else {
            return self.abort(out, "M2 failed to decrypt");
        };
        let w = self.params.width_bytes();
        if plain.len() != 1 + w + 2 || plain[0] != SINK_ID {
            return self.abort(out, "M2 does not name the sink");
        }
        let vq = BigUint::from_bytes_be(&plain[1..1 + w]);
        let ri = u16::from_be_bytes([plain[1 + w], plain[2 + w]]);
        if !self.params.is_nondegenerate(&vq) {
            return self.abort(out, "M2 carries a degenerate element");
        }
        if ri as usize > self.params.max_ri() {
            return self.abort(out, "interval offset out of range");
        }

        let session = self.session.as_mut().expect("session exists in SentM1");
        let shared = self.params.pow(&vq, &session.p).expect("vq is reduced");
        out.modmuls += modmul_count(&session.p);
        let window = extract_interval(
            &shared,
            self.params.modulus_bits(),
            ri as usize,
            self.params.interval_bits(),
        )
        .expect("offset checked above");

        let mut m3_plain = Vec::with_capacity(1 + window.len());
        m3_plain.push(id);
        m3_plain.extend_from_slice(&window);
        let ct = seal(
            &self.identity.session_key,
            &m3_plain,
            &session::ctx_m3(id, &session.vp_binding),
        );

        session.session_binding = Some(session::binding(&self.params, &[&session.vp, &vq]));
        session.commitment = Some(commitment);
        session.ri = Some(ri);
        session.vq = Some(vq);
        session.own_window = Some(window);
        self.state = NodeState::SentM3;
        out.messages.push(Message::M3 { sender: id, ct });
        self.arm_timer(out);
    }

    fn on_reveal(&mut self, kcs: &crate::crypto::CommitKey, out: &mut NodeOutput) {
        let id = self.identity.id;
        let session = self.session.as_ref().expect("session exists in SentM3");
        let commitment = session.commitment.as_ref().expect("stored at M2");
        let committed = open(
            kcs,
            commitment.ciphertext(),
            &session::ctx_commit(id, &session.vp_binding),
        );
        out.decrypts.push(DecryptAttempt {
            tag: MessageTag::M4,
            ok: committed.is_ok(),
        });
        let Ok(committed) = committed else {
            return self.abort(out, "commitment did not open under the revealed key");
        };
        let committed = BigUint::from_bytes_be(&committed);
        let ri = session.ri.expect("stored at M2") as usize;
        let Ok(their_window) = extract_interval(
            &committed,
            self.params.modulus_bits(),
            ri,
            self.params.interval_bits(),
        ) else {
            return self.abort(out, "committed value is malformed");
        };
        if Some(&their_window) != session.own_window.as_ref() {
            return self.abort(out, "committed window does not match");
        }

        let session_binding = session.session_binding.expect("stored at M2");
        let mut plain = Vec::with_capacity(1 + self.pending_data.len());
        plain.push(id);
        plain.extend_from_slice(&self.pending_data);
        let ct = seal(
            &self.identity.session_key,
            &plain,
            &session::ctx_m5(id, &session_binding, self.data_sent),
        );
        self.data_sent += 1;
        self.state = NodeState::Authenticated;
        self.armed_timer = None;
        out.messages.push(Message::M5 { sender: id, ct });
    }

    fn on_timeout<R: RngCore + ?Sized>(&mut self, rng: &mut R, out: &mut NodeOutput) {
        match self.state {
            NodeState::SentM1 if self.retries < self.retry.max_retries => {
                self.retries += 1;
                let m1 = self.session.as_ref().expect("in flight").m1.clone();
                out.messages.push(m1);
                self.arm_timer(out);
            }
            NodeState::SentM3 if self.retries < self.retry.max_retries => {
                // The reveal never came; start over with a fresh exponent.
                self.retries += 1;
                self.begin_session(rng, out);
            }
            NodeState::SentM1 | NodeState::SentM3 => self.abort(out, "retries exhausted"),
            _ => {}
        }
    }
}

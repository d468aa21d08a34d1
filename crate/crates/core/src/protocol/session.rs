//! Seal contexts for each sealed field, and the registration phase.
//!
//! Contexts bind each ciphertext to its message type, its node, and the
//! public values of the session it belongs to. A sealed M2 or M3 from one
//! session does not open in another, and each M5 is bound to its position
//! in the session's data sequence.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::{NodeId, SINK_ID};
use crate::crypto::{
    draw_secret, draw_session_key, ProtocolParams, SealContext, SessionKey, SharedSecret,
};

pub(crate) const BINDING_LEN: usize = 16;

pub(crate) type Binding = [u8; BINDING_LEN];

pub(crate) fn binding(params: &ProtocolParams, values: &[&BigUint]) -> Binding {
    let mut h = Sha256::new();
    for v in values {
        h.update(params.encode_element(v));
    }
    let d = h.finalize();
    let mut out = [0u8; BINDING_LEN];
    out.copy_from_slice(&d[..BINDING_LEN]);
    out
}

pub(crate) fn ctx_m1(node: NodeId) -> SealContext {
    SealContext::new(b"banzkp/M1").with(&[node])
}

pub(crate) fn ctx_m2(node: NodeId, vp: &Binding) -> SealContext {
    SealContext::new(b"banzkp/M2").with(&[node]).with(vp)
}

pub(crate) fn ctx_commit(node: NodeId, vp: &Binding) -> SealContext {
    SealContext::new(b"banzkp/commit").with(&[node]).with(vp)
}

pub(crate) fn ctx_m3(node: NodeId, vp: &Binding) -> SealContext {
    SealContext::new(b"banzkp/M3").with(&[node]).with(vp)
}

pub(crate) fn ctx_m5(node: NodeId, session: &Binding, seq: u32) -> SealContext {
    SealContext::new(b"banzkp/M5")
        .with(&[node])
        .with(session)
        .with(&seq.to_be_bytes())
}

/// What a node holds after registration: its id, the session key it shares
/// with the sink, and its secret `V`.
#[derive(Clone, Debug)]
pub struct NodeIdentity {
    pub id: NodeId,
    pub session_key: SessionKey,
    pub secret: SharedSecret,
}

/// The sink's copy of every registered node's credentials.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    entries: BTreeMap<NodeId, (SessionKey, SharedSecret)>,
}

impl Registry {
    pub fn register(&mut self, identity: &NodeIdentity) {
        assert_ne!(identity.id, SINK_ID, "node id 0 is reserved for the sink");
        self.entries.insert(
            identity.id,
            (identity.session_key.clone(), identity.secret.clone()),
        );
    }

    pub fn get(&self, id: NodeId) -> Option<&(SessionKey, SharedSecret)> {
        self.entries.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Operator-side registration: draws a distinct key and secret for each id
/// and uploads both to the sink's registry.
pub fn register_nodes<R: RngCore + ?Sized>(
    rng: &mut R,
    params: &ProtocolParams,
    ids: &[NodeId],
) -> (Vec<NodeIdentity>, Registry) {
    let mut registry = Registry::default();
    let identities: Vec<NodeIdentity> = ids
        .iter()
        .map(|&id| {
            let identity = NodeIdentity {
                id,
                session_key: draw_session_key(rng, id as u32),
                secret: draw_secret(rng, params),
            };
            registry.register(&identity);
            identity
        })
        .collect();
    (identities, registry)
}

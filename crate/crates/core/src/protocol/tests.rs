use proptest::prelude::*;
use rand::RngCore;

use super::session::{binding, ctx_m3};
use super::*;
use crate::crypto::{extract_interval, open, seal, seeded_rng, CommitKey, ProtocolParams, SimRng};

fn small_params() -> ProtocolParams {
    ProtocolParams::with_modulus_bits(1096).unwrap()
}

struct Pair {
    params: ProtocolParams,
    identity: NodeIdentity,
    node: NodeFsm,
    sink: SinkFsm,
    rng: SimRng,
    transcript: Vec<Vec<u8>>,
    delivered: Vec<Vec<u8>>,
    m5_emitted: usize,
}

impl Pair {
    fn new(seed: u64, params: ProtocolParams) -> Self {
        let mut rng = seeded_rng(seed);
        let (ids, registry) = register_nodes(&mut rng, &params, &[1, 2, 3]);
        let identity = ids[0].clone();
        Self {
            node: NodeFsm::new(identity.clone(), params.clone()),
            sink: SinkFsm::new(params.clone(), registry),
            identity,
            params,
            rng,
            transcript: Vec::new(),
            delivered: Vec::new(),
            m5_emitted: 0,
        }
    }

    fn wire(&mut self, msg: &Message) -> Message {
        let frame = msg.encode().unwrap();
        self.transcript.push(frame.clone());
        Message::decode(&frame, &self.params).unwrap()
    }

    /// Drives the exchange to quiescence. `tamper` may rewrite any message
    /// in flight; `true` means node-to-sink.
    fn run(&mut self, data: &[u8], mut tamper: impl FnMut(bool, Message) -> Message) {
        let out = self
            .node
            .step(NodeEvent::Start(data.to_vec()), &mut self.rng);
        let mut up: Vec<Message> = out.messages;
        let mut down: Vec<Message> = Vec::new();
        while !up.is_empty() || !down.is_empty() {
            for m in std::mem::take(&mut up) {
                let m = tamper(true, m);
                if m.tag() == MessageTag::M5 {
                    self.m5_emitted += 1;
                }
                let m = self.wire(&m);
                let out = self.sink.step(m, &mut self.rng);
                if let Some((_, d)) = out.delivered {
                    self.delivered.push(d);
                }
                down.extend(out.messages.into_iter().map(|(_, m)| m));
            }
            for m in std::mem::take(&mut down) {
                let m = tamper(false, m);
                let m = self.wire(&m);
                up.extend(
                    self.node
                        .step(NodeEvent::Incoming(m), &mut self.rng)
                        .messages,
                );
            }
        }
    }
}

fn honest(seed: u64) -> Pair {
    let mut pair = Pair::new(seed, small_params());
    pair.run(b"heart rate 72", |_, m| m);
    pair
}

#[test]
fn honest_path_authenticates_both_sides() {
    let pair = honest(1);
    assert_eq!(pair.node.state(), NodeState::Authenticated);
    assert_eq!(pair.sink.state(1), Some(SinkState::Authenticated));
    assert_eq!(pair.delivered, vec![b"heart rate 72".to_vec()]);
    assert_eq!(pair.m5_emitted, 1);
    let tags: Vec<_> = pair
        .transcript
        .iter()
        .map(|f| MessageTag::peek(f).unwrap())
        .collect();
    use MessageTag::*;
    assert_eq!(tags, vec![M1, M2, M3, M4, M5]);
}

#[test]
fn honest_path_at_default_width() {
    let mut pair = Pair::new(3, ProtocolParams::default());
    pair.run(b"spo2", |_, m| m);
    assert_eq!(pair.node.state(), NodeState::Authenticated);
    assert_eq!(pair.delivered, vec![b"spo2".to_vec()]);
}

#[test]
fn windows_agree_because_exponents_commute() {
    let pair = honest(11);
    let material = pair.sink.session_material(1).unwrap();
    let p = pair.node.session_exponent().unwrap();
    let vq = pair
        .params
        .pow(pair.identity.secret.value(), &material.q)
        .unwrap();
    let node_side = pair.params.pow(&vq, p).unwrap();
    assert_eq!(node_side, material.shared);
    let w = extract_interval(&node_side, 1096, material.ri as usize, 200).unwrap();
    assert_eq!(pair.sink.expected_interval(1).unwrap(), &w[..]);
    assert_eq!(w.len(), 25);
}

#[test]
fn wrong_reveal_key_aborts_node() {
    let mut pair = Pair::new(5, small_params());
    let params = pair.params.clone();
    pair.run(b"x", |up, m| match (up, m) {
        (false, Message::M4 { kcs }) => {
            let mut k = kcs.as_bytes().to_vec();
            k[0] ^= 0x01;
            Message::M4 {
                kcs: CommitKey::new(k, &params).unwrap(),
            }
        }
        (_, m) => m,
    });
    assert_eq!(pair.node.state(), NodeState::Aborted);
    assert_eq!(pair.m5_emitted, 0);
    assert!(pair.delivered.is_empty());
}

#[test]
fn challenge_under_wrong_session_key_aborts_node() {
    // A forged sink seals M2 under a key it guessed.
    let mut pair = Pair::new(6, small_params());
    let mut rng = seeded_rng(600);
    pair.run(b"x", |up, m| match (up, m) {
        (false, Message::M2 { ct_a, commitment }) => {
            let mut forged = vec![0u8; ct_a.len()];
            rng.fill_bytes(&mut forged);
            Message::M2 {
                ct_a: forged,
                commitment,
            }
        }
        (_, m) => m,
    });
    assert_eq!(pair.node.state(), NodeState::Aborted);
    assert_eq!(pair.m5_emitted, 0);
}

#[test]
fn one_bit_off_interval_rejected() {
    let mut pair = Pair::new(7, small_params());
    let key = pair.identity.session_key.clone();
    let secret = pair.identity.secret.value().clone();
    let params = pair.params.clone();
    // A clone with the same stream draws the same exponent the real run will.
    let mut probe = pair.node.clone();
    probe.step(NodeEvent::Start(b"x".to_vec()), &mut pair.rng.clone());
    let vp = params
        .pow(&secret, probe.session_exponent().unwrap())
        .unwrap();
    let ctx = ctx_m3(1, &binding(&params, &[&vp]));

    pair.run(b"x", |up, m| match (up, m) {
        (true, Message::M3 { sender, ct }) => {
            let mut plain = open(&key, &ct, &ctx).unwrap();
            plain[5] ^= 0x10;
            Message::M3 {
                sender,
                ct: seal(&key, &plain, &ctx),
            }
        }
        (_, m) => m,
    });
    assert_eq!(pair.sink.state(1), Some(SinkState::Rejected));
    assert!(pair
        .transcript
        .iter()
        .all(|f| MessageTag::peek(f) != Some(MessageTag::M4)));
    assert!(pair.delivered.is_empty());
}

#[test]
fn data_before_authentication_is_dropped() {
    let mut pair = Pair::new(8, small_params());
    let out = pair.sink.step(
        Message::M5 {
            sender: 1,
            ct: vec![0u8; 20],
        },
        &mut pair.rng,
    );
    assert!(out.delivered.is_none());
    assert_eq!(pair.sink.state(1), Some(SinkState::Idle));
    assert_eq!(out.audit.len(), 1);
}

#[test]
fn unregistered_sender_is_audited() {
    let mut pair = Pair::new(8, small_params());
    let out = pair.sink.step(
        Message::M1 {
            sender: 42,
            ct: vec![0u8; m1_ct_len(&pair.params)],
        },
        &mut pair.rng,
    );
    assert!(out.messages.is_empty());
    assert_eq!(out.audit, vec![(42, "unregistered sender")]);
}

#[test]
fn forged_hello_rejects_and_replayed_data_is_refused() {
    let mut pair = honest(9);
    let m5 = pair.transcript.last().unwrap().clone();
    let m5 = Message::decode(&m5, &pair.params).unwrap();
    let again = pair.sink.step(m5, &mut pair.rng);
    assert!(
        again.delivered.is_none(),
        "replayed M5 must not deliver twice"
    );
    assert_eq!(pair.sink.state(1), Some(SinkState::Authenticated));

    let mut garbage = vec![0u8; m1_ct_len(&pair.params)];
    pair.rng.fill_bytes(&mut garbage);
    pair.sink.step(
        Message::M1 {
            sender: 1,
            ct: garbage,
        },
        &mut pair.rng,
    );
    assert_eq!(pair.sink.state(1), Some(SinkState::Rejected));
}

#[test]
fn out_of_order_messages_are_ignored() {
    let mut pair = Pair::new(10, small_params());
    let params = pair.params.clone();
    let kcs = CommitKey::new(vec![1; 25], &params).unwrap();
    // M4 before anything.
    let out = pair.node.step(
        NodeEvent::Incoming(Message::M4 { kcs: kcs.clone() }),
        &mut pair.rng,
    );
    assert!(out.messages.is_empty() && out.transition.is_none());
    pair.node
        .step(NodeEvent::Start(b"d".to_vec()), &mut pair.rng);
    // M4 while waiting for M2.
    let out = pair
        .node
        .step(NodeEvent::Incoming(Message::M4 { kcs }), &mut pair.rng);
    assert!(out.messages.is_empty());
    assert_eq!(pair.node.state(), NodeState::SentM1);
    // M3 at the sink with no open challenge.
    let out = pair.sink.step(
        Message::M3 {
            sender: 1,
            ct: vec![0; m3_ct_len(&params)],
        },
        &mut pair.rng,
    );
    assert!(out.transition.is_none());
    assert_eq!(pair.sink.state(1), Some(SinkState::Idle));
}

#[test]
fn timeouts_retry_then_abort() {
    let mut pair = Pair::new(12, small_params());
    let out = pair
        .node
        .step(NodeEvent::Start(b"d".to_vec()), &mut pair.rng);
    let first_m1 = out.messages[0].clone();
    let mut timer = out.timer.unwrap();
    assert_eq!(timer.delay_ms, 250);
    // Stale timer ids do nothing.
    let stale = pair
        .node
        .step(NodeEvent::Timeout(timer.id + 100), &mut pair.rng);
    assert!(stale.messages.is_empty());
    for attempt in 1..=3u32 {
        let out = pair.node.step(NodeEvent::Timeout(timer.id), &mut pair.rng);
        assert_eq!(out.messages, vec![first_m1.clone()]);
        timer = out.timer.unwrap();
        assert_eq!(timer.delay_ms, 250 << attempt);
    }
    let out = pair.node.step(NodeEvent::Timeout(timer.id), &mut pair.rng);
    assert!(out.messages.is_empty());
    assert_eq!(
        out.transition,
        Some((NodeState::SentM1, NodeState::Aborted))
    );
}

#[test]
fn lost_reveal_restarts_with_fresh_exponent() {
    let mut pair = Pair::new(13, small_params());
    let out = pair
        .node
        .step(NodeEvent::Start(b"d".to_vec()), &mut pair.rng);
    let out = pair.sink.step(out.messages[0].clone(), &mut pair.rng);
    let p1 = pair.node.session_exponent().unwrap().clone();
    let out = pair.node.step(
        NodeEvent::Incoming(out.messages[0].1.clone()),
        &mut pair.rng,
    );
    assert_eq!(pair.node.state(), NodeState::SentM3);
    let timer = out.timer.unwrap();
    let out = pair.node.step(NodeEvent::Timeout(timer.id), &mut pair.rng);
    assert_eq!(out.messages[0].tag(), MessageTag::M1);
    assert!(out.new_session);
    assert_ne!(pair.node.session_exponent().unwrap(), &p1);
}

#[test]
fn terminal_states_only_leave_on_reset() {
    let mut pair = Pair::new(14, small_params());
    let mut rng = seeded_rng(1400);
    pair.run(b"x", |up, m| match (up, m) {
        (false, Message::M2 { ct_a, commitment }) => {
            let mut bad = ct_a.clone();
            bad[3] ^= 4;
            let _ = rng.next_u32();
            Message::M2 {
                ct_a: bad,
                commitment,
            }
        }
        (_, m) => m,
    });
    assert_eq!(pair.node.state(), NodeState::Aborted);
    let later = honest(15);
    for frame in &later.transcript {
        let m = Message::decode(frame, &pair.params).unwrap();
        let out = pair.node.step(NodeEvent::Incoming(m), &mut pair.rng);
        assert!(out.transition.is_none());
    }
    for id in 0..10 {
        pair.node.step(NodeEvent::Timeout(id), &mut pair.rng);
    }
    assert_eq!(pair.node.state(), NodeState::Aborted);
    let out = pair
        .node
        .step(NodeEvent::Start(b"y".to_vec()), &mut pair.rng);
    assert_eq!(
        out.transition,
        Some((NodeState::Aborted, NodeState::SentM1))
    );
}

#[test]
fn commitment_and_expected_window_fixed_after_m2() {
    let mut pair = Pair::new(16, small_params());
    let out = pair
        .node
        .step(NodeEvent::Start(b"d".to_vec()), &mut pair.rng);
    let m1 = out.messages[0].clone();
    let out = pair.sink.step(m1, &mut pair.rng);
    let m2 = out.messages[0].1.clone();
    let expected = pair.sink.expected_interval(1).unwrap().to_vec();
    pair.node
        .step(NodeEvent::Incoming(m2.clone()), &mut pair.rng);
    let stored = pair.node.stored_commitment().unwrap().clone();
    let ri = pair.node.received_ri();

    // A second, different M2 and junk frames must not touch stored state.
    let other = honest(17);
    for frame in other
        .transcript
        .iter()
        .chain(std::iter::once(&m2.encode().unwrap()))
    {
        let m = Message::decode(frame, &pair.params).unwrap();
        if m.tag() != MessageTag::M1 {
            pair.sink.step(m.clone(), &mut pair.rng);
        }
        if m.tag() != MessageTag::M4 {
            pair.node.step(NodeEvent::Incoming(m), &mut pair.rng);
        }
    }
    assert_eq!(pair.node.stored_commitment(), Some(&stored));
    assert_eq!(pair.node.received_ri(), ri);
    assert_eq!(pair.sink.expected_interval(1).unwrap(), &expected[..]);
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

#[test]
fn transcripts_never_carry_secrets_and_sessions_are_fresh() {
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..200u64 {
        let pair = honest(seed);
        let params = &pair.params;
        let material = pair.sink.session_material(1).unwrap();
        let p = pair.node.session_exponent().unwrap();
        let secrets = [
            params.encode_element(pair.identity.secret.value()),
            pair.identity.session_key.as_bytes().to_vec(),
            crate::crypto::fixed_width_bytes(p, params.exponent_bytes()),
            crate::crypto::fixed_width_bytes(&material.q, params.exponent_bytes()),
            params.encode_element(&material.shared),
        ];
        for frame in &pair.transcript {
            for s in &secrets {
                assert!(!contains(frame, s), "seed {seed} leaked a secret");
            }
        }
        assert!(seen.insert((
            p.clone(),
            material.q.clone(),
            material.ri,
            material.kcs.clone()
        )));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn completeness(seed in any::<u64>(), data in proptest::collection::vec(any::<u8>(), 0..300)) {
        let mut pair = Pair::new(seed, small_params());
        pair.run(&data, |_, m| m);
        prop_assert_eq!(pair.node.state(), NodeState::Authenticated);
        prop_assert_eq!(pair.sink.state(1), Some(SinkState::Authenticated));
        prop_assert_eq!(pair.delivered, vec![data]);
    }

    #[test]
    fn random_events_never_reach_authenticated_without_the_keys(
        seed in any::<u64>(),
        script in proptest::collection::vec((0u8..6, any::<u64>()), 1..12),
    ) {
        // The node only ever sees frames built without its key.
        let params = small_params();
        let mut pair = Pair::new(seed, params.clone());
        let out = pair.node.step(NodeEvent::Start(b"d".to_vec()), &mut pair.rng);
        let mut timer = out.timer.map(|t| t.id);
        for (kind, noise) in script {
            let mut r = seeded_rng(noise);
            let event = match kind {
                0 => {
                    let mut a = vec![0u8; m2_ct_len(&params)];
                    let mut c = vec![0u8; crate::crypto::CommitmentEnvelope::encoded_len(&params)];
                    r.fill_bytes(&mut a);
                    r.fill_bytes(&mut c);
                    NodeEvent::Incoming(Message::M2 {
                        ct_a: a,
                        commitment: crate::crypto::CommitmentEnvelope::new(c, &params).unwrap(),
                    })
                }
                1 => {
                    let mut k = vec![0u8; 25];
                    r.fill_bytes(&mut k);
                    NodeEvent::Incoming(Message::M4 { kcs: CommitKey::new(k, &params).unwrap() })
                }
                2 => NodeEvent::Timeout(timer.unwrap_or(noise)),
                3 => NodeEvent::Incoming(Message::RouteFlood { origin: 0, hop_count: 1 }),
                _ => NodeEvent::Incoming(Message::M5 { sender: 1, ct: vec![0; 12] }),
            };
            let out = pair.node.step(event, &mut pair.rng);
            if let Some(t) = out.timer {
                timer = Some(t.id);
            }
            prop_assert!(out.messages.iter().all(|m| m.tag() != MessageTag::M5));
            prop_assert_ne!(pair.node.state(), NodeState::Authenticated);
        }
    }
}

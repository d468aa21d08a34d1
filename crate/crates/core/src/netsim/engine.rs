use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;

use super::trace::{DropReason, FrameId, Record, Role, SecretKind, TapAction, Trace};
use super::{Route, RoutingTable, Scenario, Topology};
use crate::costmodel::{self, CostLedger, RadioModel};
use crate::crypto::{fixed_width_bytes, seeded_rng, ProtocolParams};
use crate::protocol::{
    register_nodes, Message, MessageTag, NodeEvent, NodeFsm, NodeId, NodeOutput, SinkFsm,
    SinkOutput, SINK_ID,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
}

/// Which transmissions an attacker can see and touch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tap {
    /// Every link in the network.
    Everywhere,
    /// Both directions of one link.
    Link(NodeId, NodeId),
    /// Every link touching one node.
    Node(NodeId),
}

impl Tap {
    fn covers(self, from: NodeId, to: NodeId) -> bool {
        match self {
            Tap::Everywhere => true,
            Tap::Link(a, b) => (a == from && b == to) || (a == to && b == from),
            Tap::Node(n) => n == from || n == to,
        }
    }
}

/// One transmission as seen over the air.
#[derive(Clone, Copy, Debug)]
pub struct HopView<'a> {
    pub t: u64,
    pub frame: FrameId,
    pub from: NodeId,
    pub to: NodeId,
    pub origin: NodeId,
    pub destination: NodeId,
    pub tag: Option<MessageTag>,
    pub bytes: &'a [u8],
}

/// A frame the attacker transmits into `into`'s radio. The network then
/// carries it toward `destination` like any other frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Injection {
    pub into: NodeId,
    pub origin: NodeId,
    pub destination: NodeId,
    pub bytes: Vec<u8>,
    pub delay_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HopAction {
    Pass,
    Drop,
    Replace(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TapResponse {
    pub action: HopAction,
    pub inject: Vec<Injection>,
}

impl TapResponse {
    pub fn pass() -> Self {
        Self {
            action: HopAction::Pass,
            inject: Vec::new(),
        }
    }
}

/// An external attacker. It sees wire bytes only and never holds keys.
pub trait Attacker {
    fn tap(&self) -> Tap;

    /// Simulated times at which [`Attacker::on_wake`] runs.
    fn wakeups(&self) -> Vec<u64> {
        Vec::new()
    }

    fn on_wake(&mut self, _t: u64, _rng: &mut dyn RngCore) -> Vec<Injection> {
        Vec::new()
    }

    fn on_hop(&mut self, _hop: &HopView<'_>, _rng: &mut dyn RngCore) -> TapResponse {
        TapResponse::pass()
    }
}

enum EventKind {
    Arrive {
        frame: FrameId,
        at: NodeId,
        origin: NodeId,
        destination: NodeId,
        bytes: Vec<u8>,
    },
    AppStart {
        node: NodeId,
        data: Vec<u8>,
    },
    Timer {
        node: NodeId,
        id: u64,
    },
    Wake {
        attacker: usize,
    },
}

struct Queue {
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    events: BTreeMap<u64, EventKind>,
    seq: u64,
}

impl Queue {
    fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            events: BTreeMap::new(),
            seq: 0,
        }
    }

    fn push(&mut self, t: u64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Reverse((t, self.seq)));
        self.events.insert(self.seq, kind);
    }

    fn pop(&mut self) -> Option<(u64, EventKind)> {
        let Reverse((t, seq)) = self.heap.pop()?;
        Some((t, self.events.remove(&seq).expect("queued event")))
    }

    fn peek_time(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse((t, _))| *t)
    }
}

struct Sim<'a> {
    params: ProtocolParams,
    topology: &'a Topology,
    routes: RoutingTable,
    nodes: BTreeMap<NodeId, NodeFsm>,
    sink: SinkFsm,
    rng: ChaCha20Rng,
    attacker_rng: ChaCha20Rng,
    attackers: Vec<Box<dyn Attacker>>,
    queue: Queue,
    records: Vec<Record>,
    ledger: CostLedger,
    next_frame: FrameId,
    now: u64,
}

/// Runs a scenario, instantiating the attackers it lists.
pub fn run(scenario: &Scenario) -> Result<Trace, SimError> {
    let params = scenario.protocol_params().map_err(SimError::Config)?;
    let attackers = scenario
        .adversaries
        .iter()
        .map(|spec| crate::adversary::instantiate(spec, &params, &scenario.topology))
        .collect::<Result<Vec<_>, _>>()
        .map_err(SimError::Config)?;
    run_with(scenario, attackers)
}

/// Runs a scenario with caller-supplied attackers in place of its own list.
pub fn run_with(scenario: &Scenario, attackers: Vec<Box<dyn Attacker>>) -> Result<Trace, SimError> {
    scenario.validate().map_err(SimError::Config)?;
    let params = scenario.protocol_params().map_err(SimError::Config)?;
    let mut rng = seeded_rng(scenario.seed);
    let mut attacker_rng = seeded_rng(scenario.seed);
    attacker_rng.set_stream(1);

    let sensors = scenario.topology.sensors();
    let (identities, registry) = register_nodes(&mut rng, &params, &sensors);
    let mut records = Vec::new();
    for id in &identities {
        records.push(Record::Material {
            t: 0,
            node: id.id,
            kind: SecretKind::Secret,
            value: params.encode_element(id.secret.value()),
        });
        records.push(Record::Material {
            t: 0,
            node: id.id,
            kind: SecretKind::SessionKey,
            value: id.session_key.as_bytes().to_vec(),
        });
    }
    let nodes = identities
        .into_iter()
        .map(|id| {
            (
                id.id,
                NodeFsm::with_retry(id, params.clone(), scenario.retry.into()),
            )
        })
        .collect();

    let mut ledger = CostLedger::default();
    for id in scenario.topology.node_ids() {
        ledger.entry(id);
    }

    let mut sim = Sim {
        sink: SinkFsm::new(params.clone(), registry),
        params,
        topology: &scenario.topology,
        routes: RoutingTable::default(),
        nodes,
        rng,
        attacker_rng,
        attackers,
        queue: Queue::new(),
        records,
        ledger,
        next_frame: 0,
        now: 0,
    };

    sim.broadcast_flood(SINK_ID, 0);
    for t in &scenario.traffic {
        sim.queue.push(
            t.at_ms,
            EventKind::AppStart {
                node: t.node,
                data: t.data.as_bytes().to_vec(),
            },
        );
    }
    for i in 0..sim.attackers.len() {
        for t in sim.attackers[i].wakeups() {
            sim.queue.push(t, EventKind::Wake { attacker: i });
        }
    }

    while sim
        .queue
        .peek_time()
        .is_some_and(|t| t <= scenario.horizon_ms)
    {
        let (t, ev) = sim.queue.pop().expect("peeked");
        sim.now = t;
        sim.handle(ev);
    }
    let end_ms = if sim.queue.peek_time().is_some() {
        scenario.horizon_ms
    } else {
        sim.now
    };
    while let Some((_, ev)) = sim.queue.pop() {
        if let EventKind::Arrive { frame, at, .. } = ev {
            sim.records.push(Record::Dropped {
                t: scenario.horizon_ms,
                frame,
                at: Some(at),
                reason: DropReason::Horizon,
            });
        }
    }

    let node_states = sim.nodes.iter().map(|(id, f)| (*id, f.state())).collect();
    let sink_states = sim.sink.states().collect();
    let started: Vec<NodeId> = sim
        .records
        .iter()
        .filter_map(|r| match r {
            Record::Material {
                node,
                kind: SecretKind::NodeExponent,
                ..
            } => Some(*node),
            _ => None,
        })
        .collect();
    costmodel::finalize_ledger(
        &mut sim.ledger,
        &sim.params,
        &started,
        sensors.len(),
        &RadioModel::default(),
    );
    Ok(Trace {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        modulus_bits: sim.params.modulus_bits(),
        end_ms,
        records: sim.records,
        routes: sim.routes,
        node_states,
        sink_states,
        ledger: sim.ledger,
    })
}

impl Sim<'_> {
    fn frame_id(&mut self) -> FrameId {
        self.next_frame += 1;
        self.next_frame
    }

    fn handle(&mut self, ev: EventKind) {
        match ev {
            EventKind::Arrive {
                frame,
                at,
                origin,
                destination,
                bytes,
            } => self.arrive(frame, at, origin, destination, bytes),
            EventKind::AppStart { node, data } => {
                self.records.push(Record::AppStart {
                    t: self.now,
                    node,
                    data: data.clone(),
                });
                self.step_node(node, NodeEvent::Start(data), None);
            }
            EventKind::Timer { node, id } => self.step_node(node, NodeEvent::Timeout(id), None),
            EventKind::Wake { attacker } => {
                let injections = self.attackers[attacker].on_wake(self.now, &mut self.attacker_rng);
                for inj in injections {
                    self.inject(inj);
                }
            }
        }
    }

    fn broadcast_flood(&mut self, from: NodeId, hops: u32) {
        let msg = Message::RouteFlood {
            origin: from,
            hop_count: hops.min(u8::MAX as u32) as u8,
        };
        let bytes = msg.encode().expect("beacon encodes");
        let neighbors = self.topology.adjacency().remove(&from).unwrap_or_default();
        for n in neighbors {
            let frame = self.frame_id();
            self.transmit(frame, Some(from), Some(n), from, n, bytes.clone());
        }
    }

    /// Puts one hop on the air: records it, offers it to taps, applies loss,
    /// and schedules arrival.
    fn transmit(
        &mut self,
        frame: FrameId,
        from: Option<NodeId>,
        to: Option<NodeId>,
        origin: NodeId,
        destination: NodeId,
        bytes: Vec<u8>,
    ) {
        let t = self.now;
        self.records.push(Record::Sent {
            t,
            frame,
            from,
            to,
            origin,
            destination,
            tag: MessageTag::peek(&bytes),
            bytes: bytes.clone(),
        });
        let Some(to) = to else {
            self.records.push(Record::Dropped {
                t,
                frame,
                at: from,
                reason: DropReason::NoRoute,
            });
            return;
        };
        let bits = 8 * bytes.len() as u64;
        if let Some(f) = from {
            self.ledger.entry(f).bits_tx += bits;
        }

        let payload = bytes;
        if let Some(f) = from {
            for i in 0..self.attackers.len() {
                if !self.attackers[i].tap().covers(f, to) {
                    continue;
                }
                let view = HopView {
                    t,
                    frame,
                    from: f,
                    to,
                    origin,
                    destination,
                    tag: MessageTag::peek(&payload),
                    bytes: &payload,
                };
                let resp = self.attackers[i].on_hop(&view, &mut self.attacker_rng);
                for inj in resp.inject {
                    self.inject(inj);
                }
                match resp.action {
                    HopAction::Pass => {}
                    HopAction::Drop => {
                        self.intercept(frame, to, TapAction::Drop);
                        return;
                    }
                    HopAction::Replace(new_bytes) => {
                        self.intercept(frame, to, TapAction::Replace);
                        let replacement = self.frame_id();
                        self.records.push(Record::Sent {
                            t,
                            frame: replacement,
                            from: None,
                            to: Some(to),
                            origin,
                            destination,
                            tag: MessageTag::peek(&new_bytes),
                            bytes: new_bytes.clone(),
                        });
                        let delay = self.link_delay(f, to);
                        self.schedule_arrival(
                            delay,
                            replacement,
                            to,
                            origin,
                            destination,
                            new_bytes,
                        );
                        return;
                    }
                }
            }
        }

        let (delay, loss) = match from.and_then(|f| self.topology.link(f, to)) {
            Some(l) => (l.delay_ms, l.loss),
            None => (super::DEFAULT_DELAY_MS, 0.0),
        };
        if loss > 0.0 && self.rng.gen::<f64>() < loss {
            self.records.push(Record::Dropped {
                t,
                frame,
                at: Some(to),
                reason: DropReason::Loss,
            });
            return;
        }
        self.schedule_arrival(delay, frame, to, origin, destination, payload);
    }

    fn link_delay(&self, a: NodeId, b: NodeId) -> u64 {
        self.topology
            .link(a, b)
            .map_or(super::DEFAULT_DELAY_MS, |l| l.delay_ms)
    }

    fn intercept(&mut self, frame: FrameId, at: NodeId, action: TapAction) {
        self.records.push(Record::Intercepted {
            t: self.now,
            frame,
            at,
            action,
        });
        self.records.push(Record::Dropped {
            t: self.now,
            frame,
            at: Some(at),
            reason: DropReason::Intercepted,
        });
    }

    fn schedule_arrival(
        &mut self,
        delay: u64,
        frame: FrameId,
        at: NodeId,
        origin: NodeId,
        destination: NodeId,
        bytes: Vec<u8>,
    ) {
        self.queue.push(
            self.now + delay,
            EventKind::Arrive {
                frame,
                at,
                origin,
                destination,
                bytes,
            },
        );
    }

    /// Attacker transmission. It bypasses taps and loss.
    fn inject(&mut self, inj: Injection) {
        let frame = self.frame_id();
        self.records.push(Record::Sent {
            t: self.now,
            frame,
            from: None,
            to: Some(inj.into),
            origin: inj.origin,
            destination: inj.destination,
            tag: MessageTag::peek(&inj.bytes),
            bytes: inj.bytes.clone(),
        });
        self.schedule_arrival(
            inj.delay_ms,
            frame,
            inj.into,
            inj.origin,
            inj.destination,
            inj.bytes,
        );
    }

    fn arrive(
        &mut self,
        frame: FrameId,
        at: NodeId,
        origin: NodeId,
        destination: NodeId,
        bytes: Vec<u8>,
    ) {
        self.records.push(Record::Delivered {
            t: self.now,
            frame,
            at,
        });
        self.ledger.entry(at).bits_rx += 8 * bytes.len() as u64;
        if at != destination {
            // Relays forward the bytes as received, without opening them.
            let next = self.routes.next_hop(at, destination);
            self.transmit(frame, Some(at), next, origin, destination, bytes);
            return;
        }
        let msg = match Message::decode(&bytes, &self.params) {
            Ok(m) => m,
            Err(e) => {
                self.records.push(Record::Malformed {
                    t: self.now,
                    frame,
                    at,
                    error: e.to_string(),
                });
                return;
            }
        };
        match msg {
            Message::RouteFlood { hop_count, .. } => self.on_flood(at, origin, hop_count),
            _ if at == SINK_ID => self.step_sink(msg, frame),
            _ => self.step_node(at, NodeEvent::Incoming(msg), Some(frame)),
        }
    }

    fn on_flood(&mut self, at: NodeId, from: NodeId, hop_count: u8) {
        if at == SINK_ID {
            return;
        }
        let hops = hop_count as u32 + 1;
        if self.routes.hops(at).is_some_and(|h| h <= hops) {
            return;
        }
        self.routes.insert(at, Route { parent: from, hops });
        self.records.push(Record::RouteAdopted {
            t: self.now,
            node: at,
            parent: from,
            hops,
        });
        self.broadcast_flood(at, hops);
    }

    fn send_from(&mut self, from: NodeId, destination: NodeId, msg: &Message) {
        let bytes = msg.encode().expect("endpoint messages encode");
        let frame = self.frame_id();
        let next = self.routes.next_hop(from, destination);
        self.transmit(frame, Some(from), next, from, destination, bytes);
    }

    fn step_node(&mut self, node: NodeId, event: NodeEvent, frame: Option<FrameId>) {
        let Some(fsm) = self.nodes.get_mut(&node) else {
            return;
        };
        let out: NodeOutput = fsm.step(event, &mut self.rng);
        let t = self.now;
        if out.new_session {
            let p = fsm.session_exponent().expect("new session");
            self.records.push(Record::Material {
                t,
                node,
                kind: SecretKind::NodeExponent,
                value: fixed_width_bytes(p, self.params.exponent_bytes()),
            });
        }
        for d in &out.decrypts {
            self.records.push(Record::Decrypt {
                t,
                node,
                frame: frame.unwrap_or(0),
                tag: d.tag,
                ok: d.ok,
            });
        }
        if let Some((from, to)) = out.transition {
            self.records.push(Record::Transition {
                t,
                node,
                role: Role::Node,
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        if let Some(reason) = out.reason {
            self.records.push(Record::Audit {
                t,
                node,
                role: Role::Node,
                note: reason.to_string(),
            });
        }
        self.ledger.entry(node).modmuls += out.modmuls;
        if let Some(timer) = out.timer {
            self.queue
                .push(t + timer.delay_ms, EventKind::Timer { node, id: timer.id });
        }
        for msg in &out.messages {
            self.send_from(node, SINK_ID, msg);
        }
    }

    fn step_sink(&mut self, msg: Message, frame: FrameId) {
        let out: SinkOutput = self.sink.step(msg, &mut self.rng);
        let t = self.now;
        if let Some(node) = out.new_session {
            let m = self.sink.session_material(node).expect("new session");
            let eb = self.params.exponent_bytes();
            let material = [
                (SecretKind::SinkExponent, fixed_width_bytes(&m.q, eb)),
                (
                    SecretKind::SharedValue,
                    self.params.encode_element(&m.shared),
                ),
                (SecretKind::IntervalOffset, m.ri.to_be_bytes().to_vec()),
                (SecretKind::CommitKey, m.kcs.as_bytes().to_vec()),
            ];
            for (kind, value) in material {
                self.records.push(Record::Material {
                    t,
                    node,
                    kind,
                    value,
                });
            }
        }
        for d in &out.decrypts {
            self.records.push(Record::Decrypt {
                t,
                node: SINK_ID,
                frame,
                tag: d.tag,
                ok: d.ok,
            });
        }
        if let Some((node, from, to)) = out.transition {
            self.records.push(Record::Transition {
                t,
                node,
                role: Role::Sink,
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        for (node, note) in &out.audit {
            self.records.push(Record::Audit {
                t,
                node: *node,
                role: Role::Sink,
                note: note.to_string(),
            });
        }
        if let Some((node, data)) = out.delivered {
            self.records.push(Record::Delivery { t, node, data });
        }
        self.ledger.entry(SINK_ID).modmuls += out.modmuls;
        for (node, msg) in &out.messages {
            self.send_from(SINK_ID, *node, msg);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::adversary::node_complete;
    use crate::netsim::build_routes;
    use crate::protocol::{NodeState, SinkState};

    const BITS: usize = 1096;

    fn honest(seed: u64) -> Trace {
        run(&Scenario::honest7(seed).with_modulus_bits(BITS)).unwrap()
    }

    fn sent(trace: &Trace) -> impl Iterator<Item = &Record> {
        trace
            .records
            .iter()
            .filter(|r| matches!(r, Record::Sent { .. }))
    }

    /// Links crossed by each frame of `tag` originated by `origin`, keyed by
    /// the bytes so relayed copies group together.
    fn hops_of(
        trace: &Trace,
        origin: NodeId,
        tag: MessageTag,
    ) -> BTreeMap<Vec<u8>, Vec<(NodeId, NodeId)>> {
        let mut out: BTreeMap<Vec<u8>, Vec<(NodeId, NodeId)>> = BTreeMap::new();
        for r in sent(trace) {
            if let Record::Sent {
                from: Some(f),
                to: Some(t),
                origin: o,
                tag: Some(g),
                bytes,
                ..
            } = r
            {
                if *o == origin && *g == tag {
                    out.entry(bytes.clone()).or_default().push((*f, *t));
                }
            }
        }
        out
    }

    #[test]
    fn honest_run_completes_every_node() {
        let t = honest(3);
        for n in 1..=6 {
            assert!(node_complete(&t, n), "node {n}");
        }
    }

    #[test]
    fn same_seed_same_digest() {
        assert_eq!(honest(9).digest(), honest(9).digest());
        assert_ne!(honest(9).digest(), honest(10).digest());
    }

    #[test]
    fn every_frame_is_delivered_or_dropped_once() {
        let mut s = Scenario::preset("lossy-node3", 4)
            .unwrap()
            .with_modulus_bits(BITS);
        s.topology.link_mut(0, 4).unwrap().loss = 0.3;
        let t = run(&s).unwrap();
        let mut open = BTreeMap::new();
        for r in &t.records {
            match r {
                Record::Sent { frame, .. } => *open.entry(*frame).or_insert(0i32) += 1,
                Record::Delivered { frame, .. } | Record::Dropped { frame, .. } => {
                    *open.get_mut(frame).expect("sent first") -= 1
                }
                _ => {}
            }
        }
        assert!(open.values().all(|v| *v == 0));
    }

    #[test]
    fn dead_link_aborts_only_its_node() {
        let s = Scenario::preset("lossy-node3", 2)
            .unwrap()
            .with_modulus_bits(BITS);
        let t = run(&s).unwrap();
        assert_eq!(t.node_state(3), Some(NodeState::Aborted));
        assert!(t.deliveries().all(|(_, n, _)| n != 3));
        for n in [1, 2, 4, 5, 6] {
            assert!(node_complete(&t, n), "node {n}");
        }
    }

    #[test]
    fn two_hop_m1_crosses_two_links_unchanged() {
        let t = honest(5);
        let m1 = hops_of(&t, 5, MessageTag::M1);
        assert_eq!(m1.len(), 1);
        let links = m1.values().next().unwrap();
        assert_eq!(links, &vec![(5, 4), (4, 0)]);
    }

    #[test]
    fn m2_follows_the_reverse_path() {
        let t = honest(5);
        let m2 = hops_of(&t, SINK_ID, MessageTag::M2);
        let to5: Vec<_> = m2
            .values()
            .filter(|l| l.last().map(|x| x.1) == Some(5))
            .collect();
        assert_eq!(to5, vec![&vec![(0, 4), (4, 5)]]);
    }

    #[test]
    fn relays_never_decrypt() {
        let t = honest(8);
        let relays: BTreeSet<NodeId> = t
            .routes
            .routed()
            .map(|(_, r)| r.parent)
            .filter(|p| *p != SINK_ID)
            .collect();
        assert!(!relays.is_empty());
        for r in &t.records {
            if let Record::Decrypt { node, frame, .. } = r {
                let dest = t.records.iter().find_map(|x| match x {
                    Record::Sent {
                        frame: f,
                        destination,
                        ..
                    } if f == frame => Some(*destination),
                    _ => None,
                });
                assert_eq!(dest, Some(*node));
            }
        }
    }

    #[test]
    fn flood_tree_matches_shortest_paths() {
        for name in ["honest7", "star6", "chain6"] {
            let s = Scenario::preset(name, 1).unwrap().with_modulus_bits(BITS);
            let t = run(&s).unwrap();
            let want = build_routes(&s.topology).unwrap();
            for (n, r) in want.routed() {
                assert_eq!(t.routes.hops(n), Some(r.hops), "{name} node {n}");
            }
        }
    }

    #[test]
    fn no_traffic_means_idle_sessions() {
        let mut s = Scenario::honest7(1).with_modulus_bits(BITS);
        s.traffic.clear();
        let t = run(&s).unwrap();
        assert_eq!(t.deliveries().count(), 0);
        assert!((1..=6).all(|n| t.sink_state(n) != Some(SinkState::Authenticated)));
    }

    struct Blackhole;

    impl Attacker for Blackhole {
        fn tap(&self) -> Tap {
            Tap::Link(4, 0)
        }

        fn on_hop(&mut self, hop: &HopView<'_>, _rng: &mut dyn RngCore) -> TapResponse {
            TapResponse {
                action: match hop.tag {
                    Some(MessageTag::RouteFlood) | None => HopAction::Pass,
                    Some(_) => HopAction::Drop,
                },
                inject: Vec::new(),
            }
        }
    }

    #[test]
    fn tapped_link_starves_the_subtree() {
        let s = Scenario::honest7(6).with_modulus_bits(BITS);
        let t = run_with(&s, vec![Box::new(Blackhole)]).unwrap();
        for n in [4, 5, 6] {
            assert_eq!(t.node_state(n), Some(NodeState::Aborted), "node {n}");
        }
        for n in [1, 2, 3] {
            assert!(node_complete(&t, n), "node {n}");
        }
        assert!(t.records.iter().any(|r| matches!(
            r,
            Record::Dropped {
                reason: DropReason::Intercepted,
                ..
            }
        )));
    }
}

use rand::{Rng, RngCore};

use super::ForgeSinkVariant;
use crate::crypto::{CommitKey, CommitmentEnvelope, ProtocolParams};
use crate::netsim::{Attacker, HopAction, HopView, Injection, Tap, TapResponse};
use crate::protocol::{m1_ct_len, m2_ct_len, m3_ct_len, Message, MessageTag, NodeId, SINK_ID};

fn random_bytes(rng: &mut dyn RngCore, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

fn encode(msg: Message) -> Vec<u8> {
    msg.encode().expect("attacker frames fit the codec")
}

fn to_sink(victim: NodeId, bytes: Vec<u8>, delay_ms: u64) -> Injection {
    Injection {
        into: SINK_ID,
        origin: victim,
        destination: SINK_ID,
        bytes,
        delay_ms,
    }
}

fn to_node(victim: NodeId, bytes: Vec<u8>, delay_ms: u64) -> Injection {
    Injection {
        into: victim,
        origin: SINK_ID,
        destination: victim,
        bytes,
        delay_ms,
    }
}

fn uplink(hop: &HopView<'_>, victim: NodeId, tag: MessageTag) -> bool {
    hop.from == victim && hop.origin == victim && hop.tag == Some(tag)
}

fn downlink(hop: &HopView<'_>, victim: NodeId, tag: MessageTag) -> bool {
    hop.to == victim && hop.destination == victim && hop.tag == Some(tag)
}

fn random_data_frame(rng: &mut dyn RngCore, victim: NodeId) -> Vec<u8> {
    let len = 1 + rng.gen_range(4..32) + crate::crypto::TAG_LEN;
    encode(Message::M5 {
        sender: victim,
        ct: random_bytes(rng, len),
    })
}

/// Claims the victim's identity with keyless frames.
pub struct ForgeNode {
    victim: NodeId,
    at_ms: u64,
    params: ProtocolParams,
    step: usize,
}

impl ForgeNode {
    pub fn new(victim: NodeId, at_ms: u64, params: ProtocolParams) -> Self {
        Self {
            victim,
            at_ms,
            params,
            step: 0,
        }
    }
}

impl Attacker for ForgeNode {
    fn tap(&self) -> Tap {
        Tap::Node(SINK_ID)
    }

    fn wakeups(&self) -> Vec<u64> {
        (0..4).map(|i| self.at_ms + 20 * i).collect()
    }

    fn on_wake(&mut self, _t: u64, rng: &mut dyn RngCore) -> Vec<Injection> {
        let v = self.victim;
        let bytes = match self.step {
            0 | 3 => random_data_frame(rng, v),
            1 => encode(Message::M1 {
                sender: v,
                ct: random_bytes(rng, m1_ct_len(&self.params)),
            }),
            _ => encode(Message::M3 {
                sender: v,
                ct: random_bytes(rng, m3_ct_len(&self.params)),
            }),
        };
        self.step += 1;
        vec![to_sink(v, bytes, 1)]
    }
}

/// Answers the victim as if it were the sink.
pub struct ForgeSink {
    victim: NodeId,
    variant: ForgeSinkVariant,
    params: ProtocolParams,
    recorded_m2: Option<Vec<u8>>,
}

impl ForgeSink {
    pub fn new(victim: NodeId, variant: ForgeSinkVariant, params: ProtocolParams) -> Self {
        Self {
            victim,
            variant,
            params,
            recorded_m2: None,
        }
    }

    fn crafted_m2(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        let w = CommitmentEnvelope::encoded_len(&self.params);
        encode(Message::M2 {
            ct_a: random_bytes(rng, m2_ct_len(&self.params)),
            commitment: CommitmentEnvelope::new(random_bytes(rng, w), &self.params)
                .expect("sized to the envelope"),
        })
    }
}

impl Attacker for ForgeSink {
    fn tap(&self) -> Tap {
        Tap::Node(self.victim)
    }

    fn on_hop(&mut self, hop: &HopView<'_>, rng: &mut dyn RngCore) -> TapResponse {
        let v = self.victim;
        match self.variant {
            ForgeSinkVariant::CraftedM2 if uplink(hop, v, MessageTag::M1) => TapResponse {
                action: HopAction::Drop,
                inject: vec![to_node(v, self.crafted_m2(rng), 5)],
            },
            ForgeSinkVariant::CraftedM4 if downlink(hop, v, MessageTag::M4) => {
                let kcs = CommitKey::new(random_bytes(rng, self.params.kcs_bytes()), &self.params)
                    .expect("sized to the key");
                TapResponse {
                    action: HopAction::Replace(encode(Message::M4 { kcs })),
                    inject: Vec::new(),
                }
            }
            ForgeSinkVariant::ReplayedM2 => {
                if self.recorded_m2.is_none() && downlink(hop, v, MessageTag::M2) {
                    self.recorded_m2 = Some(hop.bytes.to_vec());
                    return TapResponse::pass();
                }
                match &self.recorded_m2 {
                    Some(m2) if uplink(hop, v, MessageTag::M1) => TapResponse {
                        action: HopAction::Drop,
                        inject: vec![to_node(v, m2.clone(), 5)],
                    },
                    _ => TapResponse::pass(),
                }
            }
            _ => TapResponse::pass(),
        }
    }
}

/// Records a completed session and replays its M1 and M3 later.
pub struct Replayer {
    victim: NodeId,
    at_ms: u64,
    m1: Option<Vec<u8>>,
    m3: Option<Vec<u8>>,
}

impl Replayer {
    pub fn new(victim: NodeId, at_ms: u64) -> Self {
        Self {
            victim,
            at_ms,
            m1: None,
            m3: None,
        }
    }
}

impl Attacker for Replayer {
    fn tap(&self) -> Tap {
        Tap::Node(self.victim)
    }

    fn wakeups(&self) -> Vec<u64> {
        vec![self.at_ms, self.at_ms + 100]
    }

    fn on_hop(&mut self, hop: &HopView<'_>, _rng: &mut dyn RngCore) -> TapResponse {
        // Keep the latest M1 and the M3 that answered it.
        if uplink(hop, self.victim, MessageTag::M1) {
            self.m1 = Some(hop.bytes.to_vec());
            self.m3 = None;
        } else if uplink(hop, self.victim, MessageTag::M3) {
            self.m3 = Some(hop.bytes.to_vec());
        }
        TapResponse::pass()
    }

    fn on_wake(&mut self, t: u64, _rng: &mut dyn RngCore) -> Vec<Injection> {
        let frame = if t == self.at_ms { &self.m1 } else { &self.m3 };
        frame
            .iter()
            .map(|b| to_sink(self.victim, b.clone(), 1))
            .collect()
    }
}

/// Pushes forged data frames at the sink before, during, and after the
/// victim's handshake.
pub struct Injector {
    victim: NodeId,
    at_ms: u64,
    recorded_m5: Vec<Vec<u8>>,
    fired_mid_handshake: bool,
    step: usize,
}

impl Injector {
    pub fn new(victim: NodeId, at_ms: u64) -> Self {
        Self {
            victim,
            at_ms,
            recorded_m5: Vec::new(),
            fired_mid_handshake: false,
            step: 0,
        }
    }
}

impl Attacker for Injector {
    fn tap(&self) -> Tap {
        Tap::Node(self.victim)
    }

    fn wakeups(&self) -> Vec<u64> {
        vec![1, self.at_ms, self.at_ms + 20, self.at_ms + 40]
    }

    fn on_hop(&mut self, hop: &HopView<'_>, rng: &mut dyn RngCore) -> TapResponse {
        let mut resp = TapResponse::pass();
        if uplink(hop, self.victim, MessageTag::M5) {
            self.recorded_m5.push(hop.bytes.to_vec());
        }
        // The sink is waiting for this M3; a forged frame overtakes it.
        if !self.fired_mid_handshake && uplink(hop, self.victim, MessageTag::M3) {
            self.fired_mid_handshake = true;
            resp.inject
                .push(to_sink(self.victim, random_data_frame(rng, self.victim), 0));
        }
        resp
    }

    fn on_wake(&mut self, _t: u64, rng: &mut dyn RngCore) -> Vec<Injection> {
        let v = self.victim;
        let step = self.step;
        self.step += 1;
        let bytes = match (step, self.recorded_m5.first()) {
            (0, _) | (1, _) | (_, None) => random_data_frame(rng, v),
            (2, Some(old)) => old.clone(),
            (_, Some(old)) => {
                // Keep the header and the first half of the body; fill the
                // rest with noise.
                let mut spliced = old.clone();
                let half = 4 + (spliced.len() - 4) / 2;
                rng.fill_bytes(&mut spliced[half..]);
                spliced
            }
        };
        vec![to_sink(v, bytes, 1)]
    }
}

/// Relays the victim's frames, flipping one payload bit in every frame of
/// the target type.
pub struct Mitm {
    victim: NodeId,
    target: Option<MessageTag>,
}

impl Mitm {
    pub fn new(victim: NodeId, target: Option<MessageTag>) -> Self {
        Self { victim, target }
    }
}

impl Attacker for Mitm {
    fn tap(&self) -> Tap {
        Tap::Node(self.victim)
    }

    fn on_hop(&mut self, hop: &HopView<'_>, rng: &mut dyn RngCore) -> TapResponse {
        let Some(target) = self.target else {
            return TapResponse::pass();
        };
        let ours = uplink(hop, self.victim, target) || downlink(hop, self.victim, target);
        if !ours {
            return TapResponse::pass();
        }
        let header = target.header_len();
        let mut bytes = hop.bytes.to_vec();
        let bit = rng.gen_range(0..(bytes.len() - header) * 8);
        bytes[header + bit / 8] ^= 0x80 >> (bit % 8);
        TapResponse {
            action: HopAction::Replace(bytes),
            inject: Vec::new(),
        }
    }
}

/// Passive listener on every link.
#[derive(Default)]
pub struct Eavesdropper {
    pub frames: Vec<Vec<u8>>,
}

impl Attacker for Eavesdropper {
    fn tap(&self) -> Tap {
        Tap::Everywhere
    }

    fn on_hop(&mut self, hop: &HopView<'_>, _rng: &mut dyn RngCore) -> TapResponse {
        self.frames.push(hop.bytes.to_vec());
        TapResponse::pass()
    }
}

//! External attackers and the verdicts that judge them.
//!
//! An attacker holds no session key and no secret. It sees and touches
//! frames only through a radio tap, and every verdict is a pure function of
//! the finished [`Trace`](crate::netsim::Trace).

mod attackers;
mod trials;
mod verdict;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::crypto::ProtocolParams;
use crate::netsim::{Attacker, Topology};
use crate::protocol::{MessageTag, NodeId};

pub use attackers::{Eavesdropper, ForgeNode, ForgeSink, Injector, Mitm, Replayer};
pub use trials::{attack_scenario, guess_scenario, run_attack, AttackReport, DEFAULT_VICTIM};
pub use verdict::{
    bystanders_complete, freshness, judge, node_complete, secrecy_hits, Freshness, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForgeSinkVariant {
    /// Random M2 in answer to the node's M1.
    CraftedM2,
    /// The real handshake, with K_CS swapped for a random key.
    CraftedM4,
    /// An M2 recorded in an earlier session, replayed to a new one.
    ReplayedM2,
}

impl ForgeSinkVariant {
    pub const ALL: [Self; 3] = [Self::CraftedM2, Self::CraftedM4, Self::ReplayedM2];
}

/// An attacker as written in a scenario file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// Sends random M5, M1, M3, M5 under the victim's id from `at_ms` on.
    ForgeNode { victim: NodeId, at_ms: u64 },
    ForgeSink {
        victim: NodeId,
        variant: ForgeSinkVariant,
    },
    /// Records the victim's session, then replays its M1 at `at_ms` and its
    /// M3 shortly after.
    Replay { victim: NodeId, at_ms: u64 },
    /// Pushes random and spliced data frames at the sink in every state.
    Inject { victim: NodeId, at_ms: u64 },
    /// Sits on the victim's links and flips one bit in every frame of the
    /// target type. With no target it passes everything through.
    Mitm {
        victim: NodeId,
        #[serde(default)]
        target: Option<MessageTag>,
    },
    /// Records every frame on every link.
    Eavesdrop,
}

impl AdversarySpec {
    pub fn victim(&self) -> Option<NodeId> {
        match self {
            Self::ForgeNode { victim, .. }
            | Self::ForgeSink { victim, .. }
            | Self::Replay { victim, .. }
            | Self::Inject { victim, .. }
            | Self::Mitm { victim, .. } => Some(*victim),
            Self::Eavesdrop => None,
        }
    }

    pub fn kind(&self) -> AttackKind {
        match self {
            Self::ForgeNode { .. } => AttackKind::ForgeNode,
            Self::ForgeSink { .. } => AttackKind::ForgeSink,
            Self::Replay { .. } => AttackKind::Replay,
            Self::Inject { .. } => AttackKind::Inject,
            Self::Mitm { .. } => AttackKind::Mitm,
            Self::Eavesdrop => AttackKind::Eavesdrop,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    ForgeNode,
    ForgeSink,
    Replay,
    Inject,
    Mitm,
    Guess,
    Eavesdrop,
}

impl AttackKind {
    pub const ALL: [Self; 7] = [
        Self::Replay,
        Self::ForgeNode,
        Self::ForgeSink,
        Self::Inject,
        Self::Mitm,
        Self::Guess,
        Self::Eavesdrop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ForgeNode => "forge-node",
            Self::ForgeSink => "forge-sink",
            Self::Replay => "replay",
            Self::Inject => "inject",
            Self::Mitm => "mitm",
            Self::Guess => "guess",
            Self::Eavesdrop => "eavesdrop",
        }
    }

    /// Trials run when the caller does not choose.
    pub fn default_trials(self) -> usize {
        match self {
            Self::Replay => 1000,
            Self::Inject => 500,
            _ => 100,
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown attack kind {s:?}; expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// Builds the attacker a spec describes.
pub fn instantiate(
    spec: &AdversarySpec,
    params: &ProtocolParams,
    topology: &Topology,
) -> Result<Box<dyn Attacker>, String> {
    if let Some(v) = spec.victim() {
        if !topology.contains(v) {
            return Err(format!("adversary victim {v} is not in the topology"));
        }
    }
    let p = params.clone();
    Ok(match *spec {
        AdversarySpec::ForgeNode { victim, at_ms } => Box::new(ForgeNode::new(victim, at_ms, p)),
        AdversarySpec::ForgeSink { victim, variant } => {
            Box::new(ForgeSink::new(victim, variant, p))
        }
        AdversarySpec::Replay { victim, at_ms } => Box::new(Replayer::new(victim, at_ms)),
        AdversarySpec::Inject { victim, at_ms } => Box::new(Injector::new(victim, at_ms)),
        AdversarySpec::Mitm { victim, target } => Box::new(Mitm::new(victim, target)),
        AdversarySpec::Eavesdrop => Box::new(Eavesdropper::default()),
    })
}

use serde::{Deserialize, Serialize};

use super::verdict::{bystanders_complete, freshness, judge, secrecy_hits, Freshness};
use super::{AdversarySpec, AttackKind, ForgeSinkVariant};
use crate::batch;
use crate::netsim::{run, Scenario, SimError, Traffic};
use crate::protocol::{MessageTag, NodeId};

/// Left ankle: two hops out, so its frames cross a relay.
pub const DEFAULT_VICTIM: NodeId = 5;

const ATTACK_AT_MS: u64 = 2_000;
const MITM_TARGETS: [MessageTag; 5] = [
    MessageTag::M1,
    MessageTag::M2,
    MessageTag::M3,
    MessageTag::M4,
    MessageTag::M5,
];

/// The 7-node body network with one attacker aimed at `DEFAULT_VICTIM`.
/// `trial` picks the variant for attacks that have several.
pub fn attack_scenario(kind: AttackKind, trial: usize, seed: u64, modulus_bits: usize) -> Scenario {
    let mut s = Scenario::honest7(seed).with_modulus_bits(modulus_bits);
    let victim = DEFAULT_VICTIM;
    let spec = match kind {
        AttackKind::ForgeNode => {
            // The real victim stays silent; only the forger speaks for it.
            s.traffic.retain(|t| t.node != victim);
            AdversarySpec::ForgeNode { victim, at_ms: 200 }
        }
        AttackKind::ForgeSink => {
            let variant = ForgeSinkVariant::ALL[trial % ForgeSinkVariant::ALL.len()];
            if variant == ForgeSinkVariant::ReplayedM2 {
                s.traffic.push(Traffic {
                    node: victim,
                    at_ms: ATTACK_AT_MS,
                    data: format!("vitals n{victim} reading 1"),
                });
            }
            AdversarySpec::ForgeSink { victim, variant }
        }
        AttackKind::Replay => AdversarySpec::Replay {
            victim,
            at_ms: ATTACK_AT_MS,
        },
        AttackKind::Inject => AdversarySpec::Inject {
            victim,
            at_ms: ATTACK_AT_MS,
        },
        AttackKind::Mitm => AdversarySpec::Mitm {
            victim,
            target: Some(MITM_TARGETS[trial % MITM_TARGETS.len()]),
        },
        AttackKind::Eavesdrop => AdversarySpec::Eavesdrop,
        AttackKind::Guess => return guess_scenario(seed, modulus_bits, 100),
    };
    s.name = format!("attack-{kind}");
    s.adversaries.push(spec);
    s
}

/// Every sensor re-authenticates round after round under one eavesdropper,
/// giving at least `transcripts` sessions under the same long-term keys.
pub fn guess_scenario(seed: u64, modulus_bits: usize, transcripts: usize) -> Scenario {
    let mut s = Scenario::honest7(seed).with_modulus_bits(modulus_bits);
    let sensors = s.topology.sensors();
    let rounds = transcripts.div_ceil(sensors.len()).max(1) as u64;
    const ROUND_MS: u64 = 200;
    s.traffic = (0..rounds)
        .flat_map(|r| {
            sensors.iter().map(move |&id| Traffic {
                node: id,
                at_ms: 100 + r * ROUND_MS + 10 * id as u64,
                data: format!("vitals n{id} reading {r}"),
            })
        })
        .collect();
    s.horizon_ms = 100 + rounds * ROUND_MS + 5_000;
    s.name = "attack-guess".into();
    s.adversaries.push(AdversarySpec::Eavesdrop);
    s
}

/// Outcome of a batch of seeded trials of one attack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub kind: AttackKind,
    pub trials: usize,
    pub accepted: usize,
    /// Seeds whose run failed for any reason.
    pub failed_seeds: Vec<u64>,
    /// The attack-free version of the scenario completed.
    pub control_ok: bool,
    pub secret_hits: usize,
    pub freshness: Option<Freshness>,
    pub notes: Vec<String>,
}

impl AttackReport {
    pub fn pass(&self) -> bool {
        self.accepted == 0
            && self.failed_seeds.is_empty()
            && self.control_ok
            && self.secret_hits == 0
            && self.freshness.as_ref().is_none_or(Freshness::all_fresh)
    }

    pub fn line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let mut line = match (self.kind, &self.freshness) {
            (AttackKind::Guess, Some(f)) => format!(
                "{}: {status} ({} secret hits over {} transcripts; {}/{} fresh)",
                self.kind, self.secret_hits, f.sessions, f.distinct_tuples, f.sessions
            ),
            (AttackKind::Eavesdrop, _) => format!(
                "{}: {status} ({} secret hits over {} runs)",
                self.kind, self.secret_hits, self.trials
            ),
            _ => format!(
                "{}: {status} ({}/{} accepted)",
                self.kind, self.accepted, self.trials
            ),
        };
        if !self.control_ok {
            line.push_str("; control run incomplete");
        }
        if !self.failed_seeds.is_empty() {
            line.push_str(&format!(
                "; {} failing seeds, first {}",
                self.failed_seeds.len(),
                self.failed_seeds[0]
            ));
        }
        line
    }
}

/// Runs `trials` seeded instances of an attack plus one attack-free control.
/// For `Guess`, `trials` is the number of transcripts collected in one run.
pub fn run_attack(
    kind: AttackKind,
    base_seed: u64,
    trials: usize,
    modulus_bits: usize,
) -> Result<AttackReport, SimError> {
    if kind == AttackKind::Guess {
        let s = guess_scenario(base_seed, modulus_bits, trials);
        let trace = run(&s)?;
        let fresh = freshness(&trace);
        let complete = bystanders_complete(&trace, None);
        return Ok(AttackReport {
            kind,
            trials,
            accepted: 0,
            failed_seeds: if complete { vec![] } else { vec![base_seed] },
            control_ok: complete,
            secret_hits: secrecy_hits(&trace),
            freshness: Some(fresh),
            notes: Vec::new(),
        });
    }

    let seeds = batch::derive_seeds(base_seed, trials);
    let indexed: Vec<(usize, u64)> = seeds.iter().copied().enumerate().collect();
    let outcomes = batch::map_items(&indexed, |&(i, seed)| {
        let s = attack_scenario(kind, i, seed, modulus_bits);
        run(&s).map(|trace| {
            let v = judge(&s.adversaries[0], &trace);
            (seed, v, secrecy_hits(&trace))
        })
    });

    let mut report = AttackReport {
        kind,
        trials,
        accepted: 0,
        failed_seeds: Vec::new(),
        control_ok: true,
        secret_hits: 0,
        freshness: None,
        notes: Vec::new(),
    };
    for outcome in outcomes {
        let (seed, v, hits) = outcome?;
        report.accepted += v.accepted as usize;
        if kind == AttackKind::Eavesdrop {
            report.secret_hits += hits;
        }
        if !v.pass {
            report.failed_seeds.push(seed);
            if report.notes.len() < 5 {
                report.notes.push(format!("seed {seed}: {}", v.detail));
            }
        }
    }

    let mut control = attack_scenario(kind, 0, base_seed, modulus_bits);
    control.adversaries.clear();
    let trace = run(&control)?;
    report.control_ok = bystanders_complete(&trace, None);
    Ok(report)
}

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_routes, Link, NodeDesc, Topology};
use crate::adversary::AdversarySpec;
use crate::crypto::{
    ProtocolParams, DEFAULT_EXPONENT_BITS, DEFAULT_INTERVAL_BITS, DEFAULT_KCS_BITS,
    DEFAULT_MODULUS_BITS,
};
use crate::protocol::{NodeId, RetryPolicy, SINK_ID};

/// Named scenarios available without a file.
pub const PRESETS: &[&str] = &["honest7", "lossy-node3", "star6", "chain6"];

const DEFAULT_HORIZON_MS: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    #[serde(default = "default_modulus_bits")]
    pub modulus_bits: usize,
    #[serde(default = "default_exponent_bits")]
    pub exponent_bits: usize,
}

fn default_modulus_bits() -> usize {
    DEFAULT_MODULUS_BITS
}

fn default_exponent_bits() -> usize {
    DEFAULT_EXPONENT_BITS
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self {
            modulus_bits: DEFAULT_MODULUS_BITS,
            exponent_bits: DEFAULT_EXPONENT_BITS,
        }
    }
}

impl ParamSpec {
    pub fn build(&self) -> Result<ProtocolParams, String> {
        let base =
            ProtocolParams::with_modulus_bits(self.modulus_bits).map_err(|e| e.to_string())?;
        if self.exponent_bits == base.exponent_bits() {
            return Ok(base);
        }
        ProtocolParams::new(
            base.modulus().clone(),
            self.exponent_bits,
            DEFAULT_INTERVAL_BITS,
            DEFAULT_KCS_BITS,
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrySpec {
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub base_backoff_ms: u64,
}

fn default_max_retries() -> u32 {
    RetryPolicy::default().max_retries
}

fn default_backoff() -> u64 {
    RetryPolicy::default().base_backoff_ms
}

impl Default for RetrySpec {
    fn default() -> Self {
        let r = RetryPolicy::default();
        Self {
            max_retries: r.max_retries,
            base_backoff_ms: r.base_backoff_ms,
        }
    }
}

impl From<RetrySpec> for RetryPolicy {
    fn from(r: RetrySpec) -> Self {
        RetryPolicy {
            max_retries: r.max_retries,
            base_backoff_ms: r.base_backoff_ms,
        }
    }
}

/// The application on `node` hands `data` to the protocol at `at_ms`,
/// which opens a fresh handshake.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Traffic {
    pub node: NodeId,
    pub at_ms: u64,
    pub data: String,
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub horizon_ms: u64,
    pub params: ParamSpec,
    pub retry: RetrySpec,
    pub topology: Topology,
    pub traffic: Vec<Traffic>,
    pub adversaries: Vec<AdversarySpec>,
}

/// On-disk layout.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    seed: u64,
    #[serde(default = "default_horizon")]
    horizon_ms: u64,
    #[serde(default)]
    params: ParamSpec,
    #[serde(default)]
    retry: RetrySpec,
    #[serde(default)]
    node: Vec<NodeDesc>,
    #[serde(default)]
    link: Vec<Link>,
    #[serde(default)]
    traffic: Vec<Traffic>,
    #[serde(default)]
    adversary: Vec<AdversarySpec>,
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON_MS
}

/// A scenario problem, pointing at the file and line where possible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.origin, line, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

/// Where a validation problem lives in the source text.
#[derive(Clone, Copy)]
enum Locus {
    Key(&'static str),
    Table(&'static str),
    Entry(&'static str, usize),
    Nowhere,
}

fn locate(text: &str, locus: Locus) -> Option<usize> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_start()));
    match locus {
        Locus::Key(key) => lines
            .find(|(_, l)| {
                l.strip_prefix(key)
                    .is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map(|(n, _)| n),
        Locus::Table(name) => {
            let header = format!("[{name}]");
            lines.find(|(_, l)| l.starts_with(&header)).map(|(n, _)| n)
        }
        Locus::Entry(name, k) => {
            let header = format!("[[{name}]]");
            lines
                .filter(|(_, l)| l.starts_with(&header))
                .nth(k)
                .map(|(n, _)| n)
        }
        Locus::Nowhere => None,
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Scenario {
    /// Seven sensors on the body, each sending one reading.
    pub fn honest7(seed: u64) -> Self {
        let topology = Topology::body7();
        let traffic = topology
            .sensors()
            .into_iter()
            .map(|id| Traffic {
                node: id,
                at_ms: 100 + 10 * id as u64,
                data: format!("vitals n{id} reading 0"),
            })
            .collect();
        Self {
            name: "honest7".into(),
            seed,
            horizon_ms: DEFAULT_HORIZON_MS,
            params: ParamSpec::default(),
            retry: RetrySpec::default(),
            topology,
            traffic,
            adversaries: Vec::new(),
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let mut s = Self::honest7(seed);
        match name {
            "honest7" => {}
            "lossy-node3" => {
                s.topology.link_mut(SINK_ID, 3).expect("body7 has 0-3").loss = 1.0;
            }
            "star6" | "chain6" => {
                s.topology = if name == "star6" {
                    Topology::star(6)
                } else {
                    Topology::chain(6)
                };
            }
            _ => return None,
        }
        s.name = name.into();
        Some(s)
    }

    pub fn with_modulus_bits(mut self, bits: usize) -> Self {
        self.params.modulus_bits = bits;
        self
    }

    pub fn protocol_params(&self) -> Result<ProtocolParams, String> {
        self.params.build()
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError {
            origin: origin.into(),
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        let scenario = Self {
            name: file.name,
            seed: file.seed,
            horizon_ms: file.horizon_ms,
            params: file.params,
            retry: file.retry,
            topology: Topology {
                nodes: file.node,
                links: file.link,
            },
            traffic: file.traffic,
            adversaries: file.adversary,
        };
        scenario.check().map_err(|(locus, message)| ScenarioError {
            origin: origin.into(),
            line: locate(text, locus),
            message,
        })?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            origin: origin.clone(),
            line: None,
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text, &origin)
    }

    pub fn to_toml(&self) -> String {
        let file = ScenarioFile {
            name: self.name.clone(),
            seed: self.seed,
            horizon_ms: self.horizon_ms,
            params: self.params,
            retry: self.retry,
            node: self.topology.nodes.clone(),
            link: self.topology.links.clone(),
            traffic: self.traffic.clone(),
            adversary: self.adversaries.clone(),
        };
        toml::to_string(&file).expect("scenario serializes")
    }

    /// Checks everything a run depends on.
    pub fn validate(&self) -> Result<(), String> {
        self.check().map_err(|(_, m)| m)
    }

    fn check(&self) -> Result<(), (Locus, String)> {
        if self.params.modulus_bits < crate::crypto::MIN_MODULUS_BITS {
            return Err((
                Locus::Key("modulus_bits"),
                format!(
                    "modulus_bits {} is below the minimum {}",
                    self.params.modulus_bits,
                    crate::crypto::MIN_MODULUS_BITS
                ),
            ));
        }
        self.params
            .build()
            .map_err(|m| (Locus::Table("params"), m))?;

        let mut ids = BTreeSet::new();
        for (k, n) in self.topology.nodes.iter().enumerate() {
            if !ids.insert(n.id) {
                return Err((
                    Locus::Entry("node", k),
                    format!("duplicate node id {}", n.id),
                ));
            }
        }
        if !ids.contains(&SINK_ID) {
            return Err((Locus::Nowhere, "node 0 (the sink) is missing".into()));
        }
        for (k, l) in self.topology.links.iter().enumerate() {
            let at = Locus::Entry("link", k);
            if l.a == l.b {
                return Err((at, format!("self-loop on node {}", l.a)));
            }
            if let Some(end) = [l.a, l.b].into_iter().find(|e| !ids.contains(e)) {
                return Err((
                    at,
                    format!("link {}-{} references unknown node {end}", l.a, l.b),
                ));
            }
            if !(0.0..=1.0).contains(&l.loss) {
                return Err((at, format!("loss {} outside [0, 1]", l.loss)));
            }
        }
        if let Err(e) = build_routes(&self.topology) {
            let first = e.unreachable[0];
            let k = self.topology.nodes.iter().position(|n| n.id == first);
            return Err((
                k.map_or(Locus::Nowhere, |k| Locus::Entry("node", k)),
                e.to_string(),
            ));
        }
        for (k, t) in self.traffic.iter().enumerate() {
            let at = Locus::Entry("traffic", k);
            if !ids.contains(&t.node) {
                return Err((at, format!("traffic references unknown node {}", t.node)));
            }
            if t.node == SINK_ID {
                return Err((at, "the sink does not originate traffic".into()));
            }
            if t.at_ms > self.horizon_ms {
                return Err((at, format!("at_ms {} is past the horizon", t.at_ms)));
            }
        }
        for (k, a) in self.adversaries.iter().enumerate() {
            if let Some(victim) = a.victim() {
                if victim == SINK_ID || !ids.contains(&victim) {
                    return Err((
                        Locus::Entry("adversary", k),
                        format!("victim {victim} is not a sensor in this topology"),
                    ));
                }
            }
        }
        Ok(())
    }
}

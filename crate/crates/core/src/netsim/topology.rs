use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::protocol::{NodeId, SINK_ID};

pub const DEFAULT_DELAY_MS: u64 = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDesc {
    pub id: NodeId,
    #[serde(default)]
    pub label: String,
}

fn default_delay() -> u64 {
    DEFAULT_DELAY_MS
}

/// Undirected radio link. Loss applies independently to each transmission
/// in either direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    #[serde(default = "default_delay")]
    pub delay_ms: u64,
    #[serde(default)]
    pub loss: f64,
}

impl Link {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        Self {
            a,
            b,
            delay_ms: DEFAULT_DELAY_MS,
            loss: 0.0,
        }
    }

    pub fn joins(&self, x: NodeId, y: NodeId) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    #[serde(rename = "node")]
    pub nodes: Vec<NodeDesc>,
    #[serde(rename = "link")]
    pub links: Vec<Link>,
}

impl Topology {
    /// Seven sensors on one body with the sink on the chest. The right
    /// wrist (node 3) is a leaf one hop from the sink; both ankles sit two
    /// hops out behind the waist.
    pub fn body7() -> Self {
        let labels = [
            "chest",
            "head",
            "left-wrist",
            "right-wrist",
            "waist",
            "left-ankle",
            "right-ankle",
        ];
        let nodes = labels
            .iter()
            .enumerate()
            .map(|(i, l)| NodeDesc {
                id: i as NodeId,
                label: (*l).to_string(),
            })
            .collect();
        let links = [
            (0, 1),
            (0, 2),
            (0, 3),
            (0, 4),
            (2, 4),
            (4, 5),
            (4, 6),
            (5, 6),
        ]
        .into_iter()
        .map(|(a, b)| Link::new(a, b))
        .collect();
        Self { nodes, links }
    }

    /// Every node one hop from the sink.
    pub fn star(n_sensors: u8) -> Self {
        let nodes = (0..=n_sensors)
            .map(|id| NodeDesc {
                id,
                label: String::new(),
            })
            .collect();
        let links = (1..=n_sensors).map(|id| Link::new(SINK_ID, id)).collect();
        Self { nodes, links }
    }

    /// `0 - 1 - 2 - ... - n`.
    pub fn chain(n_sensors: u8) -> Self {
        let nodes = (0..=n_sensors)
            .map(|id| NodeDesc {
                id,
                label: String::new(),
            })
            .collect();
        let links = (1..=n_sensors).map(|id| Link::new(id - 1, id)).collect();
        Self { nodes, links }
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.iter().any(|n| n.id == id)
    }

    pub fn sensors(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&id| id != SINK_ID).collect()
    }

    pub fn link(&self, x: NodeId, y: NodeId) -> Option<&Link> {
        self.links.iter().find(|l| l.joins(x, y))
    }

    pub fn link_mut(&mut self, x: NodeId, y: NodeId) -> Option<&mut Link> {
        self.links.iter_mut().find(|l| l.joins(x, y))
    }

    /// Neighbors of every node, sorted by id.
    pub fn adjacency(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> =
            self.node_ids().map(|id| (id, BTreeSet::new())).collect();
        for l in &self.links {
            adj.entry(l.a).or_default().insert(l.b);
            adj.entry(l.b).or_default().insert(l.a);
        }
        adj.into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect()
    }

    /// Structural checks. Connectivity is checked by route building.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(format!("duplicate node id {}", n.id));
            }
        }
        if !seen.contains(&SINK_ID) {
            return Err("node 0 (the sink) is missing".into());
        }
        for l in &self.links {
            if l.a == l.b {
                return Err(format!("self-loop on node {}", l.a));
            }
            for end in [l.a, l.b] {
                if !seen.contains(&end) {
                    return Err(format!(
                        "link {}-{} references unknown node {end}",
                        l.a, l.b
                    ));
                }
            }
            if !(0.0..=1.0).contains(&l.loss) {
                return Err(format!(
                    "link {}-{} loss {} outside [0, 1]",
                    l.a, l.b, l.loss
                ));
            }
        }
        Ok(())
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self::body7()
    }
}

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::Topology;
use crate::protocol::{NodeId, SINK_ID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub parent: NodeId,
    pub hops: u32,
}

/// One parent per node, forming a collection tree rooted at the sink.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingTable {
    routes: BTreeMap<NodeId, Route>,
}

impl RoutingTable {
    pub fn insert(&mut self, node: NodeId, route: Route) {
        self.routes.insert(node, route);
    }

    pub fn route(&self, node: NodeId) -> Option<Route> {
        self.routes.get(&node).copied()
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.route(node).map(|r| r.parent)
    }

    pub fn hops(&self, node: NodeId) -> Option<u32> {
        if node == SINK_ID {
            Some(0)
        } else {
            self.route(node).map(|r| r.hops)
        }
    }

    pub fn routed(&self) -> impl Iterator<Item = (NodeId, Route)> + '_ {
        self.routes.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Nodes from `node` up to and including the sink.
    pub fn path_to_sink(&self, node: NodeId) -> Option<Vec<NodeId>> {
        let mut path = vec![node];
        let mut cur = node;
        while cur != SINK_ID {
            cur = self.parent(cur)?;
            if path.len() > self.routes.len() + 1 {
                return None;
            }
            path.push(cur);
        }
        Some(path)
    }

    /// Next hop from `at` toward `dest`: down the tree when `at` is an
    /// ancestor of `dest`, otherwise up toward the sink.
    pub fn next_hop(&self, at: NodeId, dest: NodeId) -> Option<NodeId> {
        if at == dest {
            return None;
        }
        if let Some(path) = self.path_to_sink(dest) {
            if let Some(i) = path.iter().position(|&n| n == at) {
                return (i > 0).then(|| path[i - 1]);
            }
        }
        if at == SINK_ID {
            None
        } else {
            self.parent(at)
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("no route to sink from nodes {unreachable:?}")]
pub struct RouteError {
    pub unreachable: Vec<NodeId>,
}

/// Breadth-first flood from the sink. Neighbors are visited in id order and
/// each node keeps the first minimum-hop parent it hears.
pub fn build_routes(topology: &Topology) -> Result<RoutingTable, RouteError> {
    let adj = topology.adjacency();
    let mut table = RoutingTable::default();
    let mut queue = VecDeque::from([(SINK_ID, 0u32)]);
    while let Some((u, h)) = queue.pop_front() {
        for &v in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            if v == SINK_ID || table.route(v).is_some() {
                continue;
            }
            table.insert(
                v,
                Route {
                    parent: u,
                    hops: h + 1,
                },
            );
            queue.push_back((v, h + 1));
        }
    }
    let unreachable: Vec<NodeId> = topology
        .sensors()
        .into_iter()
        .filter(|id| table.route(*id).is_none())
        .collect();
    if unreachable.is_empty() {
        Ok(table)
    } else {
        Err(RouteError { unreachable })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{Link, NodeDesc};

    #[test]
    fn star_is_single_hop() {
        let t = build_routes(&Topology::star(6)).unwrap();
        for id in 1..=6 {
            assert_eq!(t.route(id), Some(Route { parent: 0, hops: 1 }));
        }
    }

    #[test]
    fn chain_parents() {
        let t = build_routes(&Topology::chain(2)).unwrap();
        assert_eq!(t.parent(2), Some(1));
        assert_eq!(t.parent(1), Some(0));
        assert_eq!(t.hops(2), Some(2));
        assert_eq!(t.path_to_sink(2), Some(vec![2, 1, 0]));
    }

    /// Independent oracle: Bellman-Ford style relaxation over the edge list.
    fn hop_oracle(topo: &Topology) -> BTreeMap<NodeId, u32> {
        let mut dist: BTreeMap<NodeId, u32> = BTreeMap::from([(0, 0)]);
        for _ in 0..topo.nodes.len() {
            for l in &topo.links {
                for (x, y) in [(l.a, l.b), (l.b, l.a)] {
                    if let Some(&dx) = dist.get(&x) {
                        let e = dist.entry(y).or_insert(u32::MAX);
                        *e = (*e).min(dx + 1);
                    }
                }
            }
        }
        dist
    }

    #[test]
    fn body7_tree_matches_oracle() {
        let topo = Topology::body7();
        let t = build_routes(&topo).unwrap();
        assert_eq!(t.len(), 6);
        let oracle = hop_oracle(&topo);
        for id in 1..=6 {
            assert_eq!(t.hops(id), oracle.get(&id).copied(), "node {id}");
            let parent = t.parent(id).unwrap();
            assert!(topo.link(id, parent).is_some());
            assert_eq!(t.hops(parent).unwrap() + 1, t.hops(id).unwrap());
        }
        assert_eq!(t.hops(5), Some(2));
        assert_eq!(t.hops(3), Some(1));
    }

    #[test]
    fn next_hop_walks_the_tree_both_ways() {
        let t = build_routes(&Topology::body7()).unwrap();
        assert_eq!(t.next_hop(5, 0), Some(4));
        assert_eq!(t.next_hop(4, 0), Some(0));
        assert_eq!(t.next_hop(0, 5), Some(4));
        assert_eq!(t.next_hop(4, 5), Some(5));
        // 6 is not on the path from 0 to 5, so it heads for the sink first.
        assert_eq!(t.next_hop(6, 5), Some(4));
        assert_eq!(t.next_hop(5, 5), None);
    }

    #[test]
    fn disconnected_nodes_reported() {
        let mut topo = Topology::chain(2);
        topo.nodes.push(NodeDesc {
            id: 7,
            label: "floating".into(),
        });
        topo.nodes.push(NodeDesc {
            id: 8,
            label: String::new(),
        });
        topo.links.push(Link::new(7, 8));
        assert_eq!(
            build_routes(&topo),
            Err(RouteError {
                unreachable: vec![7, 8]
            })
        );
    }
}

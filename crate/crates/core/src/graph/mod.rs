//! Network topologies: nodes, undirected weighted links, single-failure scenarios and the
//! filtered views used by the shortest-path engines.
//!
//! A physical link `{u, v}` is stored once and realized as the arc pair `(u, v)` and `(v, u)`
//! with equal weight. A failed link is dead in both directions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod connectivity;
mod generate;
mod io;

pub use connectivity::{is_connected, is_two_connected};
pub use generate::{
    generate, generate_erdos_renyi, generate_lattice, generate_waxman, GeneratorKind,
    DEFAULT_RETRIES,
};
pub use io::{load_topology, parse_topology, save_topology, write_topology};

/// Dense node index in `[0, |N|)`.
pub type NodeId = usize;
/// Index of a physical link inside [`Topology::links`].
pub type LinkId = usize;

/// An undirected physical link. Endpoints are stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: f64,
}

impl Link {
    pub fn new(a: NodeId, b: NodeId, weight: f64) -> Self {
        Link {
            u: a.min(b),
            v: a.max(b),
            weight,
        }
    }

    /// The endpoint that is not `node`.
    pub fn opposite(&self, node: NodeId) -> NodeId {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn connects(&self, a: NodeId, b: NodeId) -> bool {
        (self.u == a && self.v == b) || (self.u == b && self.v == a)
    }
}

/// Immutable weighted topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    links: Vec<Link>,
    /// Per node: `(neighbor, link)` sorted by neighbor id.
    adj: Vec<Vec<(NodeId, LinkId)>>,
}

impl Topology {
    /// Builds a topology, rejecting self-loops, parallel links, unknown endpoints and negative
    /// or non-finite weights.
    pub fn new(node_count: usize, links: impl IntoIterator<Item = Link>) -> Result<Self> {
        let mut adj: Vec<Vec<(NodeId, LinkId)>> = vec![Vec::new(); node_count];
        let mut stored = Vec::new();
        for link in links {
            let link = Link::new(link.u, link.v, link.weight);
            if link.v >= node_count {
                return Err(Error::UnknownNode(link.v));
            }
            if link.u == link.v {
                return Err(Error::InvalidTopology(format!(
                    "self-loop at node {}",
                    link.u
                )));
            }
            if !link.weight.is_finite() || link.weight < 0.0 {
                return Err(Error::InvalidTopology(format!(
                    "link {}-{} has invalid weight {}",
                    link.u, link.v, link.weight
                )));
            }
            if adj[link.u].iter().any(|&(n, _)| n == link.v) {
                return Err(Error::InvalidTopology(format!(
                    "duplicate link {}-{}",
                    link.u, link.v
                )));
            }
            let id = stored.len();
            adj[link.u].push((link.v, id));
            adj[link.v].push((link.u, id));
            stored.push(link);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Topology { links: stored, adj })
    }

    /// Convenience constructor from `(u, v, weight)` triples.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        Self::new(
            node_count,
            edges.iter().map(|&(u, v, w)| Link::new(u, v, w)),
        )
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.adj.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    /// Neighbors of `node` with the connecting link, sorted by neighbor id.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, LinkId)] {
        &self.adj[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adj[node].len()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node < self.adj.len()
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<LinkId> {
        let list = self.adj.get(a)?;
        list.binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn weight_between(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.link_between(a, b).map(|l| self.links[l].weight)
    }

    /// Same topology with every link weight set to 1 (hop-count metric).
    pub fn with_unit_weights(&self) -> Topology {
        let mut t = self.clone();
        for l in &mut t.links {
            l.weight = 1.0;
        }
        t
    }

    /// A constant-time view of this topology with the failed element of `scenario` hidden.
    pub fn view(&self, scenario: FailureScenario) -> View<'_> {
        View {
            topo: self,
            scenario,
        }
    }

    pub(crate) fn check_node(&self, node: NodeId) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::UnknownNode(node))
        }
    }
}

/// The single failed element governing link status during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum FailureScenario {
    #[default]
    None,
    /// Physical link `{u, v}` is down in both directions. Stored with `u < v`.
    LinkDown(NodeId, NodeId),
    /// Node is down together with all incident links.
    NodeDown(NodeId),
}

impl FailureScenario {
    pub fn link(a: NodeId, b: NodeId) -> Self {
        FailureScenario::LinkDown(a.min(b), a.max(b))
    }

    pub fn node(v: NodeId) -> Self {
        FailureScenario::NodeDown(v)
    }

    pub fn node_alive(&self, node: NodeId) -> bool {
        !matches!(*self, FailureScenario::NodeDown(v) if v == node)
    }

    /// Status `s_uv` of the (physical) link between `a` and `b`.
    pub fn link_alive(&self, a: NodeId, b: NodeId) -> bool {
        match *self {
            FailureScenario::None => true,
            FailureScenario::LinkDown(u, v) => !((u == a && v == b) || (u == b && v == a)),
            FailureScenario::NodeDown(v) => a != v && b != v,
        }
    }

    /// Every single-element failure of `t`: all links, then all nodes.
    pub fn all_single(t: &Topology) -> Vec<FailureScenario> {
        t.links()
            .iter()
            .map(|l| FailureScenario::link(l.u, l.v))
            .chain(t.nodes().map(FailureScenario::NodeDown))
            .collect()
    }
}

impl fmt::Display for FailureScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureScenario::None => write!(f, "none"),
            FailureScenario::LinkDown(u, v) => write!(f, "link:{u}-{v}"),
            FailureScenario::NodeDown(v) => write!(f, "node:{v}"),
        }
    }
}

impl FromStr for FailureScenario {
    type Err = Error;

    /// Accepts `none`, `link:U-V` and `node:V`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Syntax {
            what: "failure scenario",
            input: s.to_string(),
        };
        let s = s.trim();
        if s == "none" {
            return Ok(FailureScenario::None);
        }
        if let Some(rest) = s.strip_prefix("link:") {
            let (a, b) = rest.split_once('-').ok_or_else(bad)?;
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            return Ok(FailureScenario::link(a, b));
        }
        if let Some(rest) = s.strip_prefix("node:") {
            return Ok(FailureScenario::NodeDown(
                rest.trim().parse().map_err(|_| bad())?,
            ));
        }
        Err(bad())
    }
}

/// Read-only view of a topology with one element filtered out. Creating a view is O(1) and the
/// underlying topology is never touched.
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    topo: &'a Topology,
    scenario: FailureScenario,
}

impl<'a> View<'a> {
    pub fn topology(&self) -> &'a Topology {
        self.topo
    }

    pub fn scenario(&self) -> FailureScenario {
        self.scenario
    }

    /// Surviving `(neighbor, weight)` pairs of `node`, sorted by neighbor id. Empty for a failed
    /// node.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = (NodeId, f64)> + 'a {
        let scenario = self.scenario;
        let topo = self.topo;
        let alive = scenario.node_alive(node);
        topo.adj[node]
            .iter()
            .filter(move |&&(n, _)| alive && scenario.link_alive(node, n))
            .map(move |&(n, l)| (n, topo.links[l].weight))
    }
}

//! Min-sum disjoint path pairs and the crankback rule set built on them.
//!
//! Pairs come from Bhandari's method: take the shortest path, replace each of its arcs by the
//! reversed arc with negated weight, find a second shortest path with Bellman-Ford, cancel arcs
//! the two paths traverse in opposite directions, and split what is left into two paths.
//! Node-disjoint pairs run the same method on the node-split graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Topology};
use crate::protect::{
    Action, Bucket, Disjointness, FailureLabel, ForwardingMatrix, InPort, Match, Mode, Uncovered,
};
use crate::spf::{bellman_ford, dijkstra, tie_break, AllPairs, ArcSource};

/// Directed graph with per-tail arcs sorted by head.
#[derive(Debug, Clone)]
struct Digraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl ArcSource for Digraph {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn for_each_arc(&self, tail: usize, f: &mut dyn FnMut(usize, f64)) {
        for &(h, w) in &self.adj[tail] {
            f(h, w);
        }
    }
}

impl Digraph {
    fn symmetric(t: &Topology) -> Self {
        let adj = t
            .nodes()
            .map(|u| {
                t.neighbors(u)
                    .iter()
                    .map(|&(v, l)| (v, t.link(l).weight))
                    .collect()
            })
            .collect();
        Digraph { adj }
    }

    /// `v` becomes `2v` (in) and `2v + 1` (out) joined by a zero arc; links run out -> in.
    fn split(t: &Topology) -> Self {
        let mut adj = vec![Vec::new(); 2 * t.node_count()];
        for v in t.nodes() {
            adj[2 * v].push((2 * v + 1, 0.0));
            for &(u, l) in t.neighbors(v) {
                adj[2 * v + 1].push((2 * u, t.link(l).weight));
            }
        }
        for a in &mut adj {
            a.sort_by_key(|&(h, _)| h);
        }
        Digraph { adj }
    }

    fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.adj[a].iter().find(|&&(h, _)| h == b).map(|&(_, w)| w)
    }

    fn remove(&mut self, a: usize, b: usize) {
        self.adj[a].retain(|&(h, _)| h != b);
    }

    fn set(&mut self, a: usize, b: usize, w: f64) {
        let arcs = &mut self.adj[a];
        match arcs.binary_search_by_key(&b, |&(h, _)| h) {
            Ok(i) => arcs[i].1 = w,
            Err(i) => arcs.insert(i, (b, w)),
        }
    }
}

fn tree_path(parent: &[Option<usize>], s: usize, d: usize) -> Vec<usize> {
    let mut path = vec![d];
    let mut cur = d;
    while cur != s {
        cur = parent[cur].expect("reached node has a parent");
        path.push(cur);
    }
    path.reverse();
    path
}

fn arcs_of(path: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    path.windows(2).map(|w| (w[0], w[1]))
}

/// Two arc-disjoint `s -> d` paths of minimum total weight, as node sequences of `g`.
fn bhandari(g: &Digraph, s: usize, d: usize) -> Option<[Vec<usize>; 2]> {
    let dist = dijkstra(g, s, Some(&[d]));
    if !dist[d].is_finite() {
        return None;
    }
    let p1 = tree_path(&tie_break(g, s, &dist), s, d);

    let mut residual = g.clone();
    for (a, b) in arcs_of(&p1) {
        let w = g.weight(a, b).expect("path arc");
        residual.remove(a, b);
        residual.set(b, a, -w);
    }
    let dist2 = bellman_ford(&residual, s)?;
    if !dist2[d].is_finite() {
        return None;
    }
    let p2 = tree_path(&tie_break(&residual, s, &dist2), s, d);

    let mut arcs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let p2_arcs: Vec<_> = arcs_of(&p2).collect();
    for (a, b) in arcs_of(&p1) {
        if !p2_arcs.contains(&(b, a)) {
            arcs.entry(a).or_default().push(b);
        }
    }
    for &(a, b) in &p2_arcs {
        if !p1.windows(2).any(|w| w[0] == b && w[1] == a) {
            arcs.entry(a).or_default().push(b);
        }
    }
    for heads in arcs.values_mut() {
        heads.sort_unstable();
    }
    let mut walk = || {
        let mut path = vec![s];
        let mut cur = s;
        while cur != d {
            let heads = arcs.get_mut(&cur)?;
            if heads.is_empty() {
                return None;
            }
            cur = heads.remove(0);
            if let Some(i) = path.iter().position(|&x| x == cur) {
                path.truncate(i);
            }
            path.push(cur);
        }
        Some(path)
    };
    let a = walk()?;
    let b = walk()?;
    Some([a, b])
}

/// Suurballe's formulation with reduced costs. Only the total weight is returned; it must agree
/// with Bhandari's.
fn suurballe(g: &Digraph, s: usize, d: usize) -> Option<f64> {
    let pot = dijkstra(g, s, None);
    if !pot[d].is_finite() {
        return None;
    }
    let p1 = tree_path(&tie_break(g, s, &pot), s, d);
    let n = g.adj.len();
    let mut reduced = Digraph {
        adj: vec![Vec::new(); n],
    };
    for u in 0..n {
        for &(v, w) in &g.adj[u] {
            if pot[u].is_finite() && pot[v].is_finite() {
                reduced.adj[u].push((v, (w + pot[u] - pot[v]).max(0.0)));
            }
        }
    }
    for (a, b) in arcs_of(&p1) {
        reduced.remove(a, b);
        reduced.set(b, a, 0.0);
    }
    let dist = dijkstra(&reduced, s, Some(&[d]));
    dist[d].is_finite().then(|| 2.0 * pot[d] + dist[d])
}

/// A path as a node sequence with its weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPath {
    pub nodes: Vec<NodeId>,
    pub weight: f64,
}

impl WeightedPath {
    fn new(t: &Topology, nodes: Vec<NodeId>) -> Self {
        let weight = nodes
            .windows(2)
            .map(|w| t.weight_between(w[0], w[1]).expect("path follows links"))
            .sum();
        WeightedPath { nodes, weight }
    }
}

/// Min-sum pair of disjoint paths. `primary` is the lighter path (ties: smaller node sequence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointPair {
    pub primary: WeightedPath,
    pub backup: WeightedPath,
}

impl DisjointPair {
    pub fn total_weight(&self) -> f64 {
        self.primary.weight + self.backup.weight
    }
}

fn check_pair(t: &Topology, s: NodeId, d: NodeId) -> Result<()> {
    t.check_node(s)?;
    t.check_node(d)?;
    if s == d {
        return Err(Error::SameEndpoints(s));
    }
    Ok(())
}

fn order(t: &Topology, a: Vec<NodeId>, b: Vec<NodeId>) -> DisjointPair {
    let (a, b) = (WeightedPath::new(t, a), WeightedPath::new(t, b));
    let a_first = a.weight < b.weight || (a.weight == b.weight && a.nodes <= b.nodes);
    if a_first {
        DisjointPair {
            primary: a,
            backup: b,
        }
    } else {
        DisjointPair {
            primary: b,
            backup: a,
        }
    }
}

/// Min-sum pair of link-disjoint `s -> d` paths, `None` if no such pair exists.
pub fn bhandari_link_disjoint(t: &Topology, s: NodeId, d: NodeId) -> Result<Option<DisjointPair>> {
    check_pair(t, s, d)?;
    let g = Digraph::symmetric(t);
    Ok(bhandari(&g, s, d).map(|[a, b]| order(t, a, b)))
}

/// Min-sum pair of `s -> d` paths sharing no intermediate node, `None` if no such pair exists.
pub fn bhandari_node_disjoint(t: &Topology, s: NodeId, d: NodeId) -> Result<Option<DisjointPair>> {
    check_pair(t, s, d)?;
    let g = Digraph::split(t);
    let unsplit = |p: Vec<usize>| {
        let mut nodes: Vec<NodeId> = p.into_iter().map(|x| x / 2).collect();
        nodes.dedup();
        nodes
    };
    Ok(bhandari(&g, 2 * s + 1, 2 * d).map(|[a, b]| order(t, unsplit(a), unsplit(b))))
}

pub fn disjoint_pair(
    t: &Topology,
    s: NodeId,
    d: NodeId,
    variant: Disjointness,
) -> Result<Option<DisjointPair>> {
    match variant {
        Disjointness::Link => bhandari_link_disjoint(t, s, d),
        Disjointness::Node => bhandari_node_disjoint(t, s, d),
    }
}

/// Total weight of the min-sum pair computed independently with Suurballe's reduced costs.
pub fn suurballe_total(
    t: &Topology,
    s: NodeId,
    d: NodeId,
    variant: Disjointness,
) -> Result<Option<f64>> {
    check_pair(t, s, d)?;
    Ok(match variant {
        Disjointness::Link => suurballe(&Digraph::symmetric(t), s, d),
        Disjointness::Node => suurballe(&Digraph::split(t), 2 * s + 1, 2 * d),
    })
}

/// Per-pair forwarding with crankback: the source sends along the primary path; a node that finds
/// its next link dead returns the packet along the traversed prefix, and the source, seeing it
/// come back, switches to the backup path. All rules match on source, destination and incoming
/// port.
pub fn disjoint_rules(t: &Topology, variant: Disjointness) -> Result<ForwardingMatrix> {
    let ap = AllPairs::compute(t)?;
    let mut fw = ForwardingMatrix::new(Mode::DisjointBaseline(variant), t.node_count());
    for s in t.nodes() {
        for d in t.nodes() {
            if s == d {
                continue;
            }
            match disjoint_pair(t, s, d, variant)? {
                Some(pair) => install_pair(&mut fw, s, d, &pair.primary.nodes, &pair.backup.nodes),
                None => {
                    fw.report.uncovered.push(Uncovered {
                        node: s,
                        label: FailureLabel::Primary,
                        destination: d,
                        source: Some(s),
                    });
                    install_path(&mut fw, s, d, &ap.path(s, d));
                }
            }
        }
    }
    Ok(fw)
}

fn in_port(path: &[NodeId], i: usize) -> InPort {
    if i == 0 {
        InPort::Host
    } else {
        InPort::From(path[i - 1])
    }
}

fn install_path(fw: &mut ForwardingMatrix, s: NodeId, d: NodeId, path: &[NodeId]) {
    for i in 0..path.len() - 1 {
        fw.insert(
            path[i],
            Match::flow(s, d, in_port(path, i)),
            Action::Output(path[i + 1]),
        );
    }
}

fn install_pair(fw: &mut ForwardingMatrix, s: NodeId, d: NodeId, p: &[NodeId], b: &[NodeId]) {
    let k = p.len() - 1;
    let g = fw.group_for(
        s,
        vec![
            Bucket::watching(Action::Output(p[1])),
            Bucket::watching(Action::Output(b[1])),
        ],
    );
    fw.insert(s, Match::flow(s, d, InPort::Host), Action::GroupRef(g));
    for i in 1..k {
        let g = fw.group_for(
            p[i],
            vec![
                Bucket::watching(Action::Output(p[i + 1])),
                Bucket::watching(Action::Output(p[i - 1])),
            ],
        );
        fw.insert(p[i], Match::flow(s, d, in_port(p, i)), Action::GroupRef(g));
    }
    // returning packets, keyed by the downstream port
    for i in 1..k.saturating_sub(1) {
        fw.insert(
            p[i],
            Match::flow(s, d, InPort::From(p[i + 1])),
            Action::Output(p[i - 1]),
        );
    }
    if k >= 2 {
        fw.insert(
            s,
            Match::flow(s, d, InPort::From(p[1])),
            Action::Output(b[1]),
        );
    }
    for j in 1..b.len() - 1 {
        fw.insert(
            b[j],
            Match::flow(s, d, in_port(b, j)),
            Action::Output(b[j + 1]),
        );
    }
}

//! Shortest-path engines, deterministic tie-breaking and the all-to-all primary routing table.
//!
//! Distances come from Dijkstra (default) or a queued Bellman-Ford. The tree is then fixed by a
//! depth-first walk over the *tight* arcs (`dist[u] + w == dist[v]`) that always tries the
//! smallest neighbor id first. The resulting path to every node is the shortest path whose node
//! sequence is lexicographically smallest, so it does not depend on relaxation order, and every
//! suffix of a chosen path is itself the chosen path of its first node.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::graph::{FailureScenario, LinkId, NodeId, Topology, View};
use crate::protect::{Action, ForwardingMatrix, Match, Mode};

/// Directed arcs of a graph, enumerated per tail in ascending head order.
pub(crate) trait ArcSource {
    fn node_count(&self) -> usize;
    fn for_each_arc(&self, tail: usize, f: &mut dyn FnMut(usize, f64));
}

impl ArcSource for View<'_> {
    fn node_count(&self) -> usize {
        self.topology().node_count()
    }

    fn for_each_arc(&self, tail: usize, f: &mut dyn FnMut(usize, f64)) {
        for (head, w) in self.neighbors(tail) {
            f(head, w);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra from `src`. With `targets`, stops once every target is settled and every node at the
/// same distance as the farthest target is settled too, so all tight arcs into the targets are
/// known. Unsettled nodes are reported as `INFINITY`.
pub(crate) fn dijkstra(g: &dyn ArcSource, src: usize, targets: Option<&[usize]>) -> Vec<f64> {
    let n = g.node_count();
    let mut tentative = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut is_target = vec![false; n];
    let mut remaining = 0usize;
    if let Some(ts) = targets {
        for &t in ts {
            if !is_target[t] {
                is_target[t] = true;
                remaining += 1;
            }
        }
    }
    let mut bound = match targets {
        Some(_) if remaining == 0 => Some(0.0),
        _ => None,
    };

    let mut heap = BinaryHeap::new();
    tentative[src] = 0.0;
    heap.push(Reverse((Dist(0.0), src)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if settled[u] || d > tentative[u] {
            continue;
        }
        if matches!(bound, Some(b) if d > b) {
            break;
        }
        settled[u] = true;
        if is_target[u] {
            remaining -= 1;
            if remaining == 0 {
                bound = Some(d);
            }
        }
        g.for_each_arc(u, &mut |v, w| {
            let nd = d + w;
            if !settled[v] && nd < tentative[v] {
                tentative[v] = nd;
                heap.push(Reverse((Dist(nd), v)));
            }
        });
    }
    for (d, s) in tentative.iter_mut().zip(&settled) {
        if !s {
            *d = f64::INFINITY;
        }
    }
    tentative
}

/// Queued Bellman-Ford; arcs may be negative. `None` if a negative cycle is reachable.
pub(crate) fn bellman_ford(g: &dyn ArcSource, src: usize) -> Option<Vec<f64>> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut queued = vec![false; n];
    let mut pushes = vec![0usize; n];
    let mut queue = std::collections::VecDeque::new();
    dist[src] = 0.0;
    queue.push_back(src);
    queued[src] = true;
    while let Some(u) = queue.pop_front() {
        queued[u] = false;
        let du = dist[u];
        let mut cycle = false;
        g.for_each_arc(u, &mut |v, w| {
            if du + w < dist[v] {
                dist[v] = du + w;
                if !queued[v] {
                    pushes[v] += 1;
                    if pushes[v] > n {
                        cycle = true;
                    }
                    queued[v] = true;
                    queue.push_back(v);
                }
            }
        });
        if cycle {
            return None;
        }
    }
    Some(dist)
}

/// Parent pointers of the lexicographically smallest tight path to every reached node.
pub(crate) fn tie_break(g: &dyn ArcSource, src: usize, dist: &[f64]) -> Vec<Option<usize>> {
    let n = g.node_count();
    let mut parent = vec![None; n];
    let mut visited = vec![false; n];
    visited[src] = true;

    let tight = |u: usize| {
        let mut out = Vec::new();
        g.for_each_arc(u, &mut |v, w| {
            if dist[v].is_finite() && dist[u] + w == dist[v] {
                out.push(v);
            }
        });
        out
    };
    let mut stack = vec![(src, tight(src), 0usize)];
    while let Some((u, arcs, idx)) = stack.last_mut() {
        if let Some(&v) = arcs.get(*idx) {
            *idx += 1;
            if !visited[v] {
                visited[v] = true;
                parent[v] = Some(*u);
                let next = tight(v);
                stack.push((v, next, 0));
            }
        } else {
            stack.pop();
        }
    }
    parent
}

/// Shortest-path engine used to compute distances before tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Dijkstra,
    BellmanFord,
}

/// Tie-broken shortest-path tree rooted at `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathTree {
    source: NodeId,
    dist: Vec<f64>,
    parent: Vec<Option<NodeId>>,
    first_hop: Vec<Option<NodeId>>,
}

impl ShortestPathTree {
    fn build(g: &dyn ArcSource, source: NodeId, dist: Vec<f64>) -> Self {
        let parent = tie_break(g, source, &dist);
        let mut first_hop = vec![None; dist.len()];
        for v in 0..dist.len() {
            if first_hop[v].is_some() || parent[v].is_none() {
                continue;
            }
            // climb to the first node with a known hop (or a child of the root)
            let mut chain = vec![v];
            let mut cur = v;
            let hop = loop {
                let p = parent[cur].expect("tree node has a parent");
                if p == source {
                    break cur;
                }
                if let Some(h) = first_hop[p] {
                    break h;
                }
                chain.push(p);
                cur = p;
            };
            for c in chain {
                first_hop[c] = Some(hop);
            }
        }
        let dist = dist
            .iter()
            .zip(&parent)
            .enumerate()
            .map(|(v, (&d, p))| {
                if v == source || p.is_some() {
                    d
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        ShortestPathTree {
            source,
            dist,
            parent,
            first_hop,
        }
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn reachable(&self, dest: NodeId) -> bool {
        dest == self.source || self.parent[dest].is_some()
    }

    pub fn dist(&self, dest: NodeId) -> Option<f64> {
        self.reachable(dest).then(|| self.dist[dest])
    }

    /// Neighbor of the source on the path to `dest`.
    pub fn next_hop(&self, dest: NodeId) -> Option<NodeId> {
        self.first_hop[dest]
    }

    /// First outgoing link on the path to `dest`.
    pub fn next_link(&self, t: &Topology, dest: NodeId) -> Option<LinkId> {
        self.next_hop(dest)
            .and_then(|h| t.link_between(self.source, h))
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent[node]
    }

    /// Node sequence from the source to `dest`, both included.
    pub fn path(&self, dest: NodeId) -> Option<Vec<NodeId>> {
        if !self.reachable(dest) {
            return None;
        }
        let mut path = vec![dest];
        let mut cur = dest;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Shortest-path tree from `src` in `t` with the failed element of `excluded` filtered out.
/// With `targets`, only the targets (and what their paths need) are guaranteed to be present;
/// unreachable targets are simply absent.
pub fn shortest_tree(
    t: &Topology,
    src: NodeId,
    excluded: FailureScenario,
    targets: Option<&[NodeId]>,
) -> ShortestPathTree {
    shortest_tree_with(Engine::Dijkstra, t, src, excluded, targets)
}

pub fn shortest_tree_with(
    engine: Engine,
    t: &Topology,
    src: NodeId,
    excluded: FailureScenario,
    targets: Option<&[NodeId]>,
) -> ShortestPathTree {
    let view = t.view(excluded);
    let dist = match engine {
        Engine::Dijkstra => dijkstra(&view, src, targets),
        Engine::BellmanFord => {
            bellman_ford(&view, src).expect("non-negative weights admit no negative cycle")
        }
    };
    ShortestPathTree::build(&view, src, dist)
}

/// All-pairs distances via Floyd-Warshall; only used to cross-check the other engines.
#[allow(clippy::needless_range_loop)]
pub fn floyd_warshall_oracle(t: &Topology) -> Vec<Vec<f64>> {
    let n = t.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for l in t.links() {
        d[l.u][l.v] = d[l.u][l.v].min(l.weight);
        d[l.v][l.u] = d[l.v][l.u].min(l.weight);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let cand = dik + d[k][j];
                if cand < d[i][j] {
                    d[i][j] = cand;
                }
            }
        }
    }
    d
}

/// Counts one-to-many shortest-path computations.
#[derive(Debug)]
pub struct Spf<'t> {
    topo: &'t Topology,
    runs: usize,
}

impl<'t> Spf<'t> {
    pub fn new(topo: &'t Topology) -> Self {
        Spf { topo, runs: 0 }
    }

    pub fn topology(&self) -> &'t Topology {
        self.topo
    }

    pub fn tree(
        &mut self,
        src: NodeId,
        excluded: FailureScenario,
        targets: Option<&[NodeId]>,
    ) -> ShortestPathTree {
        self.runs += 1;
        shortest_tree(self.topo, src, excluded, targets)
    }

    pub fn all_pairs(&mut self) -> Result<AllPairs> {
        let n = self.topo.node_count();
        let mut dist = Vec::with_capacity(n);
        let mut next = Vec::with_capacity(n);
        for src in self.topo.nodes() {
            let tree = self.tree(src, FailureScenario::None, None);
            if (0..n).any(|d| !tree.reachable(d)) {
                return Err(Error::Disconnected);
            }
            dist.push(tree.dist.clone());
            next.push(tree.first_hop.clone());
        }
        Ok(AllPairs { dist, next })
    }

    /// Number of shortest-path computations performed so far.
    pub fn runs(&self) -> usize {
        self.runs
    }
}

/// Tie-broken all-to-all shortest paths of a connected topology.
#[derive(Debug, Clone, PartialEq)]
pub struct AllPairs {
    dist: Vec<Vec<f64>>,
    next: Vec<Vec<Option<NodeId>>>,
}

impl AllPairs {
    pub fn compute(t: &Topology) -> Result<Self> {
        Spf::new(t).all_pairs()
    }

    pub fn node_count(&self) -> usize {
        self.dist.len()
    }

    pub fn dist(&self, s: NodeId, d: NodeId) -> f64 {
        self.dist[s][d]
    }

    pub fn next_hop(&self, s: NodeId, d: NodeId) -> Option<NodeId> {
        self.next[s][d]
    }

    /// Primary path from `s` to `d`, both included. Every suffix is the primary path of its
    /// first node.
    pub fn path(&self, s: NodeId, d: NodeId) -> Vec<NodeId> {
        let mut path = vec![s];
        let mut cur = s;
        while cur != d {
            cur = self.next[cur][d].expect("connected");
            path.push(cur);
        }
        path
    }

    /// Whether the primary path `s -> d` crosses the physical link `{a, b}`.
    pub fn path_uses_link(&self, s: NodeId, d: NodeId, a: NodeId, b: NodeId) -> bool {
        let mut cur = s;
        while cur != d {
            let nh = self.next[cur][d].expect("connected");
            if (cur == a && nh == b) || (cur == b && nh == a) {
                return true;
            }
            cur = nh;
        }
        false
    }

    /// Whether the primary path `s -> d` enters node `v` (`d` included, `s` excluded).
    pub fn path_enters(&self, s: NodeId, d: NodeId, v: NodeId) -> bool {
        let mut cur = s;
        while cur != d {
            cur = self.next[cur][d].expect("connected");
            if cur == v {
                return true;
            }
        }
        false
    }

    pub fn affected_sets(&self) -> AffectedSets {
        let mut per_node: Vec<BTreeMap<NodeId, Vec<NodeId>>> =
            vec![BTreeMap::new(); self.node_count()];
        for (s, row) in self.next.iter().enumerate() {
            for (d, nh) in row.iter().enumerate() {
                if let Some(nh) = nh {
                    per_node[s].entry(*nh).or_default().push(d);
                }
            }
        }
        AffectedSets { per_node }
    }
}

/// For every node and outgoing link (identified by the neighbor it leads to), the destinations
/// whose primary path leaves the node over that link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffectedSets {
    per_node: Vec<BTreeMap<NodeId, Vec<NodeId>>>,
}

impl AffectedSets {
    /// Destinations routed from `node` over the link towards `neighbor`, ascending.
    pub fn get(&self, node: NodeId, neighbor: NodeId) -> &[NodeId] {
        self.per_node[node]
            .get(&neighbor)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// `(neighbor, destinations)` for every link of `node` that carries primary traffic.
    pub fn of_node(&self, node: NodeId) -> impl Iterator<Item = (NodeId, &[NodeId])> {
        self.per_node[node].iter().map(|(&n, d)| (n, d.as_slice()))
    }
}

/// Primary rules for every ordered pair plus the affected-destination sets.
pub fn all_to_all(t: &Topology) -> Result<(ForwardingMatrix, AffectedSets)> {
    let ap = AllPairs::compute(t)?;
    let mut fw = ForwardingMatrix::new(Mode::ShortestPath, t.node_count());
    install_primary(&mut fw, &ap);
    fw.report.spf_runs = t.node_count();
    Ok((fw, ap.affected_sets()))
}

pub(crate) fn install_primary(fw: &mut ForwardingMatrix, ap: &AllPairs) {
    let n = ap.node_count();
    for node in 0..n {
        for dest in 0..n {
            if let Some(nh) = ap.next_hop(node, dest) {
                fw.insert(node, Match::primary(dest), Action::Output(nh));
            }
        }
    }
}

//! Independent oracles shared by the integration tests. Nothing here calls the library's
//! shortest-path code.

#![allow(dead_code)]

use detour_core::graph::{generate, FailureScenario, GeneratorKind, NodeId, Topology};

pub fn square() -> Topology {
    Topology::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap()
}

pub fn complete(n: usize) -> Topology {
    let mut e = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            e.push((a, b, 1.0));
        }
    }
    Topology::from_edges(n, &e).unwrap()
}

/// Small two-connected topologies: lattices of 9 and 16 nodes, K4 to K6, squares and 50 seeded
/// Erdős–Rényi graphs with 10 nodes.
pub fn corpus() -> Vec<(String, Topology)> {
    let mut out = Vec::new();
    for n in [9, 16] {
        for seed in 1..=5 {
            out.push((
                format!("lattice{n}/{seed}"),
                generate(GeneratorKind::Lattice, n, seed, 0).unwrap(),
            ));
        }
    }
    for n in 4..=6 {
        out.push((format!("K{n}"), complete(n)));
    }
    out.push(("square".into(), square()));
    out.push((
        "square-weighted".into(),
        Topology::from_edges(4, &[(0, 1, 0.25), (1, 2, 0.5), (2, 3, 0.75), (3, 0, 0.125)]).unwrap(),
    ));
    for seed in 0..50 {
        out.push((
            format!("er10/{seed}"),
            generate(GeneratorKind::ErdosRenyi, 10, seed, 10_000).unwrap(),
        ));
    }
    out
}

pub fn scenarios(t: &Topology) -> Vec<FailureScenario> {
    let mut s = vec![FailureScenario::None];
    s.extend(t.links().iter().map(|l| FailureScenario::link(l.u, l.v)));
    s.extend(t.nodes().map(FailureScenario::NodeDown));
    s
}

/// All-pairs distances by Floyd-Warshall over the links that survive `sc`.
pub fn distances(t: &Topology, sc: FailureScenario) -> Vec<Vec<f64>> {
    let n = t.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        if sc.node_alive(v) {
            row[v] = 0.0;
        }
    }
    for l in t.links() {
        if sc.link_alive(l.u, l.v) {
            d[l.u][l.v] = d[l.u][l.v].min(l.weight);
            d[l.v][l.u] = d[l.v][l.u].min(l.weight);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Shortest paths under one failure, with the lexicographically smallest node sequence among
/// equal-weight paths.
pub struct Oracle<'t> {
    t: &'t Topology,
    sc: FailureScenario,
    pub dist: Vec<Vec<f64>>,
}

impl<'t> Oracle<'t> {
    pub fn new(t: &'t Topology, sc: FailureScenario) -> Self {
        Oracle {
            t,
            sc,
            dist: distances(t, sc),
        }
    }

    pub fn path(&self, s: NodeId, d: NodeId) -> Option<Vec<NodeId>> {
        if !self.dist[s][d].is_finite() {
            return None;
        }
        let mut p = vec![s];
        let mut cur = s;
        while cur != d {
            let next = self
                .t
                .neighbors(cur)
                .iter()
                .map(|&(x, l)| (x, self.t.link(l).weight))
                .filter(|&(x, w)| {
                    self.sc.link_alive(cur, x)
                        && self.sc.node_alive(x)
                        && w + self.dist[x][d] == self.dist[cur][d]
                })
                .map(|(x, _)| x)
                .min()
                .expect("a tight arc leaves every node of a shortest path");
            p.push(next);
            cur = next;
        }
        Some(p)
    }
}

pub fn uses_link(path: &[NodeId], a: NodeId, b: NodeId) -> bool {
    path.windows(2)
        .any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
}

pub fn path_weight(t: &Topology, path: &[NodeId]) -> f64 {
    path.windows(2)
        .map(|w| t.weight_between(w[0], w[1]).unwrap())
        .sum()
}

fn join(prefix: &[NodeId], rest: &[NodeId]) -> Vec<NodeId> {
    let mut p = prefix.to_vec();
    p.extend_from_slice(&rest[1..]);
    p
}

/// Precomputed oracles for every single failure of one topology.
pub struct Oracles<'t> {
    pub t: &'t Topology,
    pub intact: Oracle<'t>,
    without_link: Vec<Oracle<'t>>,
    without_node: Vec<Oracle<'t>>,
}

impl<'t> Oracles<'t> {
    pub fn new(t: &'t Topology) -> Self {
        Oracles {
            t,
            intact: Oracle::new(t, FailureScenario::None),
            without_link: t
                .links()
                .iter()
                .map(|l| Oracle::new(t, FailureScenario::link(l.u, l.v)))
                .collect(),
            without_node: t
                .nodes()
                .map(|v| Oracle::new(t, FailureScenario::NodeDown(v)))
                .collect(),
        }
    }

    pub fn minus_link(&self, a: NodeId, b: NodeId) -> &Oracle<'t> {
        &self.without_link[self.t.link_between(a, b).unwrap()]
    }

    pub fn minus_node(&self, v: NodeId) -> &Oracle<'t> {
        &self.without_node[v]
    }

    /// Expected route of the per-link scheme under the loss of link `{a, b}`: the primary path
    /// up to the upstream endpoint, then the shortest path without the link.
    pub fn per_link(&self, s: NodeId, d: NodeId, a: NodeId, b: NodeId) -> Option<Vec<NodeId>> {
        let p = self.intact.path(s, d)?;
        let Some(i) = p
            .windows(2)
            .position(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
        else {
            return Some(p);
        };
        let rest = self.minus_link(a, b).path(p[i], d)?;
        Some(join(&p[..=i], &rest))
    }

    /// Expected route of the per-node scheme when `v` is down: the primary path up to the node
    /// before `v`, then the shortest path without `v`.
    pub fn per_node(&self, s: NodeId, d: NodeId, v: NodeId) -> Option<Vec<NodeId>> {
        if s == v || d == v {
            return None;
        }
        let p = self.intact.path(s, d)?;
        let Some(i) = p.iter().position(|&x| x == v) else {
            return Some(p);
        };
        let rest = self.minus_node(v).path(p[i - 1], d)?;
        Some(join(&p[..i], &rest))
    }

    /// Expected route of the hybrid scheme when `v` is down: the link detour from the node `c`
    /// before `v` is followed until a node whose primary path avoids `v` (the rest is that
    /// primary path) or a node about to forward to `v` (the rest is the shortest path
    /// without `v`).
    pub fn hybrid_node(&self, s: NodeId, d: NodeId, v: NodeId) -> Option<Vec<NodeId>> {
        if s == v || d == v {
            return None;
        }
        let p = self.intact.path(s, d)?;
        let Some(i) = p.iter().position(|&x| x == v) else {
            return Some(p);
        };
        let c = p[i - 1];
        let q = self.minus_link(c, v).path(c, d)?;
        let mut route = p[..i].to_vec();
        for k in 1..q.len() {
            let y = q[k];
            route.push(y);
            if y == d {
                return Some(route);
            }
            let primary = self.intact.path(y, d)?;
            if !primary.contains(&v) {
                return Some(join(&route, &primary));
            }
            if q[k + 1] == v {
                let rest = self.minus_node(v).path(y, d)?;
                return Some(join(&route, &rest));
            }
        }
        unreachable!("the detour ends at the destination")
    }
}

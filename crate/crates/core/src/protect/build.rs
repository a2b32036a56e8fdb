//! Per-link, per-node and hybrid rule computation.

use std::collections::{BTreeMap, BTreeSet};

use super::label::FailureLabel;
use super::matrix::{Action, Bucket, ForwardingMatrix, Match, Mode, Uncovered};
use crate::error::Result;
use crate::graph::{FailureScenario, NodeId, Topology};
use crate::spf::{install_primary, AffectedSets, AllPairs, Spf};

struct Builder<'t> {
    t: &'t Topology,
    spf: Spf<'t>,
    ap: AllPairs,
    affected: AffectedSets,
    fw: ForwardingMatrix,
}

/// A labeled rule at `node` whose next hop is `far_end`; in the hybrid scheme it becomes a
/// failover group that upgrades the label once the node-failure detour is known.
struct Upgrade {
    node: NodeId,
    label: FailureLabel,
    destination: NodeId,
    far_end: NodeId,
}

impl<'t> Builder<'t> {
    fn new(t: &'t Topology, mode: Mode) -> Result<Self> {
        let mut spf = Spf::new(t);
        let ap = spf.all_pairs()?;
        let mut fw = ForwardingMatrix::new(mode, t.node_count());
        install_primary(&mut fw, &ap);
        let affected = ap.affected_sets();
        Ok(Builder {
            t,
            spf,
            ap,
            affected,
            fw,
        })
    }

    fn uncovered(&mut self, node: NodeId, label: FailureLabel, destination: NodeId) {
        self.fw.report.uncovered.push(Uncovered {
            node,
            label,
            destination,
            source: None,
        });
    }

    /// Replaces the primary rule of `n` for `d` by a group that falls back to `backup`.
    fn detector_group(&mut self, n: NodeId, m: NodeId, d: NodeId, backup: Bucket) {
        let g = self
            .fw
            .group_for(n, vec![Bucket::watching(Action::Output(m)), backup]);
        self.fw.set(n, Match::primary(d), Action::GroupRef(g));
    }

    fn link_family(&mut self, hybrid: bool) -> Vec<Upgrade> {
        let mut upgrades = Vec::new();
        for n in self.t.nodes() {
            for &(m, _) in self.t.neighbors(n) {
                let targets = self.affected.get(n, m).to_vec();
                let tree = self
                    .spf
                    .tree(n, FailureScenario::link(n, m), Some(&targets));
                let label = FailureLabel::LinkFail(n, m);
                for &d in &targets {
                    let Some(path) = tree.path(d) else {
                        self.detector_group(n, m, d, Bucket::always(Action::Drop));
                        self.uncovered(n, label, d);
                        continue;
                    };
                    let push = Action::PushLabelOutput(label, path[1]);
                    self.detector_group(n, m, d, Bucket::watching(push));
                    let mut route = path;
                    let mut i = 1;
                    while i + 1 < route.len() {
                        let w = route[i];
                        let mut pop = !self.ap.path_uses_link(w, d, n, m);
                        if hybrid && pop && d == m {
                            // the label is kept up to the far end so that a dead destination
                            // ends in a drop instead of a fresh detection
                            route.truncate(i);
                            route.extend(self.ap.path(w, d));
                            pop = false;
                        } else if hybrid {
                            pop &= !self.ap.path_enters(w, d, m);
                        }
                        let next = route[i + 1];
                        let action = if pop {
                            Action::PopLabelOutput(self.ap.next_hop(w, d).expect("connected"))
                        } else {
                            if hybrid && next == m {
                                upgrades.push(Upgrade {
                                    node: w,
                                    label,
                                    destination: d,
                                    far_end: m,
                                });
                            }
                            Action::Output(next)
                        };
                        self.fw.insert(w, Match::labeled(label, d), action);
                        i += 1;
                    }
                }
            }
        }
        upgrades
    }

    /// Node-failure detours. `extra` adds destinations per `(node, failed neighbor)` beyond the
    /// affected sets. Returns the first detour hop for every computed `(node, failed, dest)`.
    fn node_family(
        &mut self,
        extra: &BTreeMap<(NodeId, NodeId), BTreeSet<NodeId>>,
        detector_groups: bool,
    ) -> BTreeMap<(NodeId, NodeId, NodeId), Option<NodeId>> {
        let mut first_hop = BTreeMap::new();
        for n in self.t.nodes() {
            for &(m, _) in self.t.neighbors(n) {
                let affected = self.affected.get(n, m).to_vec();
                let mut targets: BTreeSet<NodeId> =
                    affected.iter().copied().filter(|&d| d != m).collect();
                if let Some(more) = extra.get(&(n, m)) {
                    targets.extend(more.iter().copied().filter(|&d| d != m));
                }
                let targets: Vec<NodeId> = targets.into_iter().collect();
                let tree = self.spf.tree(n, FailureScenario::node(m), Some(&targets));
                let label = FailureLabel::NodeFail(m);

                if detector_groups {
                    for &d in &affected {
                        match tree.path(d) {
                            Some(path) if d != m => {
                                let push = Action::PushLabelOutput(label, path[1]);
                                self.detector_group(n, m, d, Bucket::watching(push));
                            }
                            _ => {
                                self.detector_group(n, m, d, Bucket::always(Action::Drop));
                                self.uncovered(n, label, d);
                            }
                        }
                    }
                }
                for &d in &targets {
                    let path = tree.path(d);
                    first_hop.insert((n, m, d), path.as_ref().map(|p| p[1]));
                    let Some(path) = path else { continue };
                    for i in 1..path.len() - 1 {
                        let w = path[i];
                        let action = if !self.ap.path_enters(w, d, m) {
                            Action::PopLabelOutput(self.ap.next_hop(w, d).expect("connected"))
                        } else {
                            Action::Output(path[i + 1])
                        };
                        self.fw.insert(w, Match::labeled(label, d), action);
                    }
                }
            }
        }
        first_hop
    }

    fn finish(mut self) -> ForwardingMatrix {
        self.fw.report.spf_runs = self.spf.runs();
        self.fw
    }
}

/// Primary shortest paths plus, for every node and outgoing link, detours around that link.
/// Detoured packets carry `LinkFail(detector, far end)`.
pub fn per_link_rules(t: &Topology) -> Result<ForwardingMatrix> {
    let mut b = Builder::new(t, Mode::PerLink)?;
    b.link_family(false);
    Ok(b.finish())
}

/// Like [`per_link_rules`] but every detour avoids the whole node on the far side of the
/// detected link. Detoured packets carry `NodeFail(far end)`.
pub fn per_node_rules(t: &Topology) -> Result<ForwardingMatrix> {
    let mut b = Builder::new(t, Mode::PerNode)?;
    b.node_family(&BTreeMap::new(), true);
    Ok(b.finish())
}

/// Link-failure detours by default; a detour node that finds its link to the far end dead as
/// well rewrites the label to `NodeFail` and continues on the node-failure detour, or drops the
/// packet when the far end is the destination.
pub fn hybrid_rules(t: &Topology) -> Result<ForwardingMatrix> {
    let mut b = Builder::new(t, Mode::Hybrid)?;
    let upgrades = b.link_family(true);
    let mut extra: BTreeMap<(NodeId, NodeId), BTreeSet<NodeId>> = BTreeMap::new();
    for u in upgrades.iter().filter(|u| u.destination != u.far_end) {
        extra
            .entry((u.node, u.far_end))
            .or_default()
            .insert(u.destination);
    }
    let node_next = b.node_family(&extra, false);
    for u in upgrades {
        let next = node_next
            .get(&(u.node, u.far_end, u.destination))
            .copied()
            .flatten();
        let backup = match next {
            Some(x) => Bucket::watching(Action::RewriteLabelOutput(
                FailureLabel::NodeFail(u.far_end),
                x,
            )),
            None => {
                b.uncovered(u.node, FailureLabel::NodeFail(u.far_end), u.destination);
                Bucket::always(Action::Drop)
            }
        };
        let g = b.fw.group_for(
            u.node,
            vec![Bucket::watching(Action::Output(u.far_end)), backup],
        );
        b.fw.set(
            u.node,
            Match::labeled(u.label, u.destination),
            Action::GroupRef(g),
        );
    }
    Ok(b.finish())
}

//! Rule-table reduction.
//!
//! Labeled rules that no packet can reach (everything downstream of the node that pops the label)
//! are dropped. A detecting node whose detour neighbor would pop the label straight away sends
//! the packet unlabeled instead. In hybrid matrices, link-failure rules that act exactly like the
//! node-failure rule for the same far end are folded into one `{*, v}` wildcard rule. Finally,
//! remaining labeled rules are dropped or folded one at a time wherever the primary rule (which
//! also matches labeled packets) or the new wildcard gives every affected packet the same route.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::label::{FailureLabel, LabelMatch};
use super::matrix::{Action, ForwardingMatrix, InPort, Match, Mode};
use crate::dataplane::{simulate, Outcome};
use crate::graph::{FailureScenario, NodeId, Topology};

type State = (NodeId, FailureLabel, NodeId);

fn expand(fw: &ForwardingMatrix, a: &Action) -> Vec<Action> {
    match a {
        Action::GroupRef(g) => fw
            .group(*g)
            .map(|e| e.buckets.iter().map(|b| b.action).collect())
            .unwrap_or_default(),
        other => vec![*other],
    }
}

struct Reach {
    /// Labeled rules some packet can match.
    used: BTreeSet<(NodeId, Match)>,
    /// Labeled states that only the primary rule matches.
    fallback: BTreeSet<State>,
}

/// Explores every `(node, label, destination)` a labeled packet can occupy, over all bucket
/// choices, starting from each push or rewrite in the matrix.
fn reach(fw: &ForwardingMatrix) -> Reach {
    let mut stack: Vec<State> = Vec::new();
    let seed = |stack: &mut Vec<State>, a: &Action, d: NodeId| match *a {
        Action::PushLabelOutput(l, z) | Action::RewriteLabelOutput(l, z) => stack.push((z, l, d)),
        _ => {}
    };
    for (_, m, a) in fw.rules() {
        for act in expand(fw, a) {
            seed(&mut stack, &act, m.destination);
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Reach {
        used: BTreeSet::new(),
        fallback: BTreeSet::new(),
    };
    while let Some(state @ (node, label, d)) = stack.pop() {
        if node == d || !seen.insert(state) {
            continue;
        }
        let Some((m, a)) = fw.lookup(node, label, d, node, InPort::Host) else {
            continue;
        };
        if m.label.is_primary() {
            out.fallback.insert(state);
        } else {
            out.used.insert((node, m));
        }
        for act in expand(fw, &a) {
            match act {
                Action::Output(z) => stack.push((z, label, d)),
                Action::PushLabelOutput(l, z) | Action::RewriteLabelOutput(l, z) => {
                    stack.push((z, l, d))
                }
                Action::PopLabelOutput(_) | Action::Drop | Action::GroupRef(_) => {}
            }
        }
    }
    out
}

/// Returns a reduced copy of `fw`. Forwarding behavior is unchanged for every packet and
/// scenario, and the rule count never grows. Matrices of other modes are returned as is.
pub fn optimize(fw: &ForwardingMatrix, t: &Topology) -> ForwardingMatrix {
    let mut out = fw.clone();
    if !fw.mode().is_failure_disjoint() {
        return out;
    }
    let r = prune(&mut out);
    unlabel_detours(&mut out, &r.fallback);
    let r = prune(&mut out);
    if fw.mode() == Mode::Hybrid {
        fold_wildcards(&mut out, &r.fallback);
    }
    let mut routes = Routes::default();
    while drop_redundant_labeled(&mut out, t, &mut routes) | fold_verified(&mut out, t, &mut routes)
    {
    }
    out.compact_groups();
    out
}

fn prune(fw: &mut ForwardingMatrix) -> Reach {
    let r = reach(fw);
    let dead: Vec<(NodeId, Match)> = fw
        .rules()
        .filter(|(n, m, _)| !m.label.is_primary() && !r.used.contains(&(*n, **m)))
        .map(|(n, m, _)| (n, *m))
        .collect();
    for (n, m) in dead {
        fw.remove(n, &m);
    }
    r
}

/// Neighbor the primary rule of `node` for `d` sends to under `sc`.
fn primary_out(
    fw: &ForwardingMatrix,
    node: NodeId,
    d: NodeId,
    sc: FailureScenario,
) -> Option<NodeId> {
    match fw.get(node, &Match::primary(d))? {
        Action::Output(z) => Some(*z),
        Action::GroupRef(g) => {
            let b = fw.group(*g)?.buckets.iter().find(|b| match b.watch {
                Some(w) => sc.link_alive(node, w),
                None => true,
            })?;
            match b.action {
                Action::Output(z) => Some(z),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Replaces `push l, output y` by a plain `output y` in a primary group when `y` pops `l` and its
/// own primary rule sends the packet to the same neighbor in every scenario that activates the
/// bucket.
fn unlabel_detours(fw: &mut ForwardingMatrix, fallback: &BTreeSet<State>) {
    let candidates: Vec<(NodeId, Match, usize)> = fw
        .rules()
        .filter_map(|(n, m, a)| match a {
            Action::GroupRef(g) if m.label.is_primary() && m.source.is_none() => Some((n, *m, *g)),
            _ => None,
        })
        .collect();
    for (n, m, g) in candidates {
        let d = m.destination;
        if fallback.iter().any(|&(sn, _, sd)| sn == n && sd == d) {
            continue;
        }
        let mut buckets = fw.group(g).expect("resolved group").buckets.clone();
        let mut changed = false;
        for i in 1..buckets.len() {
            let Action::PushLabelOutput(l, y) = buckets[i].action else {
                continue;
            };
            let Some(&Action::PopLabelOutput(z)) = fw.get(y, &Match::labeled(l, d)) else {
                continue;
            };
            // single failures that kill every earlier bucket
            let Some(w) = buckets[0].watch else { continue };
            let scenarios = [FailureScenario::link(n, w), FailureScenario::node(w)];
            let same = scenarios
                .iter()
                .filter(|sc| {
                    buckets[..i]
                        .iter()
                        .all(|b| b.watch.is_some_and(|x| !sc.link_alive(n, x)))
                })
                .all(|&sc| {
                    sc.link_alive(n, y)
                        && sc.link_alive(y, z)
                        && primary_out(fw, y, d, sc) == Some(z)
                });
            if same {
                buckets[i].action = Action::Output(y);
                changed = true;
            }
        }
        if changed {
            let ng = fw.group_for(n, buckets);
            fw.set(n, m, Action::GroupRef(ng));
        }
    }
}

/// Single failures under which a packet matching `label` can exist.
fn label_scenarios(t: &Topology, label: LabelMatch) -> Vec<FailureScenario> {
    match label {
        LabelMatch::Exact(FailureLabel::Primary) => vec![],
        LabelMatch::Exact(FailureLabel::LinkFail(u, v)) => {
            vec![FailureScenario::link(u, v), FailureScenario::node(v)]
        }
        LabelMatch::Exact(FailureLabel::NodeFail(v)) | LabelMatch::AnyTo(v) => {
            let mut s: Vec<_> = t
                .neighbors(v)
                .iter()
                .map(|&(u, _)| FailureScenario::link(u, v))
                .collect();
            s.push(FailureScenario::node(v));
            s
        }
    }
}

type Route = (Vec<NodeId>, Outcome);

/// Routes of packets towards one destination under the failures that can create a label,
/// recorded before any change so that every later change is compared with the original matrix.
#[derive(Default)]
struct Routes(HashMap<(FailureScenario, NodeId, NodeId), Route>);

impl Routes {
    fn cases(t: &Topology, label: LabelMatch, d: NodeId) -> Vec<(FailureScenario, NodeId)> {
        label_scenarios(t, label)
            .into_iter()
            .flat_map(|sc| t.nodes().filter(move |&s| s != d).map(move |s| (sc, s)))
            .collect()
    }

    fn route(
        fw: &ForwardingMatrix,
        t: &Topology,
        sc: FailureScenario,
        s: NodeId,
        d: NodeId,
    ) -> Route {
        let tr = simulate(fw, t, sc, s, d).expect("validated matrix");
        (tr.nodes(), tr.outcome)
    }

    fn record(&mut self, fw: &ForwardingMatrix, t: &Topology, label: LabelMatch, d: NodeId) {
        for (sc, s) in Self::cases(t, label, d) {
            self.0
                .entry((sc, s, d))
                .or_insert_with(|| Self::route(fw, t, sc, s, d));
        }
    }

    fn unchanged(&self, fw: &ForwardingMatrix, t: &Topology, label: LabelMatch, d: NodeId) -> bool {
        Self::cases(t, label, d)
            .into_iter()
            .all(|(sc, s)| Self::route(fw, t, sc, s, d) == self.0[&(sc, s, d)])
    }
}

/// Drops labeled rules one at a time, keeping a removal only when every packet towards the
/// rule's destination still takes the same route under every failure that can create the
/// rule's label.
fn drop_redundant_labeled(fw: &mut ForwardingMatrix, t: &Topology, routes: &mut Routes) -> bool {
    let mut changed = false;
    let candidates: Vec<(NodeId, Match)> = fw
        .rules()
        .filter(|(_, m, a)| {
            !m.label.is_primary()
                && m.source.is_none()
                && m.in_port.is_none()
                && !matches!(a, Action::Drop)
        })
        .map(|(w, m, _)| (w, *m))
        .collect();
    for (w, m) in candidates {
        routes.record(fw, t, m.label, m.destination);
        let Some(action) = fw.remove(w, &m) else {
            continue;
        };
        if routes.unchanged(fw, t, m.label, m.destination) {
            changed = true;
        } else {
            fw.set(w, m, action);
        }
    }
    changed
}

/// Replaces exact labeled rules that share node, destination, far end and action by one
/// `{*, v}` rule, under the same route check.
fn fold_verified(fw: &mut ForwardingMatrix, t: &Topology, routes: &mut Routes) -> bool {
    let mut changed = false;
    let mut cells: BTreeMap<(NodeId, NodeId, NodeId, Action), Vec<Match>> = BTreeMap::new();
    for (w, m, a) in fw.rules() {
        if m.source.is_some() || m.in_port.is_some() {
            continue;
        }
        if let LabelMatch::Exact(l) = m.label {
            if let Some(v) = l.far_end() {
                cells.entry((w, m.destination, v, *a)).or_default().push(*m);
            }
        }
    }
    for ((w, d, v, action), ms) in cells {
        let wild = Match::wildcard(v, d);
        if ms.len() < 2 || fw.get(w, &wild).is_some() {
            continue;
        }
        routes.record(fw, t, LabelMatch::AnyTo(v), d);
        for m in &ms {
            fw.remove(w, m);
        }
        fw.set(w, wild, action);
        if routes.unchanged(fw, t, LabelMatch::AnyTo(v), d) {
            changed = true;
        } else {
            fw.remove(w, &wild);
            for m in ms {
                fw.set(w, m, action);
            }
        }
    }
    changed
}

/// Node-failure action and link-failure rules of one `(node, destination, far end)`.
type Cell = (Option<Action>, Vec<(Match, Action)>);

fn fold_wildcards(fw: &mut ForwardingMatrix, fallback: &BTreeSet<State>) {
    let mut cells: BTreeMap<(NodeId, NodeId, NodeId), Cell> = BTreeMap::new();
    for (n, m, a) in fw.rules() {
        match m.label {
            LabelMatch::Exact(FailureLabel::NodeFail(v)) => {
                cells.entry((n, m.destination, v)).or_default().0 = Some(*a);
            }
            LabelMatch::Exact(FailureLabel::LinkFail(_, v)) => {
                cells
                    .entry((n, m.destination, v))
                    .or_default()
                    .1
                    .push((*m, *a));
            }
            _ => {}
        }
    }
    let shadowed = |n: NodeId, d: NodeId, v: NodeId| {
        fallback
            .iter()
            .any(|&(sn, l, sd)| sn == n && sd == d && l.far_end() == Some(v))
    };
    for ((n, d, v), (node_action, links)) in cells {
        let Some(action) = node_action else { continue };
        let same: Vec<Match> = links
            .iter()
            .filter(|(_, a)| *a == action)
            .map(|(m, _)| *m)
            .collect();
        if same.is_empty() || shadowed(n, d, v) {
            continue;
        }
        for m in &same {
            fw.remove(n, m);
        }
        fw.remove(n, &Match::labeled(FailureLabel::NodeFail(v), d));
        fw.set(n, Match::wildcard(v, d), action);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Topology;
    use crate::protect::{hybrid_rules, per_link_rules, per_node_rules};

    fn square() -> Topology {
        Topology::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap()
    }

    #[test]
    fn never_grows_and_keeps_primaries() {
        let t = square();
        for fw in [
            per_link_rules(&t).unwrap(),
            per_node_rules(&t).unwrap(),
            hybrid_rules(&t).unwrap(),
        ] {
            let opt = optimize(&fw, &t);
            assert!(opt.len() <= fw.len());
            let primaries =
                |f: &ForwardingMatrix| f.rules().filter(|(_, m, _)| m.label.is_primary()).count();
            assert_eq!(primaries(&opt), primaries(&fw));
            assert_eq!(primaries(&opt), 12);
            opt.validate(&t).unwrap();
        }
    }

    #[test]
    fn prunes_rules_past_the_pop_point() {
        // ring of six: the detour for LinkFail(0,1) towards 2 is 0-5-4-3-2; node 5 still routes
        // back over 0, node 4 does not, so the rule at 3 is never used and the pop at 4 can be
        // left to the primary rule
        let t = Topology::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 0, 1.0),
            ],
        )
        .unwrap();
        let fw = per_link_rules(&t).unwrap();
        let opt = optimize(&fw, &t);
        let l = FailureLabel::LinkFail(0, 1);
        assert_eq!(fw.get(5, &Match::labeled(l, 2)), Some(&Action::Output(4)));
        assert_eq!(
            fw.get(4, &Match::labeled(l, 2)),
            Some(&Action::PopLabelOutput(3))
        );
        assert!(fw.get(3, &Match::labeled(l, 2)).is_some());
        assert!(opt.get(3, &Match::labeled(l, 2)).is_none());
        assert!(opt.get(4, &Match::labeled(l, 2)).is_none());
        assert_eq!(opt.get(5, &Match::labeled(l, 2)), Some(&Action::Output(4)));
        assert!(opt.len() < fw.len());
    }

    #[test]
    fn other_modes_are_untouched() {
        let t = square();
        let (fw, _) = crate::spf::all_to_all(&t).unwrap();
        assert_eq!(optimize(&fw, &t), fw);
    }
}

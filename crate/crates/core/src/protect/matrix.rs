//! The forwarding matrix: per-node rule tables keyed by `(match)`, plus fast-failover groups.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::label::{FailureLabel, LabelMatch};
use crate::error::{Error, Result};
use crate::graph::{NodeId, Topology};

pub type GroupId = usize;

/// Incoming port of a packet: the local host port or the link from a neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InPort {
    Host,
    From(NodeId),
}

impl fmt::Display for InPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InPort::Host => write!(f, "host"),
            InPort::From(n) => write!(f, "{n}"),
        }
    }
}

/// Match part of a rule. `source` and `in_port` are wildcards when `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Match {
    pub destination: NodeId,
    pub label: LabelMatch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_port: Option<InPort>,
}

impl Match {
    pub fn primary(destination: NodeId) -> Self {
        Self::labeled(FailureLabel::Primary, destination)
    }

    pub fn labeled(label: FailureLabel, destination: NodeId) -> Self {
        Match {
            destination,
            label: LabelMatch::Exact(label),
            source: None,
            in_port: None,
        }
    }

    pub fn wildcard(far_end: NodeId, destination: NodeId) -> Self {
        Match {
            destination,
            label: LabelMatch::AnyTo(far_end),
            source: None,
            in_port: None,
        }
    }

    /// Per-pair match used by the disjoint-path baseline.
    pub fn flow(source: NodeId, destination: NodeId, in_port: InPort) -> Self {
        Match {
            destination,
            label: LabelMatch::Exact(FailureLabel::Primary),
            source: Some(source),
            in_port: Some(in_port),
        }
    }
}

impl fmt::Display for Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dst={} label={}", self.destination, self.label)?;
        if let Some(s) = self.source {
            write!(f, " src={s}")?;
        }
        if let Some(p) = self.in_port {
            write!(f, " in={p}")?;
        }
        Ok(())
    }
}

/// Forwarding action. Output targets are named by the neighbor the link leads to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Output(NodeId),
    PushLabelOutput(FailureLabel, NodeId),
    PopLabelOutput(NodeId),
    RewriteLabelOutput(FailureLabel, NodeId),
    GroupRef(GroupId),
    Drop,
}

impl Action {
    /// Neighbor the packet is sent to, if any.
    pub fn out(&self) -> Option<NodeId> {
        match *self {
            Action::Output(n)
            | Action::PushLabelOutput(_, n)
            | Action::PopLabelOutput(n)
            | Action::RewriteLabelOutput(_, n) => Some(n),
            Action::GroupRef(_) | Action::Drop => None,
        }
    }

    /// Label after applying the action to a packet carrying `label`.
    pub fn label_after(&self, label: FailureLabel) -> FailureLabel {
        match *self {
            Action::PushLabelOutput(l, _) | Action::RewriteLabelOutput(l, _) => l,
            Action::PopLabelOutput(_) => FailureLabel::Primary,
            _ => label,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Output(n) => write!(f, "output {n}"),
            Action::PushLabelOutput(l, n) => write!(f, "push {l} output {n}"),
            Action::PopLabelOutput(n) => write!(f, "pop output {n}"),
            Action::RewriteLabelOutput(l, n) => write!(f, "rewrite {l} output {n}"),
            Action::GroupRef(g) => write!(f, "group {g}"),
            Action::Drop => write!(f, "drop"),
        }
    }
}

/// Fast-failover bucket. A bucket without a watched link is always live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bucket {
    pub watch: Option<NodeId>,
    pub action: Action,
}

impl Bucket {
    /// Bucket watching the link its action outputs on.
    pub fn watching(action: Action) -> Self {
        Bucket {
            watch: action.out(),
            action,
        }
    }

    pub fn always(action: Action) -> Self {
        Bucket {
            watch: None,
            action,
        }
    }
}

/// Fast-failover group: the first bucket whose watched link is live fires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub id: GroupId,
    pub node: NodeId,
    pub buckets: Vec<Bucket>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disjointness {
    Link,
    Node,
}

/// Which computation produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Primary rules only.
    ShortestPath,
    PerLink,
    PerNode,
    Hybrid,
    /// Min-sum disjoint pairs with crankback.
    DisjointBaseline(Disjointness),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::ShortestPath => "shortest-path",
            Mode::PerLink => "per-link",
            Mode::PerNode => "per-node",
            Mode::Hybrid => "hybrid",
            Mode::DisjointBaseline(Disjointness::Link) => "disjoint-link",
            Mode::DisjointBaseline(Disjointness::Node) => "disjoint-node",
        }
    }

    pub fn is_failure_disjoint(&self) -> bool {
        matches!(self, Mode::PerLink | Mode::PerNode | Mode::Hybrid)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "shortest-path" => Mode::ShortestPath,
            "per-link" | "link-failure" => Mode::PerLink,
            "per-node" | "node-failure" => Mode::PerNode,
            "hybrid" | "hybrid-failure" => Mode::Hybrid,
            "disjoint-link" => Mode::DisjointBaseline(Disjointness::Link),
            "disjoint-node" => Mode::DisjointBaseline(Disjointness::Node),
            _ => {
                return Err(Error::Syntax {
                    what: "variant",
                    input: s.to_string(),
                })
            }
        })
    }
}

/// A `(failure, destination)` case that no backup rule can deliver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Uncovered {
    /// Node that would have to forward the detoured packet.
    pub node: NodeId,
    pub label: FailureLabel,
    pub destination: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
}

/// Bookkeeping collected while building a matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    /// One-to-many shortest-path computations performed.
    pub spf_runs: usize,
    pub uncovered: Vec<Uncovered>,
    /// Insertions that disagreed with an existing rule for the same match (first one kept).
    pub conflicts: usize,
}

/// Primary and backup rules for every node, indexed by `(node, match)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardingMatrix {
    mode: Mode,
    node_count: usize,
    rules: BTreeMap<(NodeId, Match), Action>,
    groups: Vec<GroupEntry>,
    group_ids: HashMap<(NodeId, Vec<Bucket>), GroupId>,
    pub report: BuildReport,
}

impl ForwardingMatrix {
    pub fn new(mode: Mode, node_count: usize) -> Self {
        ForwardingMatrix {
            mode,
            node_count,
            rules: BTreeMap::new(),
            groups: Vec::new(),
            group_ids: HashMap::new(),
            report: BuildReport::default(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of flow entries.
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Flow entries whose action forwards to a group.
    pub fn group_forwarding_entries(&self) -> usize {
        self.rules
            .values()
            .filter(|a| matches!(a, Action::GroupRef(_)))
            .count()
    }

    pub fn distinct_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn rules(&self) -> impl Iterator<Item = (NodeId, &Match, &Action)> {
        self.rules.iter().map(|((n, m), a)| (*n, m, a))
    }

    pub fn groups(&self) -> &[GroupEntry] {
        &self.groups
    }

    pub fn group(&self, id: GroupId) -> Option<&GroupEntry> {
        self.groups.get(id)
    }

    pub fn get(&self, node: NodeId, m: &Match) -> Option<&Action> {
        self.rules.get(&(node, *m))
    }

    /// Inserts a rule unless one already exists for the same match. A differing existing rule
    /// is kept and counted as a conflict. Returns whether the rule was inserted.
    pub fn insert(&mut self, node: NodeId, m: Match, action: Action) -> bool {
        match self.rules.get(&(node, m)) {
            Some(existing) => {
                if *existing != action {
                    self.report.conflicts += 1;
                }
                false
            }
            None => {
                self.rules.insert((node, m), action);
                true
            }
        }
    }

    /// Inserts or replaces a rule.
    pub fn set(&mut self, node: NodeId, m: Match, action: Action) {
        self.rules.insert((node, m), action);
    }

    pub fn remove(&mut self, node: NodeId, m: &Match) -> Option<Action> {
        self.rules.remove(&(node, *m))
    }

    /// Returns the id of the group `(node, buckets)`, creating it if needed. Identical groups at
    /// one node are shared.
    pub fn group_for(&mut self, node: NodeId, buckets: Vec<Bucket>) -> GroupId {
        if let Some(&id) = self.group_ids.get(&(node, buckets.clone())) {
            return id;
        }
        let id = self.groups.len();
        self.groups.push(GroupEntry {
            id,
            node,
            buckets: buckets.clone(),
        });
        self.group_ids.insert((node, buckets), id);
        id
    }

    /// Rule applied at `node` to a packet, by decreasing specificity: exact label with source and
    /// incoming port, exact label with source, exact label, wildcard `{*, v}`, then the primary
    /// rule for the destination.
    pub fn lookup(
        &self,
        node: NodeId,
        label: FailureLabel,
        destination: NodeId,
        source: NodeId,
        in_port: InPort,
    ) -> Option<(Match, Action)> {
        let exact = LabelMatch::Exact(label);
        let mut candidates = vec![
            Match {
                destination,
                label: exact,
                source: Some(source),
                in_port: Some(in_port),
            },
            Match {
                destination,
                label: exact,
                source: Some(source),
                in_port: None,
            },
            Match {
                destination,
                label: exact,
                source: None,
                in_port: None,
            },
        ];
        if let Some(v) = label.far_end() {
            candidates.push(Match::wildcard(v, destination));
        }
        if !label.is_primary() {
            candidates.push(Match::primary(destination));
        }
        candidates
            .into_iter()
            .find_map(|m| self.rules.get(&(node, m)).map(|a| (m, *a)))
    }

    /// Rebuilds the group table keeping only groups referenced by rules, renumbered in rule
    /// order.
    pub(crate) fn compact_groups(&mut self) {
        let old = std::mem::take(&mut self.groups);
        self.group_ids.clear();
        let refs: Vec<_> = self
            .rules
            .iter()
            .filter_map(|(k, a)| match a {
                Action::GroupRef(g) => Some((*k, *g)),
                _ => None,
            })
            .collect();
        for (key, g) in refs {
            let entry = &old[g];
            let id = self.group_for(entry.node, entry.buckets.clone());
            self.rules.insert(key, Action::GroupRef(id));
        }
    }

    /// Structural checks against the topology the matrix was built for.
    pub fn validate(&self, t: &Topology) -> Result<()> {
        let err = |m: String| Err(Error::InvalidMatrix(m));
        if self.node_count != t.node_count() {
            return err(format!(
                "matrix has {} nodes, topology {}",
                self.node_count,
                t.node_count()
            ));
        }
        let check_out = |node: NodeId, a: &Action| -> Result<()> {
            if let Some(n) = a.out() {
                if t.link_between(node, n).is_none() {
                    return Err(Error::InvalidMatrix(format!(
                        "node {node} outputs towards non-neighbor {n}"
                    )));
                }
            }
            Ok(())
        };
        for ((node, m), a) in &self.rules {
            if *node >= self.node_count || m.destination >= self.node_count {
                return err(format!("rule at {node} references unknown node"));
            }
            match a {
                Action::GroupRef(g) => match self.groups.get(*g) {
                    Some(entry) if entry.node == *node => {}
                    _ => return err(format!("node {node}: group {g} does not resolve")),
                },
                Action::PushLabelOutput(..) if !m.label.is_primary() => {
                    return err(format!("node {node}: push on labeled match {m}"))
                }
                Action::PopLabelOutput(_) if m.label.is_primary() => {
                    return err(format!("node {node}: pop on primary match {m}"))
                }
                _ => {}
            }
            check_out(*node, a)?;
        }
        for g in &self.groups {
            if g.buckets.len() < 2 {
                return err(format!("group {} has fewer than two buckets", g.id));
            }
            for b in &g.buckets {
                if matches!(b.action, Action::GroupRef(_)) {
                    return err(format!("group {} nests another group", g.id));
                }
                if let Some(w) = b.watch {
                    if t.link_between(g.node, w).is_none() {
                        return err(format!("group {} watches a foreign link", g.id));
                    }
                }
                check_out(g.node, &b.action)?;
            }
        }
        Ok(())
    }

    /// Sorted, line-oriented dump: rules first, then groups.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode {} nodes {}", self.mode, self.node_count);
        for ((node, m), a) in &self.rules {
            let _ = writeln!(out, "rule {node} {m} => {a}");
        }
        for g in &self.groups {
            let _ = write!(out, "group {} node {}", g.id, g.node);
            for b in &g.buckets {
                match b.watch {
                    Some(w) => {
                        let _ = write!(out, " [watch {w}: {}]", b.action);
                    }
                    None => {
                        let _ = write!(out, " [always: {}]", b.action);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let file = MatrixFile {
            mode: self.mode,
            node_count: self.node_count,
            rules: self
                .rules
                .iter()
                .map(|((node, m), a)| RuleRecord {
                    node: *node,
                    matches: *m,
                    action: *a,
                })
                .collect(),
            groups: self.groups.clone(),
            report: self.report.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text)?;
        let mut fw = ForwardingMatrix::new(file.mode, file.node_count);
        for (i, g) in file.groups.into_iter().enumerate() {
            if g.id != i {
                return Err(Error::InvalidMatrix(format!(
                    "group ids out of order at {i}"
                )));
            }
            let id = fw.group_for(g.node, g.buckets);
            if id != i {
                return Err(Error::InvalidMatrix(format!("duplicate group {i}")));
            }
        }
        for r in file.rules {
            if fw.rules.insert((r.node, r.matches), r.action).is_some() {
                return Err(Error::InvalidMatrix(format!(
                    "duplicate rule at node {} for {}",
                    r.node, r.matches
                )));
            }
            if let Action::GroupRef(g) = r.action {
                if g >= fw.groups.len() {
                    return Err(Error::InvalidMatrix(format!("unknown group {g}")));
                }
            }
        }
        fw.report = file.report;
        Ok(fw)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct RuleRecord {
    node: NodeId,
    #[serde(rename = "match")]
    matches: Match,
    action: Action,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    mode: Mode,
    node_count: usize,
    rules: Vec<RuleRecord>,
    groups: Vec<GroupEntry>,
    #[serde(default)]
    report: BuildReport,
}

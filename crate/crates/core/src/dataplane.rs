//! Packet-level simulation of a forwarding matrix under a single failure.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FailureScenario, NodeId, Topology};
use crate::protect::{Action, FailureLabel, ForwardingMatrix, InPort, Match, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// The matched rule (or the selected bucket) is an explicit drop.
    DropRule,
    NoRule,
    /// Every bucket of the group watches a dead link.
    NoLiveBucket,
    /// The selected output link is down.
    DeadLink,
    /// The packet sits on a failed node.
    DeadNode,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::DropRule => "drop-rule",
            DropReason::NoRule => "no-rule",
            DropReason::NoLiveBucket => "no-live-bucket",
            DropReason::DeadLink => "dead-link",
            DropReason::DeadNode => "dead-node",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Delivered,
    Dropped(DropReason),
    /// A forwarding state repeated.
    Loop,
}

impl Outcome {
    pub fn is_delivered(&self) -> bool {
        matches!(self, Outcome::Delivered)
    }
}

/// One forwarding decision: the node, the rule it matched, the label the packet leaves with and
/// the neighbor it is sent to (`None` at the last step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub node: NodeId,
    pub rule: Option<Match>,
    pub label: FailureLabel,
    pub next: Option<NodeId>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub total_weight: f64,
    pub crankback_weight: f64,
}

impl Trace {
    pub fn delivered(&self) -> bool {
        self.outcome.is_delivered()
    }

    /// Visited nodes in order, the final node included.
    pub fn nodes(&self) -> Vec<NodeId> {
        self.steps.iter().map(|s| s.node).collect()
    }

    /// `node label link weight` per step plus a summary line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let link = match s.next {
                Some(n) => format!("{}-{}", s.node, n),
                None => "-".to_string(),
            };
            let _ = writeln!(out, "{} {} {} {}", s.node, s.label, link, s.weight);
        }
        let status = match self.outcome {
            Outcome::Delivered => "delivered".to_string(),
            Outcome::Dropped(r) => format!("dropped({r})"),
            Outcome::Loop => "loop".to_string(),
        };
        let _ = writeln!(
            out,
            "{status} total={} crankback={}",
            self.total_weight, self.crankback_weight
        );
        out
    }
}

/// Summed weight of the links that a trace crosses in the reverse direction of an earlier
/// crossing.
pub fn crankback_of(trace: &Trace) -> f64 {
    let mut seen = HashSet::new();
    let mut total = 0.0;
    for s in &trace.steps {
        if let Some(n) = s.next {
            if seen.contains(&(n, s.node)) {
                total += s.weight;
            }
            seen.insert((s.node, n));
        }
    }
    total
}

/// Forwards one packet from `src` to `dst` through `fw` with `scenario` applied.
pub fn simulate(
    fw: &ForwardingMatrix,
    t: &Topology,
    scenario: FailureScenario,
    src: NodeId,
    dst: NodeId,
) -> Result<Trace> {
    t.check_node(src)?;
    t.check_node(dst)?;
    if src == dst {
        return Err(Error::SameEndpoints(src));
    }
    let per_port = matches!(fw.mode(), Mode::DisjointBaseline(_));
    let mut seen = HashSet::new();
    let mut steps = Vec::new();
    let (mut node, mut label, mut in_port) = (src, FailureLabel::Primary, InPort::Host);
    let outcome = loop {
        if node == dst {
            steps.push(terminal(node, None, label));
            break Outcome::Delivered;
        }
        if !scenario.node_alive(node) {
            steps.push(terminal(node, None, label));
            break Outcome::Dropped(DropReason::DeadNode);
        }
        let port_key = if per_port { Some(in_port) } else { None };
        if !seen.insert((node, label, port_key)) {
            steps.push(terminal(node, None, label));
            break Outcome::Loop;
        }
        let Some((rule, action)) = fw.lookup(node, label, dst, src, in_port) else {
            steps.push(terminal(node, None, label));
            break Outcome::Dropped(DropReason::NoRule);
        };
        let action = match action {
            Action::GroupRef(g) => {
                let group = fw
                    .group(g)
                    .ok_or_else(|| Error::InvalidMatrix(format!("unknown group {g}")))?;
                let live = group.buckets.iter().find(|b| match b.watch {
                    Some(w) => scenario.link_alive(node, w),
                    None => true,
                });
                match live {
                    Some(b) => b.action,
                    None => {
                        steps.push(terminal(node, Some(rule), label));
                        break Outcome::Dropped(DropReason::NoLiveBucket);
                    }
                }
            }
            a => a,
        };
        let Some(next) = action.out() else {
            steps.push(terminal(node, Some(rule), label));
            break Outcome::Dropped(DropReason::DropRule);
        };
        label = action.label_after(label);
        let weight = t.weight_between(node, next).ok_or_else(|| {
            Error::InvalidMatrix(format!("node {node} forwards to non-neighbor {next}"))
        })?;
        if !scenario.link_alive(node, next) {
            steps.push(terminal(node, Some(rule), label));
            break Outcome::Dropped(DropReason::DeadLink);
        }
        steps.push(Step {
            node,
            rule: Some(rule),
            label,
            next: Some(next),
            weight,
        });
        in_port = InPort::From(node);
        node = next;
    };
    let mut trace = Trace {
        total_weight: steps.iter().map(|s| s.weight).sum(),
        steps,
        outcome,
        crankback_weight: 0.0,
    };
    trace.crankback_weight = crankback_of(&trace);
    Ok(trace)
}

fn terminal(node: NodeId, rule: Option<Match>, label: FailureLabel) -> Step {
    Step {
        node,
        rule,
        label,
        next: None,
        weight: 0.0,
    }
}

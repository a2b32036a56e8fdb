//! Evaluation harness: rule-table and path-quality metrics for one matrix, and seeded
//! experiments over generated topologies.

mod config;
mod experiment;

pub use config::{ExperimentConfig, Preset};
pub use experiment::{run_experiment, Report, RunRecord, SkippedRun, CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::baseline::disjoint_rules;
use crate::dataplane::{simulate, Outcome};
use crate::error::Result;
use crate::graph::{FailureScenario, NodeId, Topology};
use crate::protect::{
    hybrid_rules, optimize, per_link_rules, per_node_rules, Disjointness, ForwardingMatrix, Mode,
};
use crate::spf::{all_to_all, floyd_warshall_oracle};

/// The five configurations compared by the harness.
pub const VARIANTS: [Mode; 5] = [
    Mode::PerLink,
    Mode::PerNode,
    Mode::Hybrid,
    Mode::DisjointBaseline(Disjointness::Link),
    Mode::DisjointBaseline(Disjointness::Node),
];

/// Builds the matrix for `mode`. Failure-disjoint matrices are optimized when `optimized`.
pub fn build_matrix(t: &Topology, mode: Mode, optimized: bool) -> Result<ForwardingMatrix> {
    let fw = match mode {
        Mode::ShortestPath => all_to_all(t)?.0,
        Mode::PerLink => per_link_rules(t)?,
        Mode::PerNode => per_node_rules(t)?,
        Mode::Hybrid => hybrid_rules(t)?,
        Mode::DisjointBaseline(v) => disjoint_rules(t, v)?,
    };
    Ok(if optimized { optimize(&fw, t) } else { fw })
}

/// Which failures a variant is exercised with along each primary path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Every link of the primary path.
    Links,
    /// Every intermediate node of the primary path.
    Nodes,
}

impl FailureKind {
    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::PerNode | Mode::Hybrid | Mode::DisjointBaseline(Disjointness::Node) => {
                FailureKind::Nodes
            }
            _ => FailureKind::Links,
        }
    }

    /// Failures on `path` (a node sequence from source to destination).
    pub fn on_path(self, path: &[NodeId]) -> Vec<FailureScenario> {
        match self {
            FailureKind::Links => path
                .windows(2)
                .map(|w| FailureScenario::link(w[0], w[1]))
                .collect(),
            FailureKind::Nodes => {
                let inner = path.get(1..path.len().saturating_sub(1)).unwrap_or(&[]);
                inner.iter().map(|&v| FailureScenario::node(v)).collect()
            }
        }
    }
}

/// Metrics of one matrix on one topology. Ratios are relative to the shortest distance in the
/// intact topology.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub flow_entries: f64,
    pub group_fwd_entries: f64,
    pub distinct_groups: f64,
    pub primary_ratio: f64,
    /// Mean over pairs of the mean, minimum and maximum backup ratio over on-path failures.
    pub backup_avg: f64,
    pub backup_min: f64,
    pub backup_max: f64,
    pub crankback_avg: f64,
    pub crankback_max: f64,
    /// `|N|(|N|-1)`.
    pub base_entries: f64,
    pub additional_entries: f64,
    /// Pairs without a delivered primary path.
    pub uncovered_pairs: f64,
    /// `(failure, pair)` cases that were not delivered.
    pub uncovered_cases: f64,
    pub loops: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn ratio(w: f64, shortest: f64) -> f64 {
    if shortest > 0.0 {
        w / shortest
    } else {
        1.0
    }
}

/// Simulates every ordered pair without failure and under every failure of the kind matching
/// the matrix mode along the pair's primary path.
pub fn measure(fw: &ForwardingMatrix, t: &Topology) -> Result<Metrics> {
    measure_with(fw, t, FailureKind::for_mode(fw.mode()))
}

pub fn measure_with(fw: &ForwardingMatrix, t: &Topology, kind: FailureKind) -> Result<Metrics> {
    let oracle = floyd_warshall_oracle(t);
    let n = t.node_count();
    let base = (n * n.saturating_sub(1)) as f64;
    let mut m = Metrics {
        flow_entries: fw.len() as f64,
        group_fwd_entries: fw.group_forwarding_entries() as f64,
        distinct_groups: fw.distinct_groups() as f64,
        base_entries: base,
        additional_entries: fw.len() as f64 - base,
        ..Metrics::default()
    };
    let mut primary = Vec::new();
    let (mut b_avg, mut b_min, mut b_max) = (Vec::new(), Vec::new(), Vec::new());
    let (mut c_avg, mut c_max) = (Vec::new(), Vec::new());
    for s in t.nodes() {
        for d in t.nodes() {
            if s == d {
                continue;
            }
            let shortest = oracle[s][d];
            let base_trace = simulate(fw, t, FailureScenario::None, s, d)?;
            if !base_trace.delivered() {
                m.uncovered_pairs += 1.0;
                if base_trace.outcome == Outcome::Loop {
                    m.loops += 1.0;
                }
                continue;
            }
            primary.push(ratio(base_trace.total_weight, shortest));
            let (mut ratios, mut cranks) = (Vec::new(), Vec::new());
            for scenario in kind.on_path(&base_trace.nodes()) {
                let tr = simulate(fw, t, scenario, s, d)?;
                if tr.delivered() {
                    ratios.push(ratio(tr.total_weight, shortest));
                    cranks.push(ratio(tr.crankback_weight, shortest));
                } else {
                    m.uncovered_cases += 1.0;
                    if tr.outcome == Outcome::Loop {
                        m.loops += 1.0;
                    }
                }
            }
            if ratios.is_empty() {
                continue;
            }
            b_avg.push(mean(&ratios));
            b_min.push(ratios.iter().copied().fold(f64::INFINITY, f64::min));
            b_max.push(ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            c_avg.push(mean(&cranks));
            c_max.push(cranks.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }
    m.primary_ratio = mean(&primary);
    m.backup_avg = mean(&b_avg);
    m.backup_min = mean(&b_min);
    m.backup_max = mean(&b_max);
    m.crankback_avg = mean(&c_avg);
    m.crankback_max = mean(&c_max);
    Ok(m)
}

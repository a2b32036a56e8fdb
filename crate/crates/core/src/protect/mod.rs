//! Failure-disjoint protection: per-link, per-node and hybrid rule computation on top of the
//! primary shortest paths, and the rule-table optimizer.

mod build;
mod label;
mod matrix;
mod optimize;

pub use build::{hybrid_rules, per_link_rules, per_node_rules};
pub use label::{FailureLabel, LabelMatch};
pub use matrix::{
    Action, Bucket, BuildReport, Disjointness, ForwardingMatrix, GroupEntry, GroupId, InPort,
    Match, Mode, Uncovered,
};
pub use optimize::optimize;

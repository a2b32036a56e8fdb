//! Failure-disjoint forwarding rules for single link and node failures.
//!
//! * [`graph`]: topologies, generators, file format
//! * [`spf`]: tie-broken shortest paths and the primary routing table
//! * [`protect`]: per-link, per-node and hybrid backup rules, and the rule optimizer
//! * [`baseline`]: min-sum disjoint path pairs with crankback forwarding
//! * [`dataplane`]: packet simulation under a failure
//! * [`eval`]: metrics and seeded experiments

pub mod baseline;
pub mod dataplane;
pub mod error;
pub mod eval;
pub mod graph;
pub mod protect;
pub mod spf;

pub use error::{Error, Result};

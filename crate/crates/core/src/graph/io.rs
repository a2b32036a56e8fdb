//! Edge-list text format.
//!
//! ```text
//! # optional comments
//! 3
//! 0 1 1.0
//! 1 2 1.0
//! 0 2 1.0
//! ```
//!
//! The first non-empty line is the node count; every following non-empty line is an undirected
//! link `u v weight`. `#` starts a comment.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{Link, Topology};
use crate::error::{Error, Result};

pub fn parse_topology(text: &str) -> Result<Topology> {
    let mut node_count: Option<usize> = None;
    let mut links = Vec::new();
    let mut seen = HashSet::new();
    let err = |line: usize, msg: String| Error::Parse { line, msg };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(n) = node_count else {
            if fields.len() != 1 {
                return Err(err(line_no, format!("expected node count, got {line:?}")));
            }
            let n = fields[0]
                .parse()
                .map_err(|_| err(line_no, format!("invalid node count {:?}", fields[0])))?;
            node_count = Some(n);
            continue;
        };
        if fields.len() != 3 {
            return Err(err(line_no, format!("expected `u v weight`, got {line:?}")));
        }
        let node = |s: &str| -> Result<usize> {
            let id: usize = s
                .parse()
                .map_err(|_| err(line_no, format!("invalid node id {s:?}")))?;
            if id >= n {
                return Err(err(
                    line_no,
                    format!("node {id} out of range (node count {n})"),
                ));
            }
            Ok(id)
        };
        let u = node(fields[0])?;
        let v = node(fields[1])?;
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| err(line_no, format!("invalid weight {:?}", fields[2])))?;
        if u == v {
            return Err(err(line_no, format!("self-loop at node {u}")));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(err(line_no, format!("invalid weight {weight}")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(err(line_no, format!("duplicate link {u}-{v}")));
        }
        links.push(Link::new(u, v, weight));
    }
    let n = node_count.ok_or_else(|| err(0, "missing node count".into()))?;
    Topology::new(n, links)
}

/// Serializes `t` in the edge-list format. Weights use the shortest representation that parses
/// back to the same `f64`.
pub fn write_topology(t: &Topology) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", t.node_count());
    for l in t.links() {
        let _ = writeln!(out, "{} {} {}", l.u, l.v, l.weight);
    }
    out
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology> {
    parse_topology(&std::fs::read_to_string(path)?)
}

pub fn save_topology(t: &Topology, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_topology(t))?;
    Ok(())
}

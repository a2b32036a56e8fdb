use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::NodeId;

/// Tag carried by a packet. Detoured packets carry the failure they are avoiding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FailureLabel {
    /// No failure observed; plain shortest-path forwarding.
    Primary,
    /// Node `.0` observed its link towards `.1` down.
    LinkFail(NodeId, NodeId),
    /// Node `.0` is presumed down.
    NodeFail(NodeId),
}

impl FailureLabel {
    /// The node on the far side of the failure: `v` for `LinkFail(_, v)` and `NodeFail(v)`.
    pub fn far_end(&self) -> Option<NodeId> {
        match *self {
            FailureLabel::Primary => None,
            FailureLabel::LinkFail(_, v) | FailureLabel::NodeFail(v) => Some(v),
        }
    }

    pub fn is_primary(&self) -> bool {
        matches!(self, FailureLabel::Primary)
    }
}

impl fmt::Display for FailureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureLabel::Primary => write!(f, "P"),
            FailureLabel::LinkFail(u, v) => write!(f, "L({u},{v})"),
            FailureLabel::NodeFail(v) => write!(f, "N({v})"),
        }
    }
}

fn parse_args(s: &str, prefix: &str) -> Option<Vec<String>> {
    let inner = s
        .strip_prefix(prefix)?
        .strip_prefix('(')?
        .strip_suffix(')')?;
    Some(inner.split(',').map(|x| x.trim().to_string()).collect())
}

impl FromStr for FailureLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Syntax {
            what: "failure label",
            input: s.to_string(),
        };
        let s = s.trim();
        if s == "P" {
            return Ok(FailureLabel::Primary);
        }
        if let Some(args) = parse_args(s, "L") {
            if let [u, v] = args.as_slice() {
                return Ok(FailureLabel::LinkFail(
                    u.parse().map_err(|_| bad())?,
                    v.parse().map_err(|_| bad())?,
                ));
            }
        }
        if let Some(args) = parse_args(s, "N") {
            if let [v] = args.as_slice() {
                return Ok(FailureLabel::NodeFail(v.parse().map_err(|_| bad())?));
            }
        }
        Err(bad())
    }
}

impl From<FailureLabel> for String {
    fn from(l: FailureLabel) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for FailureLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

/// Label part of a rule match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LabelMatch {
    Exact(FailureLabel),
    /// Wildcard `{*, v}`: any failure label whose far end is `v`, i.e. `LinkFail(_, v)` or
    /// `NodeFail(v)`. Consulted only when no exact rule matches.
    AnyTo(NodeId),
}

impl LabelMatch {
    pub fn matches(&self, label: FailureLabel) -> bool {
        match *self {
            LabelMatch::Exact(l) => l == label,
            LabelMatch::AnyTo(v) => label.far_end() == Some(v),
        }
    }

    pub fn exact(&self) -> Option<FailureLabel> {
        match *self {
            LabelMatch::Exact(l) => Some(l),
            LabelMatch::AnyTo(_) => None,
        }
    }

    pub fn is_primary(&self) -> bool {
        *self == LabelMatch::Exact(FailureLabel::Primary)
    }
}

impl fmt::Display for LabelMatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelMatch::Exact(l) => l.fmt(f),
            LabelMatch::AnyTo(v) => write!(f, "*({v})"),
        }
    }
}

impl FromStr for LabelMatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if let Some(args) = parse_args(s.trim(), "*") {
            if let [v] = args.as_slice() {
                if let Ok(v) = v.parse() {
                    return Ok(LabelMatch::AnyTo(v));
                }
            }
            return Err(Error::Syntax {
                what: "label match",
                input: s.to_string(),
            });
        }
        s.parse().map(LabelMatch::Exact)
    }
}

impl From<LabelMatch> for String {
    fn from(l: LabelMatch) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for LabelMatch {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

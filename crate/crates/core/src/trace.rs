//! Trace records and the tab-separated trace file format.
//!
//! One record per line: global time in milliseconds with three decimals,
//! the node id or `-`, the emitting component, the event kind and a free
//! `key=value` detail string.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::entity::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub node: Option<NodeId>,
    pub component: String,
    pub kind: String,
    pub detail: String,
}

impl TraceRecord {
    /// Value of `key=` in the detail string, if present.
    pub fn field(&self, key: &str) -> Option<&str> {
        detail_field(&self.detail, key)
    }
}

/// Looks up `key=value` among whitespace-separated detail tokens.
pub fn detail_field<'a>(detail: &'a str, key: &str) -> Option<&'a str> {
    detail.split_whitespace().find_map(|tok| {
        let (k, v) = tok.split_once('=')?;
        (k == key).then_some(v)
    })
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}\t", self.time)?;
        match self.node {
            Some(n) => write!(f, "{n}")?,
            None => f.write_str("-")?,
        }
        write!(f, "\t{}\t{}\t{}", self.component, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {reason}")]
pub struct TraceParseError {
    pub line: usize,
    pub reason: String,
}

impl FromStr for TraceRecord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cols = s.splitn(5, '\t');
        let mut next = |what: &str| cols.next().ok_or_else(|| format!("missing {what} column"));
        let time = next("time")?;
        let time: f64 = time.parse().map_err(|_| format!("bad time {time:?}"))?;
        let node = match next("node")? {
            "-" => None,
            n => Some(n.parse().map_err(|_| format!("bad node {n:?}"))?),
        };
        let component = next("component")?.to_string();
        let kind = next("kind")?.to_string();
        let detail = cols.next().unwrap_or("").to_string();
        if kind.is_empty() {
            return Err("empty event kind".into());
        }
        Ok(TraceRecord {
            time,
            node,
            component,
            kind,
            detail,
        })
    }
}

pub fn render(records: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}

/// Parses a whole trace file. Blank lines are skipped.
pub fn parse(text: &str) -> Result<Vec<TraceRecord>, TraceParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse().map_err(|reason| TraceParseError {
                line: i + 1,
                reason,
            })
        })
        .collect()
}

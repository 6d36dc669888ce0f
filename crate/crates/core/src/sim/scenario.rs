//! Scenario files.
//!
//! ```text
//! [NODES] 4
//! [TASKS]
//! 10 ON 2
//! 12 ON 3 SPARE
//! [GROUPS]
//! 3: 10 11
//! [NET] d_max=10 p_omit=0
//! [ALPHA] K=0.9 T=3
//! [FAULTS]
//! 1000 HANG_TASK T10 400
//! [PARTITION]
//! 2000 4000 0 1 | 2 3
//! [SCRIPT] task10.ariel
//! ```
//!
//! `#` starts a comment. Content may follow a section header on the same
//! line. Paths are relative to the scenario file's directory.

use std::collections::BTreeSet;
use std::path::PathBuf;

use thiserror::Error;

use super::net::{NetParams, PartitionWindow};
use crate::entity::{EntityKind, EntityRef};
use crate::topology::{TaskInfo, Topology};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaultKind {
    CrashTask,
    CrashNode,
    HangTask { duration: f64 },
    RaiseException { code: i64 },
    CorruptBallot { value: i64 },
}

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::CrashTask => "CRASH_TASK",
            FaultKind::CrashNode => "CRASH_NODE",
            FaultKind::HangTask { .. } => "HANG_TASK",
            FaultKind::RaiseException { .. } => "RAISE_EXCEPTION",
            FaultKind::CorruptBallot { .. } => "CORRUPT_BALLOT",
        }
    }

    fn target_kind(&self) -> EntityKind {
        match self {
            FaultKind::CrashNode => EntityKind::Node,
            _ => EntityKind::Task,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub at: f64,
    pub kind: FaultKind,
    pub target: EntityRef,
}

impl FaultSpec {
    pub fn describe(&self) -> String {
        let arg = match self.kind {
            FaultKind::HangTask { duration } => format!(" duration={duration}"),
            FaultKind::RaiseException { code } => format!(" code={code}"),
            FaultKind::CorruptBallot { value } => format!(" value={value}"),
            _ => String::new(),
        };
        format!("kind={} target={}{arg}", self.kind.name(), self.target)
    }
}

/// Optional overrides from the `[ALPHA]` section.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlphaOverrides {
    pub decay: Option<f64>,
    pub threshold: Option<f64>,
    pub judgment_period_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub net: NetParams,
    pub rho: f64,
    /// Peer suspicion timeout; BB heartbeats go out twice per timeout.
    pub bb_hb: Option<f64>,
    pub anti_entropy: Option<f64>,
    pub reboot_delay: f64,
    pub alpha: AlphaOverrides,
    pub voting_period: f64,
    pub faults: Vec<FaultSpec>,
    pub partitions: Vec<PartitionWindow>,
    pub script: Option<PathBuf>,
    pub constants: Option<PathBuf>,
    pub until: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            topology: Topology::default(),
            net: NetParams::default(),
            rho: 1e-3,
            bb_hb: None,
            anti_entropy: None,
            reboot_delay: 100.0,
            alpha: AlphaOverrides::default(),
            voting_period: 500.0,
            faults: Vec::new(),
            partitions: Vec::new(),
            script: None,
            constants: None,
            until: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Nodes,
    Tasks,
    Groups,
    Net,
    Alpha,
    Faults,
    Partition,
    Script,
    Constants,
    Voting,
    Run,
}

impl Section {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "NODES" => Section::Nodes,
            "TASKS" => Section::Tasks,
            "GROUPS" => Section::Groups,
            "NET" => Section::Net,
            "ALPHA" => Section::Alpha,
            "FAULTS" => Section::Faults,
            "PARTITION" => Section::Partition,
            "SCRIPT" => Section::Script,
            "CONSTANTS" => Section::Constants,
            "VOTING" => Section::Voting,
            "RUN" => Section::Run,
            _ => return None,
        })
    }
}

fn num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T, ScenarioError> {
    s.parse()
        .or_else(|_| err(line, format!("bad {what} {s:?}")))
}

fn non_negative(line: usize, what: &str, s: &str) -> Result<f64, ScenarioError> {
    let v: f64 = num(line, what, s)?;
    if !(v.is_finite() && v >= 0.0) {
        return err(
            line,
            format!("{what} must be a non-negative number, got {s}"),
        );
    }
    Ok(v)
}

fn key_values(line: usize, text: &str) -> Result<Vec<(String, String)>, ScenarioError> {
    text.split_whitespace()
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
            _ => err(line, format!("expected key=value, got {kv:?}")),
        })
        .collect()
}

fn entity(line: usize, s: &str) -> Result<EntityRef, ScenarioError> {
    EntityRef::parse_compact(s).map_or_else(|| err(line, format!("bad entity {s:?}")), Ok)
}

/// Parses scenario text. Relative paths are kept as written.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut sc = Scenario::default();
    let mut section: Option<Section> = None;
    let mut nodes_line = None;
    let mut fault_lines = Vec::new();
    let mut partition_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let Some((name, tail)) = rest.split_once(']') else {
                return err(line, "unterminated section header");
            };
            let Some(s) = Section::from_name(name.trim()) else {
                return err(line, format!("unknown section [{}]", name.trim()));
            };
            section = Some(s);
            body = tail.trim();
            if body.is_empty() {
                continue;
            }
        }
        let Some(section) = section else {
            return err(line, "content before the first section");
        };
        let words: Vec<&str> = body.split_whitespace().collect();
        match section {
            Section::Nodes => {
                if nodes_line.is_some() {
                    return err(line, "node count given twice");
                }
                let [n] = words[..] else {
                    return err(line, "expected a node count");
                };
                sc.topology.nodes = num(line, "node count", n)?;
                if sc.topology.nodes == 0 {
                    return err(line, "at least one node is required");
                }
                nodes_line = Some(line);
            }
            Section::Tasks => {
                let (id, node, rest) = match words[..] {
                    [id, "ON", node, ref rest @ ..] => (id, node, rest),
                    _ => return err(line, "expected <task-id> ON <node-id> [SPARE] [hb=<ms>]"),
                };
                let id: u32 = num(line, "task id", id)?;
                let node: u32 = num(line, "node id", node)?;
                let mut info = TaskInfo {
                    node,
                    spare: false,
                    heartbeat_ms: None,
                };
                for w in rest {
                    if *w == "SPARE" {
                        info.spare = true;
                    } else if let Some(v) = w.strip_prefix("hb=") {
                        let hb: u32 = num(line, "heartbeat interval", v)?;
                        if hb == 0 {
                            return err(line, "heartbeat interval must be positive");
                        }
                        info.heartbeat_ms = Some(hb);
                    } else {
                        return err(line, format!("unexpected {w:?}"));
                    }
                }
                if sc.topology.tasks.insert(id, info).is_some() {
                    return err(line, format!("task {id} declared twice"));
                }
            }
            Section::Groups => {
                let Some((g, members)) = body.split_once(':') else {
                    return err(line, "expected <group-id>: <task-id>...");
                };
                let g: u32 = num(line, "group id", g.trim())?;
                let members = members
                    .split_whitespace()
                    .map(|m| num(line, "task id", m))
                    .collect::<Result<Vec<u32>, _>>()?;
                if members.is_empty() {
                    return err(line, format!("group {g} has no members"));
                }
                if sc.topology.groups.insert(g, members).is_some() {
                    return err(line, format!("group {g} declared twice"));
                }
            }
            Section::Net => {
                for (k, v) in key_values(line, body)? {
                    let x = non_negative(line, &k, &v)?;
                    match k.as_str() {
                        "d_min" => sc.net.d_min = x,
                        "d_max" => sc.net.d_max = x,
                        "p_omit" => sc.net.p_omit = x,
                        "p_late" => sc.net.p_late = x,
                        "late_factor" => sc.net.late_factor = x,
                        "rho" => sc.rho = x,
                        "bb_hb" => sc.bb_hb = Some(x),
                        "ae" => sc.anti_entropy = Some(x),
                        "reboot_delay" => sc.reboot_delay = x,
                        _ => return err(line, format!("unknown [NET] key {k:?}")),
                    }
                }
                if let Err(m) = sc.net.validate() {
                    return err(line, m);
                }
                if sc.rho >= 1.0 {
                    return err(line, "rho must be below 1");
                }
                if sc.bb_hb == Some(0.0) || sc.anti_entropy == Some(0.0) {
                    return err(line, "backbone periods must be positive");
                }
            }
            Section::Alpha => {
                for (k, v) in key_values(line, body)? {
                    let x = non_negative(line, &k, &v)?;
                    match k.as_str() {
                        "K" if x < 1.0 => sc.alpha.decay = Some(x),
                        "T" if x > 0.0 => sc.alpha.threshold = Some(x),
                        "period" if x > 0.0 => sc.alpha.judgment_period_ms = Some(x),
                        "K" | "T" | "period" => return err(line, format!("{k}={v} out of range")),
                        _ => return err(line, format!("unknown [ALPHA] key {k:?}")),
                    }
                }
            }
            Section::Voting => {
                for (k, v) in key_values(line, body)? {
                    match k.as_str() {
                        "period" => {
                            sc.voting_period = non_negative(line, "period", &v)?;
                            if sc.voting_period == 0.0 {
                                return err(line, "voting period must be positive");
                            }
                        }
                        _ => return err(line, format!("unknown [VOTING] key {k:?}")),
                    }
                }
            }
            Section::Run => {
                for (k, v) in key_values(line, body)? {
                    match k.as_str() {
                        "until" => sc.until = Some(non_negative(line, "until", &v)?),
                        _ => return err(line, format!("unknown [RUN] key {k:?}")),
                    }
                }
            }
            Section::Faults => fault_lines.push((
                line,
                words.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            )),
            Section::Partition => partition_lines.push((line, body.to_string())),
            Section::Script | Section::Constants => {
                let slot = if section == Section::Script {
                    &mut sc.script
                } else {
                    &mut sc.constants
                };
                if slot.is_some() {
                    return err(line, "path given twice");
                }
                *slot = Some(PathBuf::from(body));
            }
        }
    }
    if nodes_line.is_none() {
        return err(0, "missing [NODES] section");
    }
    let topo = &sc.topology;
    for (id, t) in &topo.tasks {
        if t.node >= topo.nodes {
            return err(0, format!("task {id} placed on unknown node {}", t.node));
        }
    }
    for (g, ms) in &topo.groups {
        for m in ms {
            if !topo.tasks.contains_key(m) {
                return err(0, format!("group {g} names unknown task {m}"));
            }
        }
    }
    for (line, w) in fault_lines {
        sc.faults.push(parse_fault(line, &w, topo)?);
    }
    sc.faults.sort_by(|a, b| a.at.total_cmp(&b.at));
    for (line, body) in partition_lines {
        sc.partitions
            .push(parse_partition(line, &body, topo.nodes)?);
    }
    Ok(sc)
}

fn parse_fault(line: usize, w: &[String], topo: &Topology) -> Result<FaultSpec, ScenarioError> {
    if w.len() < 3 {
        return err(line, "expected <at-ms> <kind> <target> [arg]");
    }
    let at = non_negative(line, "fault time", &w[0])?;
    let target = entity(line, &w[2])?;
    let arg = |what: &str| -> Result<&str, ScenarioError> {
        match w.get(3) {
            Some(a) if w.len() == 4 => Ok(a),
            _ => err(
                line,
                format!("{} takes exactly one argument ({what})", w[1]),
            ),
        }
    };
    let no_arg = || {
        if w.len() == 3 {
            Ok(())
        } else {
            err(line, format!("{} takes no argument", w[1]))
        }
    };
    let kind = match w[1].as_str() {
        "CRASH_TASK" => no_arg().map(|_| FaultKind::CrashTask)?,
        "CRASH_NODE" => no_arg().map(|_| FaultKind::CrashNode)?,
        "HANG_TASK" => FaultKind::HangTask {
            duration: non_negative(line, "duration", arg("duration")?)?,
        },
        "RAISE_EXCEPTION" => FaultKind::RaiseException {
            code: num(line, "exception code", arg("code")?)?,
        },
        "CORRUPT_BALLOT" => FaultKind::CorruptBallot {
            value: num(line, "ballot value", arg("value")?)?,
        },
        other => return err(line, format!("unknown fault kind {other:?}")),
    };
    if target.kind != kind.target_kind() {
        return err(line, format!("{} cannot target {target}", kind.name()));
    }
    if !topo.contains(target) {
        return err(line, format!("UnknownTarget {target}"));
    }
    Ok(FaultSpec { at, kind, target })
}

fn parse_partition(line: usize, body: &str, nodes: u32) -> Result<PartitionWindow, ScenarioError> {
    let mut words = body.split_whitespace();
    let (Some(start), Some(end)) = (words.next(), words.next()) else {
        return err(line, "expected <start> <end> <block>|<block>...");
    };
    let start = non_negative(line, "start", start)?;
    let end = non_negative(line, "end", end)?;
    if end <= start {
        return err(line, "partition must end after it starts");
    }
    let rest: Vec<&str> = words.collect();
    let rest = rest.join(" ");
    let mut seen = BTreeSet::new();
    let mut blocks = Vec::new();
    for b in rest.split('|') {
        let block = b
            .split_whitespace()
            .map(|n| num(line, "node id", n))
            .collect::<Result<Vec<u32>, _>>()?;
        if block.is_empty() {
            return err(line, "empty partition block");
        }
        for n in &block {
            if *n >= nodes {
                return err(line, format!("unknown node {n}"));
            }
            if !seen.insert(*n) {
                return err(line, format!("node {n} in two blocks"));
            }
        }
        blocks.push(block);
    }
    if seen.len() != nodes as usize {
        return err(line, "blocks must cover every node");
    }
    Ok(PartitionWindow { start, end, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# task 10 example
[NODES] 4
[TASKS]
10 ON 2
11 ON 1
12 ON 3 SPARE hb=50
[GROUPS]
3: 10 11
[NET] d_max=10 p_omit=0.0 rho=0
[ALPHA] K=0.9 T=3
[FAULTS]
1500 HANG_TASK T10 400
1000 CRASH_NODE N0
[PARTITION]
2000 3000 0 1 | 2 3
[SCRIPT] task10.ariel
[RUN] until=5000
";

    #[test]
    fn parses_sample() {
        let sc = parse_scenario(SAMPLE).unwrap();
        assert_eq!(sc.topology.nodes, 4);
        assert!(sc.topology.tasks[&12].spare);
        assert_eq!(sc.topology.tasks[&12].heartbeat_ms, Some(50));
        assert_eq!(sc.topology.groups[&3], [10, 11]);
        assert_eq!(sc.rho, 0.0);
        assert_eq!(sc.alpha.decay, Some(0.9));
        assert_eq!(sc.faults[0].kind, FaultKind::CrashNode);
        assert_eq!(sc.faults[1].kind, FaultKind::HangTask { duration: 400.0 });
        assert_eq!(sc.partitions[0].blocks, [vec![0, 1], vec![2, 3]]);
        assert_eq!(sc.script, Some(PathBuf::from("task10.ariel")));
        assert_eq!(sc.until, Some(5000.0));
    }

    #[test]
    fn unknown_target_rejected() {
        let e =
            parse_scenario("[NODES] 1\n[TASKS]\n1 ON 0\n[FAULTS]\n10 CRASH_TASK T9\n").unwrap_err();
        assert_eq!(e.line, 5);
        assert!(e.message.contains("UnknownTarget"));
    }

    #[test]
    fn target_kind_checked() {
        assert!(
            parse_scenario("[NODES] 1\n[TASKS]\n1 ON 0\n[FAULTS]\n10 CRASH_NODE T1\n").is_err()
        );
    }

    #[test]
    fn partition_must_cover() {
        let e = parse_scenario("[NODES] 3\n[PARTITION] 0 10 0 | 1\n").unwrap_err();
        assert!(e.message.contains("cover"));
    }

    #[test]
    fn bad_net_values() {
        assert!(parse_scenario("[NODES] 1\n[NET] d_min=5 d_max=2\n").is_err());
        assert!(parse_scenario("[NODES] 1\n[NET] p_omit=1.5\n").is_err());
        assert!(parse_scenario("[NODES] 1\n[NET] bogus=1\n").is_err());
    }

    #[test]
    fn missing_nodes() {
        assert!(parse_scenario("[TASKS]\n").is_err());
    }
}

//! Text form of configured basic tools, one record per line:
//!
//! ```text
//! WATCHDOG <wid> <task-id> <period-ms> <warn-task-id>
//! RGROUP <group-id> <member-id>...
//! ```

use super::ast::{BtConfig, ReplicatedGroupConfig, VotingPolicy, WatchdogConfig};
use super::error::LangError;
use crate::entity::EntityRef;

pub fn render_configs(configs: &[BtConfig]) -> String {
    let mut out = String::new();
    for c in configs {
        match c {
            BtConfig::Watchdog(w) => out.push_str(&format!(
                "WATCHDOG {} {} {} {}\n",
                w.wid, w.watched.id, w.period_ms, w.warn_target.id
            )),
            BtConfig::ReplicatedGroup(g) => {
                out.push_str(&format!("RGROUP {}", g.group.id));
                for m in &g.members {
                    out.push_str(&format!(" {}", m.id));
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn parse_configs(text: &str) -> Result<Vec<BtConfig>, LangError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx as u32 + 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let bad = |message: &str| LangError::InvalidConfig {
            message: message.to_string(),
            line: line_no,
            column: 1,
        };
        let nums: Vec<u32> = words[1..]
            .iter()
            .map(|w| w.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected non-negative integers"))?;
        match words[0] {
            "WATCHDOG" => {
                let [wid, task, period, warn] = nums[..] else {
                    return Err(bad("WATCHDOG takes four fields"));
                };
                if period == 0 {
                    return Err(bad("watchdog period must be positive"));
                }
                out.push(BtConfig::Watchdog(WatchdogConfig {
                    wid,
                    watched: EntityRef::task(task),
                    period_ms: period,
                    warn_target: EntityRef::task(warn),
                }));
            }
            "RGROUP" => {
                let Some((&group, members)) = nums.split_first() else {
                    return Err(bad("RGROUP needs a group id"));
                };
                let mut sorted = members.to_vec();
                sorted.sort_unstable();
                sorted.dedup();
                if members.len() < 2 || sorted.len() != members.len() {
                    return Err(bad("replicated group needs at least two distinct members"));
                }
                out.push(BtConfig::ReplicatedGroup(ReplicatedGroupConfig {
                    group: EntityRef::group(group),
                    members: members.iter().map(|m| EntityRef::task(*m)).collect(),
                    policy: VotingPolicy::Majority,
                }));
            }
            other => return Err(bad(&format!("unknown record {other}"))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_then_parse() {
        let text = "WATCHDOG 4 7 150 2\nRGROUP 3 5 6 7\n";
        let configs = parse_configs(text).unwrap();
        assert_eq!(configs.len(), 2);
        assert_eq!(render_configs(&configs), text);
    }

    #[test]
    fn rejects_bad_records() {
        assert!(parse_configs("WATCHDOG 1 2 3").is_err());
        assert!(parse_configs("WATCHDOG 1 2 0 4").is_err());
        assert!(parse_configs("RGROUP 3 5").is_err());
        assert!(parse_configs("RGROUP 3 5 5").is_err());
        assert!(parse_configs("VOTER 1").is_err());
        assert!(parse_configs("WATCHDOG a b c d").is_err());
    }
}

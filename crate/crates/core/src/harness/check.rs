//! `check`: evaluate trace assertions.
//!
//! One assertion per line, `#` comments allowed:
//!
//! ```text
//! OCCURS  <pattern>
//! ABSENT  <pattern>
//! ORDERED <pattern> ; <pattern>
//! WITHIN  <ms> <pattern> ; <pattern>
//! ```
//!
//! A pattern is a list of matchers, all of which must hold. `key=value`
//! matches exactly and `key~text` matches a substring. The keys `node`,
//! `component`, `kind` and `detail` address trace columns; any other key
//! addresses a `key=value` item of the detail column. Values containing
//! spaces go in double quotes.
//!
//! `ORDERED a ; b` holds when both occur and the first `a` comes before the
//! first `b`. `WITHIN ms a ; b` holds when `a` occurs and every `a` is
//! followed by a `b` at most `ms` milliseconds later.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::trace::{detail_field, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOp {
    Exact,
    Contains,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matcher {
    pub key: String,
    pub op: MatchOp,
    pub value: String,
}

impl Matcher {
    fn matches(&self, r: &TraceRecord) -> bool {
        let node;
        let field = match self.key.as_str() {
            "node" => {
                node = r.node.map_or("-".to_string(), |n| n.to_string());
                Some(node.as_str())
            }
            "component" => Some(r.component.as_str()),
            "kind" => Some(r.kind.as_str()),
            "detail" => Some(r.detail.as_str()),
            k => detail_field(&r.detail, k),
        };
        match (field, self.op) {
            (Some(f), MatchOp::Exact) => f == self.value,
            (Some(f), MatchOp::Contains) => f.contains(&self.value),
            (None, _) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub matchers: Vec<Matcher>,
}

impl Pattern {
    pub fn matches(&self, r: &TraceRecord) -> bool {
        self.matchers.iter().all(|m| m.matches(r))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssertionKind {
    Occurs(Pattern),
    Absent(Pattern),
    Ordered(Pattern, Pattern),
    Within(f64, Pattern, Pattern),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub line: usize,
    pub text: String,
    pub kind: AssertionKind,
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("assertions line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("trace line {line}: {message}")]
    BadTrace { line: usize, message: String },
}

impl CheckError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

fn malformed<T>(line: usize, message: impl Into<String>) -> Result<T, CheckError> {
    Err(CheckError::Malformed {
        line,
        message: message.into(),
    })
}

/// Splits on whitespace, keeping double-quoted runs together and `;` as a
/// token of its own.
fn words(line: usize, s: &str) -> Result<Vec<String>, CheckError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut any = false;
    for c in s.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            ';' if !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
                out.push(";".into());
            }
            c if c.is_whitespace() && !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => {
                cur.push(c);
                any = true;
            }
        }
    }
    if quoted {
        return malformed(line, "unterminated quote");
    }
    if any {
        out.push(cur);
    }
    Ok(out)
}

fn pattern(line: usize, ws: &[String]) -> Result<Pattern, CheckError> {
    if ws.is_empty() {
        return malformed(line, "empty pattern");
    }
    let matchers = ws
        .iter()
        .map(|w| {
            let (key, op, value) = match (w.find('='), w.find('~')) {
                (Some(i), Some(j)) if j < i => (&w[..j], MatchOp::Contains, &w[j + 1..]),
                (Some(i), _) => (&w[..i], MatchOp::Exact, &w[i + 1..]),
                (None, Some(j)) => (&w[..j], MatchOp::Contains, &w[j + 1..]),
                (None, None) => {
                    return malformed(line, format!("expected key=value or key~text, got {w:?}"))
                }
            };
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return malformed(line, format!("bad key in {w:?}"));
            }
            Ok(Matcher {
                key: key.to_string(),
                op,
                value: value.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Pattern { matchers })
}

fn pattern_pair(line: usize, ws: &[String]) -> Result<(Pattern, Pattern), CheckError> {
    let Some(i) = ws.iter().position(|w| w == ";") else {
        return malformed(line, "expected two patterns separated by ';'");
    };
    if ws[i + 1..].iter().any(|w| w == ";") {
        return malformed(line, "more than two patterns");
    }
    Ok((pattern(line, &ws[..i])?, pattern(line, &ws[i + 1..])?))
}

pub fn parse_assertions(text: &str) -> Result<Vec<Assertion>, CheckError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let ws = words(line, body)?;
        let (head, rest) = ws.split_first().expect("non-empty line");
        let kind = match head.as_str() {
            "OCCURS" | "ABSENT" => {
                if rest.iter().any(|w| w == ";") {
                    return malformed(line, format!("{head} takes a single pattern"));
                }
                let p = pattern(line, rest)?;
                if head == "OCCURS" {
                    AssertionKind::Occurs(p)
                } else {
                    AssertionKind::Absent(p)
                }
            }
            "ORDERED" => {
                let (a, b) = pattern_pair(line, rest)?;
                AssertionKind::Ordered(a, b)
            }
            "WITHIN" => {
                let Some((ms, rest)) = rest.split_first() else {
                    return malformed(line, "WITHIN needs a bound in ms");
                };
                let ms: f64 = match ms.parse() {
                    Ok(v) if v >= 0.0 => v,
                    _ => return malformed(line, format!("bad bound {ms:?}")),
                };
                let (a, b) = pattern_pair(line, rest)?;
                AssertionKind::Within(ms, a, b)
            }
            other => return malformed(line, format!("unknown assertion {other:?}")),
        };
        out.push(Assertion {
            line,
            text: body.to_string(),
            kind,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionResult {
    pub line: usize,
    pub text: String,
    pub passed: bool,
    /// Trace line of the first violation, when there is one to point at.
    pub violation: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub results: Vec<AssertionResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            let status = if r.passed { "PASS" } else { "FAIL" };
            write!(f, "{status} line {}: {}", r.line, r.text)?;
            if !r.passed {
                write!(f, " -- {}", r.reason)?;
                if let Some(v) = r.violation {
                    write!(f, " (trace line {v})")?;
                }
            }
            writeln!(f)?;
        }
        let failed = self.results.iter().filter(|r| !r.passed).count();
        writeln!(f, "{} assertions, {failed} failed", self.results.len())
    }
}

/// Evaluates assertions over trace records paired with their line numbers.
pub fn evaluate(assertions: &[Assertion], trace: &[(usize, TraceRecord)]) -> CheckReport {
    let first = |p: &Pattern, from: usize| {
        trace[from..]
            .iter()
            .position(|(_, r)| p.matches(r))
            .map(|i| i + from)
    };
    let results = assertions
        .iter()
        .map(|a| {
            let (passed, violation, reason) = match &a.kind {
                AssertionKind::Occurs(p) => match first(p, 0) {
                    Some(_) => (true, None, String::new()),
                    None => (false, None, "no matching event".into()),
                },
                AssertionKind::Absent(p) => match first(p, 0) {
                    Some(i) => (false, Some(trace[i].0), "matching event present".into()),
                    None => (true, None, String::new()),
                },
                AssertionKind::Ordered(pa, pb) => match (first(pa, 0), first(pb, 0)) {
                    (Some(i), Some(j)) if i < j => (true, None, String::new()),
                    (Some(_), Some(j)) => (
                        false,
                        Some(trace[j].0),
                        "second event precedes the first".into(),
                    ),
                    (None, _) => (false, None, "first event never occurs".into()),
                    (Some(_), None) => (false, None, "second event never occurs".into()),
                },
                AssertionKind::Within(ms, pa, pb) => {
                    let starts: Vec<usize> = (0..trace.len())
                        .filter(|i| pa.matches(&trace[*i].1))
                        .collect();
                    if starts.is_empty() {
                        (false, None, "first event never occurs".into())
                    } else {
                        let late = starts.into_iter().find(|&i| {
                            let t0 = trace[i].1.time;
                            !trace[i + 1..]
                                .iter()
                                .take_while(|(_, r)| r.time - t0 <= *ms)
                                .any(|(_, r)| pb.matches(r))
                        });
                        match late {
                            None => (true, None, String::new()),
                            Some(i) => (
                                false,
                                Some(trace[i].0),
                                format!("not followed within {ms} ms"),
                            ),
                        }
                    }
                }
            };
            AssertionResult {
                line: a.line,
                text: a.text.clone(),
                passed,
                violation,
                reason,
            }
        })
        .collect();
    CheckReport { results }
}

/// Parses trace text, keeping the line number of every record.
pub fn parse_trace_lines(text: &str) -> Result<Vec<(usize, TraceRecord)>, CheckError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse()
                .map(|r| (i + 1, r))
                .map_err(|message| CheckError::BadTrace {
                    line: i + 1,
                    message,
                })
        })
        .collect()
}

pub fn cmd_check(trace_path: &Path, assertions_path: &Path) -> Result<CheckReport, CheckError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| CheckError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let assertions = parse_assertions(&read(assertions_path)?)?;
    let trace = parse_trace_lines(&read(trace_path)?)?;
    Ok(evaluate(&assertions, &trace))
}

//! The compile / run / check work-flow behind the command-line tool.

pub mod check;
pub mod compile;
pub mod run;

pub use check::{
    cmd_check, evaluate, parse_assertions, parse_trace_lines, Assertion, AssertionKind,
    AssertionResult, CheckError, CheckReport, MatchOp, Matcher, Pattern,
};
pub use compile::{
    cmd_compile, translate_file, CompileArtifacts, Diagnostic, FsIncludes, Severity,
};
pub use run::{cmd_run, load_system, HarnessError, RunOptions};

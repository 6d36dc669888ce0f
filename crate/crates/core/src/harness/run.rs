//! `run`: load a scenario with its recovery script and simulate it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use super::compile::translate_file;
use crate::ariel::{parse_configs, LangError};
use crate::rcode::{DecodeError, RCodeProgram};
use crate::sim::{parse_scenario, RunOutput, ScenarioError, SystemSpec, World};
use crate::trace;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Scenario {
        path: PathBuf,
        source: ScenarioError,
    },
    #[error("{}: {source}", path.display())]
    Script { path: PathBuf, source: LangError },
    #[error("{}: {source}", path.display())]
    Rcode { path: PathBuf, source: DecodeError },
}

impl HarnessError {
    /// Exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the scenario's end time.
    pub until: Option<f64>,
    pub trace: Option<PathBuf>,
}

/// Parses a scenario file and builds the system it describes. `[SCRIPT]`
/// may name ARIEL source or a compiled `.rcod` with its `.cfg` alongside.
pub fn load_system(path: &Path) -> Result<SystemSpec, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let scenario = parse_scenario(&text).map_err(|source| HarnessError::Scenario {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let constants = scenario.constants.as_ref().map(|c| base.join(c));
    let (configs, program) = match &scenario.script {
        None => (Vec::new(), RCodeProgram::default()),
        Some(s) => {
            let script = base.join(s);
            if script.extension().is_some_and(|e| e == "rcod") {
                let bytes = fs::read(&script).map_err(io_err(&script))?;
                let program =
                    RCodeProgram::decode(&bytes).map_err(|source| HarnessError::Rcode {
                        path: script.clone(),
                        source,
                    })?;
                let cfg = script.with_extension("cfg");
                let configs = match fs::read_to_string(&cfg) {
                    Ok(t) => parse_configs(&t)
                        .map_err(|source| HarnessError::Script { path: cfg, source })?,
                    Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
                    Err(e) => return Err(io_err(&cfg)(e)),
                };
                (configs, program)
            } else {
                let tr = translate_file(&script, constants.as_deref())
                    .map_err(io_err(&script))?
                    .map_err(|source| HarnessError::Script {
                        path: script.clone(),
                        source,
                    })?;
                (tr.script.configs, tr.program)
            }
        }
    };
    SystemSpec::new(&scenario, configs, program).map_err(|source| HarnessError::Scenario {
        path: path.to_path_buf(),
        source,
    })
}

/// Simulates a scenario and writes the trace if asked to. A RINT fault ends
/// the run early and is reported in the output.
pub fn cmd_run(path: &Path, opts: &RunOptions) -> Result<RunOutput, HarnessError> {
    let mut spec = load_system(path)?;
    if let Some(u) = opts.until {
        spec.until = u;
    }
    let out = World::run(Arc::new(spec), opts.seed);
    if let Some(t) = &opts.trace {
        fs::write(t, trace::render(&out.trace)).map_err(io_err(t))?;
    }
    Ok(out)
}

//! `compile`: ARIEL source to a binary r-code file plus a configuration
//! file for the basic tools.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::ariel::{
    extract_constants, render_configs, translate, ConstantTable, IncludeResolver, LangError,
    Translation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: u32,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: line {}: {}", self.line, self.message)
    }
}

impl From<&LangError> for Diagnostic {
    fn from(e: &LangError) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line: e.line().unwrap_or(0),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileArtifacts {
    /// Present only when compilation produced no errors.
    pub rcode_path: Option<PathBuf>,
    pub config_path: Option<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CompileArtifacts {
    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }
}

/// Reads `INCLUDE`d headers from a list of directories, first match wins.
pub struct FsIncludes {
    pub dirs: Vec<PathBuf>,
}

impl IncludeResolver for FsIncludes {
    fn resolve(&self, path: &str) -> Result<String, String> {
        for d in &self.dirs {
            let p = d.join(path);
            if p.is_file() {
                return fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()));
            }
        }
        Err("file not found".into())
    }
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Translates a source file in memory. Includes are looked up next to the
/// source, then next to the constants file.
pub fn translate_file(
    source: &Path,
    constants: Option<&Path>,
) -> io::Result<Result<Translation, LangError>> {
    let text = fs::read_to_string(source)?;
    let mut dirs = vec![parent_dir(source)];
    let table = match constants {
        Some(c) => {
            dirs.push(parent_dir(c));
            match extract_constants(&fs::read_to_string(c)?) {
                Ok(t) => t,
                Err(e) => return Ok(Err(e)),
            }
        }
        None => ConstantTable::default(),
    };
    Ok(translate(&text, &table, &FsIncludes { dirs }))
}

/// Compiles `source` and writes `<stem>.rcod` and `<stem>.cfg` into
/// `out_dir` (default: next to the source). Nothing is written on error.
pub fn cmd_compile(
    source: &Path,
    constants: Option<&Path>,
    out_dir: Option<&Path>,
) -> io::Result<CompileArtifacts> {
    let tr = match translate_file(source, constants)? {
        Ok(tr) => tr,
        Err(e) => {
            return Ok(CompileArtifacts {
                rcode_path: None,
                config_path: None,
                diagnostics: vec![Diagnostic::from(&e)],
            })
        }
    };
    let dir = out_dir.map_or_else(|| parent_dir(source), Path::to_path_buf);
    fs::create_dir_all(&dir)?;
    let stem = source.file_stem().unwrap_or_default();
    let rcode_path = dir.join(stem).with_extension("rcod");
    let config_path = dir.join(stem).with_extension("cfg");
    fs::write(&rcode_path, tr.program.encode())?;
    fs::write(&config_path, render_configs(&tr.script.configs))?;
    Ok(CompileArtifacts {
        rcode_path: Some(rcode_path),
        config_path: Some(config_path),
        diagnostics: Vec::new(),
    })
}

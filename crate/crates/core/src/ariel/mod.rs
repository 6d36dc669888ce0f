//! The ARIEL configuration and recovery language: lexer, constant import,
//! parser and r-code generator.

pub mod ast;
mod compile;
mod config;
mod constants;
mod error;
mod lexer;
mod parser;

pub use ast::{
    Action, BtConfig, Guard, IfClause, Predicate, ReplicatedGroupConfig, Script, VotingPolicy,
    WatchdogConfig,
};
pub use compile::compile;
pub use config::{parse_configs, render_configs};
pub use constants::{extract_constants, ConstantTable};
pub use error::LangError;
pub use lexer::{tokenize, Token, TokenKind, KEYWORDS};
pub use parser::{parse, parse_with_includes, IncludeResolver, NoIncludes};

use crate::rcode::RCodeProgram;

/// Output of the translator: configured tools plus the recovery program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub script: Script,
    pub program: RCodeProgram,
}

/// Tokenizes, parses and compiles `source` in one step.
pub fn translate(
    source: &str,
    constants: &ConstantTable,
    resolver: &dyn IncludeResolver,
) -> Result<Translation, LangError> {
    let tokens = tokenize(source)?;
    let script = parse_with_includes(&tokens, constants, resolver)?;
    let program = compile(&script.rules);
    Ok(Translation { script, program })
}

use thiserror::Error;

/// Errors raised while turning ARIEL text into r-code and tool configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{line}:{column}: unexpected character {found:?}")]
    Lex { line: u32, column: u32, found: char },

    #[error("constant {0} defined more than once")]
    DuplicateConstant(String),

    #[error("line {line}: malformed #define")]
    MalformedDefine { line: u32 },

    #[error("{line}:{column}: expected {}, found {found}", expected.join(" | "))]
    Parse {
        line: u32,
        column: u32,
        expected: Vec<String>,
        found: String,
    },

    #[error("{line}:{column}: unresolved constant {name}")]
    UnresolvedConstant {
        name: String,
        line: u32,
        column: u32,
    },

    #[error("{line}:{column}: value {value} is not a valid 32-bit non-negative integer")]
    ValueOutOfRange { value: i64, line: u32, column: u32 },

    #[error("{line}:{column}: {keyword} is recognized but not supported")]
    UnsupportedConstruct {
        keyword: String,
        line: u32,
        column: u32,
    },

    #[error("{line}:{column}: {message}")]
    InvalidConfig {
        message: String,
        line: u32,
        column: u32,
    },

    #[error("cannot include {path}: {reason}")]
    Include { path: String, reason: String },
}

impl LangError {
    /// Source line the error refers to, when it has one.
    pub fn line(&self) -> Option<u32> {
        match self {
            LangError::Lex { line, .. }
            | LangError::MalformedDefine { line }
            | LangError::Parse { line, .. }
            | LangError::UnresolvedConstant { line, .. }
            | LangError::ValueOutOfRange { line, .. }
            | LangError::UnsupportedConstruct { line, .. }
            | LangError::InvalidConfig { line, .. } => Some(*line),
            LangError::DuplicateConstant(_) | LangError::Include { .. } => None,
        }
    }
}

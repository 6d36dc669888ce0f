use super::error::LangError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Integer,
    Real,
    String,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.lexeme == kw
    }

    pub fn is_symbol(&self, sym: &str) -> bool {
        self.kind == TokenKind::Symbol && self.lexeme == sym
    }
}

pub const KEYWORDS: &[&str] = &[
    "INCLUDE",
    "IF",
    "THEN",
    "ELSE",
    "FI",
    "AND",
    "OR",
    "NOT",
    "FAULTY",
    "TRANSIENT",
    "ISOLATED",
    "RESTARTED",
    "ACTIVE",
    "PHASE",
    "NODE",
    "TASK",
    "GROUP",
    "N",
    "T",
    "G",
    "RESTART",
    "TERMINATE",
    "ISOLATE",
    "START",
    "SEND",
    "WARN",
    "WATCHDOG",
    "WATCHES",
    "HEARTBEATS",
    "EVERY",
    "MS",
    "ON",
    "ERROR",
    "END",
    "REPLICATED",
    "MEMBERS",
    "VOTING",
    "MAJORITY",
    // reserved, rejected by the parser
    "RETRY",
    "CONSENSUS",
];

const ENTITY_PREFIXES: &[&str] = &["NODE", "TASK", "GROUP", "N", "T", "G"];

/// Splits ARIEL source into tokens. `#` starts a comment running to the end
/// of the line. Words such as `N3` or `TASK7` are split into an entity
/// keyword followed by an integer.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LangError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($kind:expr, $text:expr, $l:expr, $c:expr) => {
            tokens.push(Token {
                kind: $kind,
                lexeme: $text,
                line: $l,
                column: $c,
            })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut kind = TokenKind::Integer;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                kind = TokenKind::Real;
            }
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            push!(kind, text, start_line, start_col);
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let braced = tokens.last().is_some_and(|t: &Token| t.is_symbol("{"));
            if KEYWORDS.contains(&text.as_str()) {
                push!(TokenKind::Keyword, text, start_line, start_col);
            } else if let Some((prefix, digits)) = split_entity_word(&text).filter(|_| !braced) {
                let plen = prefix.len() as u32;
                push!(
                    TokenKind::Keyword,
                    prefix.to_string(),
                    start_line,
                    start_col
                );
                push!(
                    TokenKind::Integer,
                    digits.to_string(),
                    start_line,
                    start_col + plen
                );
            } else {
                push!(TokenKind::Identifier, text, start_line, start_col);
            }
            continue;
        }
        if c == '"' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(LangError::Lex {
                    line: start_line,
                    column: start_col,
                    found: '"',
                });
            }
            i += 1;
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            push!(TokenKind::String, text, start_line, start_col);
            continue;
        }
        if c == '=' && chars.get(i + 1) == Some(&'=') {
            i += 2;
            col += 2;
            push!(TokenKind::Symbol, "==".into(), start_line, start_col);
            continue;
        }
        if matches!(c, '[' | ']' | '{' | '}' | '(' | ')') {
            i += 1;
            col += 1;
            push!(TokenKind::Symbol, c.to_string(), start_line, start_col);
            continue;
        }
        return Err(LangError::Lex {
            line: start_line,
            column: start_col,
            found: c,
        });
    }
    Ok(tokens)
}

fn split_entity_word(word: &str) -> Option<(&'static str, &str)> {
    ENTITY_PREFIXES.iter().find_map(|p| {
        let rest = word.strip_prefix(p)?;
        (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())).then_some((*p, rest))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexemes(src: &str) -> Vec<String> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| t.lexeme)
            .collect()
    }

    #[test]
    fn guard_header() {
        assert_eq!(
            lexemes("IF [ FAULTY TASK {MYTASK} ]"),
            ["IF", "[", "FAULTY", "TASK", "{", "MYTASK", "}", "]"]
        );
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  # only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn watchdog_header_kinds() {
        let toks = tokenize("WATCHDOG 3 WATCHES").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            [TokenKind::Keyword, TokenKind::Integer, TokenKind::Keyword]
        );
        assert_eq!(toks[1].lexeme, "3");
    }

    #[test]
    fn abbreviated_entities_split() {
        let toks = tokenize("N3 NODE12 T7x").unwrap();
        let got: Vec<_> = toks
            .iter()
            .map(|t| (t.kind, t.lexeme.as_str(), t.column))
            .collect();
        assert_eq!(
            got,
            [
                (TokenKind::Keyword, "N", 1),
                (TokenKind::Integer, "3", 2),
                (TokenKind::Keyword, "NODE", 4),
                (TokenKind::Integer, "12", 8),
                (TokenKind::Identifier, "T7x", 11),
            ]
        );
    }

    #[test]
    fn braced_names_are_not_split() {
        assert_eq!(lexemes("{N1}"), ["{", "N1", "}"]);
    }

    #[test]
    fn reals_strings_and_positions() {
        let toks = tokenize("INCLUDE \"defs.h\"\n  1.5 == 2").unwrap();
        assert_eq!(toks[1].kind, TokenKind::String);
        assert_eq!(toks[1].lexeme, "\"defs.h\"");
        assert_eq!(
            (toks[2].kind, toks[2].line, toks[2].column),
            (TokenKind::Real, 2, 3)
        );
        assert!(toks[3].is_symbol("=="));
    }

    #[test]
    fn lowercase_words_are_identifiers() {
        let toks = tokenize("if").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Identifier);
    }

    #[test]
    fn bad_character_reports_position() {
        let err = tokenize("IF [\n  FAULTY @").unwrap_err();
        assert_eq!(
            err,
            LangError::Lex {
                line: 2,
                column: 10,
                found: '@'
            }
        );
        assert!(matches!(
            tokenize("INCLUDE \"open").unwrap_err(),
            LangError::Lex { found: '"', .. }
        ));
    }
}

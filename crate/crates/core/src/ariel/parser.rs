//! Recursive-descent parser for ARIEL.
//!
//! ```text
//! program    := { INCLUDE string | if-clause | watchdog | replicated }
//! if-clause  := IF '[' guard ']' THEN { action | if-clause }
//!               [ ELSE { action | if-clause } ] FI
//! guard      := term { OR term }
//! term       := factor { AND factor }
//! factor     := NOT factor | '(' guard ')' | predicate
//! predicate  := (FAULTY|TRANSIENT|ISOLATED|RESTARTED|ACTIVE) entity
//!             | PHASE entity '==' intref
//! entity     := (NODE|TASK|GROUP) intref | (N|T|G) integer
//! intref     := integer | '{' identifier '}'
//! action     := (RESTART|TERMINATE|ISOLATE|START) entity
//!             | SEND intref entity | WARN entity
//! watchdog   := WATCHDOG intref WATCHES TASK intref HEARTBEATS EVERY intref MS
//!               ON ERROR WARN TASK intref END WATCHDOG
//! replicated := REPLICATED GROUP intref MEMBERS TASK intref { TASK intref }
//!               VOTING MAJORITY END REPLICATED
//! ```

use std::collections::BTreeSet;

use super::ast::*;
use super::constants::{extract_constants, ConstantTable};
use super::error::LangError;
use super::lexer::{Token, TokenKind};
use crate::entity::{EntityKind, EntityRef};

/// Supplies the text of headers named by `INCLUDE` statements.
pub trait IncludeResolver {
    fn resolve(&self, path: &str) -> Result<String, String>;
}

/// Records `INCLUDE` paths without reading them; the caller's constant table
/// is expected to already hold their definitions.
pub struct NoIncludes;

impl IncludeResolver for NoIncludes {
    fn resolve(&self, _path: &str) -> Result<String, String> {
        Ok(String::new())
    }
}

pub fn parse(tokens: &[Token], constants: &ConstantTable) -> Result<Script, LangError> {
    parse_with_includes(tokens, constants, &NoIncludes)
}

pub fn parse_with_includes(
    tokens: &[Token],
    constants: &ConstantTable,
    resolver: &dyn IncludeResolver,
) -> Result<Script, LangError> {
    Parser {
        tokens,
        pos: 0,
        constants: constants.clone(),
        resolver,
    }
    .program()
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    constants: ConstantTable,
    resolver: &'a dyn IncludeResolver,
}

const STATEMENT_START: &[&str] = &["INCLUDE", "IF", "WATCHDOG", "REPLICATED"];
const ACTION_START: &[&str] = &[
    "RESTART",
    "TERMINATE",
    "ISOLATE",
    "START",
    "SEND",
    "WARN",
    "IF",
];
const RESERVED: &[&str] = &["RETRY", "CONSENSUS"];

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn error(&self, expected: &[&str]) -> LangError {
        let (line, column, found) = match self.peek() {
            Some(t) => (t.line, t.column, describe(t)),
            None => {
                let (l, c) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.column + t.lexeme.chars().count() as u32))
                    .unwrap_or((1, 1));
                (l, c, "end of input".to_string())
            }
        };
        LangError::Parse {
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn unsupported_check(&self) -> Result<(), LangError> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Keyword && RESERVED.contains(&t.lexeme.as_str()) {
                return Err(LangError::UnsupportedConstruct {
                    keyword: t.lexeme.clone(),
                    line: t.line,
                    column: t.column,
                });
            }
        }
        Ok(())
    }

    fn keyword(&mut self, kw: &str) -> Result<(), LangError> {
        if self.at_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn symbol(&mut self, sym: &str) -> Result<(), LangError> {
        if self.peek().is_some_and(|t| t.is_symbol(sym)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[sym]))
        }
    }

    fn program(mut self) -> Result<Script, LangError> {
        let mut script = Script::default();
        while let Some(tok) = self.peek() {
            let (line, column) = (tok.line, tok.column);
            self.unsupported_check()?;
            if self.at_keyword("INCLUDE") {
                self.pos += 1;
                let path = self.string()?;
                self.include(&path)?;
                script.includes.push(path);
            } else if self.at_keyword("IF") {
                script.rules.push(self.if_clause()?);
            } else if self.at_keyword("WATCHDOG") {
                script.configs.push(self.watchdog(line, column)?);
            } else if self.at_keyword("REPLICATED") {
                script.configs.push(self.replicated(line, column)?);
            } else {
                return Err(self.error(STATEMENT_START));
            }
        }
        Ok(script)
    }

    fn string(&mut self) -> Result<String, LangError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::String => {
                let s = t.lexeme.trim_matches('"').to_string();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&["string"])),
        }
    }

    fn include(&mut self, path: &str) -> Result<(), LangError> {
        let text = self
            .resolver
            .resolve(path)
            .map_err(|reason| LangError::Include {
                path: path.to_string(),
                reason,
            })?;
        let table = extract_constants(&text)?;
        self.constants.merge(&table)
    }

    fn if_clause(&mut self) -> Result<IfClause, LangError> {
        self.keyword("IF")?;
        self.symbol("[")?;
        let guard = self.guard()?;
        self.symbol("]")?;
        self.keyword("THEN")?;
        let then = self.actions(&["ELSE", "FI"])?;
        let otherwise = if self.at_keyword("ELSE") {
            self.pos += 1;
            self.actions(&["FI"])?
        } else {
            Vec::new()
        };
        self.keyword("FI")?;
        Ok(IfClause {
            guard,
            then,
            otherwise,
        })
    }

    fn actions(&mut self, terminators: &[&str]) -> Result<Vec<Action>, LangError> {
        let mut out = Vec::new();
        loop {
            self.unsupported_check()?;
            if terminators.iter().any(|kw| self.at_keyword(kw)) {
                return Ok(out);
            }
            if self.at_keyword("IF") {
                out.push(Action::If(self.if_clause()?));
                continue;
            }
            let mut expected: Vec<&str> = ACTION_START.to_vec();
            expected.extend_from_slice(terminators);
            let Some(tok) = self.peek() else {
                return Err(self.error(&expected));
            };
            if tok.kind != TokenKind::Keyword {
                return Err(self.error(&expected));
            }
            let verb = tok.lexeme.clone();
            let action = match verb.as_str() {
                "RESTART" | "TERMINATE" | "START" => {
                    self.pos += 1;
                    let e = self.entity()?;
                    match verb.as_str() {
                        "RESTART" => Action::Restart(e),
                        "TERMINATE" => Action::Terminate(e),
                        _ => Action::Start(e),
                    }
                }
                "ISOLATE" => {
                    self.pos += 1;
                    let at = self.pos;
                    let e = self.entity()?;
                    if e.kind == EntityKind::Group {
                        self.pos = at;
                        return Err(self.error(&["NODE", "TASK"]));
                    }
                    Action::Isolate(e)
                }
                "SEND" => {
                    self.pos += 1;
                    let payload = self.intref()?;
                    let target = self.message_target()?;
                    Action::Send { payload, target }
                }
                "WARN" => {
                    self.pos += 1;
                    Action::Warn(self.message_target()?)
                }
                _ => return Err(self.error(&expected)),
            };
            out.push(action);
        }
    }

    fn message_target(&mut self) -> Result<EntityRef, LangError> {
        let at = self.pos;
        let e = self.entity()?;
        if e.kind == EntityKind::Node {
            self.pos = at;
            return Err(self.error(&["TASK", "GROUP"]));
        }
        Ok(e)
    }

    fn guard(&mut self) -> Result<Guard, LangError> {
        let mut g = self.term()?;
        while self.at_keyword("OR") {
            self.pos += 1;
            g = Guard::or(g, self.term()?);
        }
        Ok(g)
    }

    fn term(&mut self) -> Result<Guard, LangError> {
        let mut g = self.factor()?;
        while self.at_keyword("AND") {
            self.pos += 1;
            g = Guard::and(g, self.factor()?);
        }
        Ok(g)
    }

    fn factor(&mut self) -> Result<Guard, LangError> {
        if self.at_keyword("NOT") {
            self.pos += 1;
            return Ok(Guard::not(self.factor()?));
        }
        if self.peek().is_some_and(|t| t.is_symbol("(")) {
            self.pos += 1;
            let g = self.guard()?;
            self.symbol(")")?;
            return Ok(g);
        }
        if self.at_keyword("PHASE") {
            self.pos += 1;
            let e = self.entity()?;
            self.symbol("==")?;
            let phase = self.intref()?;
            return Ok(Guard::PhaseEq(e, phase));
        }
        let pred = self
            .peek()
            .filter(|t| t.kind == TokenKind::Keyword)
            .and_then(|t| Predicate::from_keyword(&t.lexeme));
        match pred {
            Some(p) => {
                self.pos += 1;
                Ok(Guard::Pred(p, self.entity()?))
            }
            None => Err(self.error(&[
                "NOT",
                "(",
                "FAULTY",
                "TRANSIENT",
                "ISOLATED",
                "RESTARTED",
                "ACTIVE",
                "PHASE",
            ])),
        }
    }

    fn entity(&mut self) -> Result<EntityRef, LangError> {
        const EXPECTED: &[&str] = &["NODE", "TASK", "GROUP", "N", "T", "G"];
        let Some(tok) = self.peek().filter(|t| t.kind == TokenKind::Keyword) else {
            return Err(self.error(EXPECTED));
        };
        let (kind, short) = match tok.lexeme.as_str() {
            "NODE" => (EntityKind::Node, false),
            "TASK" => (EntityKind::Task, false),
            "GROUP" => (EntityKind::Group, false),
            "N" => (EntityKind::Node, true),
            "T" => (EntityKind::Task, true),
            "G" => (EntityKind::Group, true),
            _ => return Err(self.error(EXPECTED)),
        };
        self.pos += 1;
        let id = if short {
            self.integer()?
        } else {
            self.intref()?
        };
        Ok(EntityRef { kind, id })
    }

    fn integer(&mut self) -> Result<u32, LangError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Integer => {
                let (line, column) = (t.line, t.column);
                let v: i64 = t.lexeme.parse().unwrap_or(i64::MAX);
                self.pos += 1;
                to_u32(v, line, column)
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn intref(&mut self) -> Result<u32, LangError> {
        if self.peek().is_some_and(|t| t.is_symbol("{")) {
            self.pos += 1;
            let tok = match self.peek() {
                Some(t) if matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword) => {
                    t.clone()
                }
                _ => return Err(self.error(&["identifier"])),
            };
            self.pos += 1;
            self.symbol("}")?;
            let value =
                self.constants
                    .get(&tok.lexeme)
                    .ok_or_else(|| LangError::UnresolvedConstant {
                        name: tok.lexeme.clone(),
                        line: tok.line,
                        column: tok.column,
                    })?;
            return to_u32(value, tok.line, tok.column);
        }
        if self.peek().is_some_and(|t| t.kind == TokenKind::Integer) {
            return self.integer();
        }
        Err(self.error(&["integer", "{"]))
    }

    fn task_ref(&mut self) -> Result<EntityRef, LangError> {
        self.keyword("TASK")?;
        Ok(EntityRef::task(self.intref()?))
    }

    fn watchdog(&mut self, line: u32, column: u32) -> Result<BtConfig, LangError> {
        self.keyword("WATCHDOG")?;
        let wid = self.intref()?;
        self.keyword("WATCHES")?;
        let watched = self.task_ref()?;
        self.keyword("HEARTBEATS")?;
        self.keyword("EVERY")?;
        let period_ms = self.intref()?;
        self.keyword("MS")?;
        self.keyword("ON")?;
        self.keyword("ERROR")?;
        self.keyword("WARN")?;
        let warn_target = self.task_ref()?;
        self.keyword("END")?;
        self.keyword("WATCHDOG")?;
        if period_ms == 0 {
            return Err(LangError::InvalidConfig {
                message: "watchdog period must be positive".into(),
                line,
                column,
            });
        }
        Ok(BtConfig::Watchdog(WatchdogConfig {
            wid,
            watched,
            period_ms,
            warn_target,
        }))
    }

    fn replicated(&mut self, line: u32, column: u32) -> Result<BtConfig, LangError> {
        self.keyword("REPLICATED")?;
        self.keyword("GROUP")?;
        let group = EntityRef::group(self.intref()?);
        self.keyword("MEMBERS")?;
        let mut members = vec![self.task_ref()?];
        while self.at_keyword("TASK") {
            members.push(self.task_ref()?);
        }
        self.keyword("VOTING")?;
        self.keyword("MAJORITY")?;
        self.keyword("END")?;
        self.keyword("REPLICATED")?;
        let distinct: BTreeSet<_> = members.iter().collect();
        if members.len() < 2 || distinct.len() != members.len() {
            return Err(LangError::InvalidConfig {
                message: "replicated group needs at least two distinct members".into(),
                line,
                column,
            });
        }
        Ok(BtConfig::ReplicatedGroup(ReplicatedGroupConfig {
            group,
            members,
            policy: VotingPolicy::Majority,
        }))
    }
}

fn to_u32(v: i64, line: u32, column: u32) -> Result<u32, LangError> {
    u32::try_from(v).map_err(|_| LangError::ValueOutOfRange {
        value: v,
        line,
        column,
    })
}

fn describe(t: &Token) -> String {
    match t.kind {
        TokenKind::Real => format!("real {}", t.lexeme),
        TokenKind::String => format!("string {}", t.lexeme),
        TokenKind::Integer => format!("integer {}", t.lexeme),
        _ => t.lexeme.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ariel::lexer::tokenize;

    fn parse_src(src: &str, consts: &[(&str, i64)]) -> Result<Script, LangError> {
        let table: ConstantTable = consts.iter().map(|(k, v)| (*k, *v)).collect();
        parse(&tokenize(src)?, &table)
    }

    #[test]
    fn restart_and_send() {
        let s = parse_src(
            "IF [ FAULTY TASK 10 ] THEN RESTART TASK 10 SEND 1 GROUP 3 FI",
            &[],
        )
        .unwrap();
        assert_eq!(
            s.rules,
            vec![IfClause {
                guard: Guard::Pred(Predicate::Faulty, EntityRef::task(10)),
                then: vec![
                    Action::Restart(EntityRef::task(10)),
                    Action::Send {
                        payload: 1,
                        target: EntityRef::group(3)
                    },
                ],
                otherwise: vec![],
            }]
        );
    }

    #[test]
    fn precedence_not_and_or() {
        let s = parse_src(
            "IF [ NOT FAULTY T1 AND ACTIVE T2 OR ISOLATED N0 ] THEN WARN T1 FI",
            &[],
        )
        .unwrap();
        let expected = Guard::or(
            Guard::and(
                Guard::not(Guard::Pred(Predicate::Faulty, EntityRef::task(1))),
                Guard::Pred(Predicate::Active, EntityRef::task(2)),
            ),
            Guard::Pred(Predicate::Isolated, EntityRef::node(0)),
        );
        assert_eq!(s.rules[0].guard, expected);

        let s = parse_src(
            "IF [ NOT ( FAULTY T1 OR FAULTY T2 ) AND PHASE TASK 7 == 3 ] THEN FI",
            &[],
        )
        .unwrap();
        assert!(matches!(&s.rules[0].guard, Guard::And(l, r)
            if matches!(**l, Guard::Not(_)) && **r == Guard::PhaseEq(EntityRef::task(7), 3)));
    }

    #[test]
    fn unresolved_constant() {
        let err = parse_src("IF [ FAULTY TASK {MISSING} ] THEN FI", &[]).unwrap_err();
        assert!(
            matches!(err, LangError::UnresolvedConstant { ref name, line: 1, column: 19 } if name == "MISSING")
        );
    }

    #[test]
    fn reserved_keywords_are_unsupported() {
        for src in ["RETRY", "IF [ FAULTY T1 ] THEN CONSENSUS FI"] {
            assert!(matches!(
                parse_src(src, &[]).unwrap_err(),
                LangError::UnsupportedConstruct { .. }
            ));
        }
    }

    #[test]
    fn target_kind_rules() {
        assert!(parse_src("IF [ FAULTY T1 ] THEN SEND 1 NODE 2 FI", &[]).is_err());
        assert!(parse_src("IF [ FAULTY T1 ] THEN WARN N2 FI", &[]).is_err());
        assert!(parse_src("IF [ FAULTY T1 ] THEN ISOLATE GROUP 2 FI", &[]).is_err());
        assert!(parse_src("IF [ FAULTY T1 ] THEN ISOLATE N2 ISOLATE T1 FI", &[]).is_ok());
    }

    #[test]
    fn real_literal_is_a_parse_error() {
        let err = parse_src("IF [ FAULTY TASK 1.5 ] THEN FI", &[]).unwrap_err();
        match err {
            LangError::Parse { found, column, .. } => {
                assert_eq!(found, "real 1.5");
                assert_eq!(column, 18);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_fi_reports_expected_set() {
        match parse_src("IF [ FAULTY T1 ] THEN RESTART T1", &[]).unwrap_err() {
            LangError::Parse {
                expected, found, ..
            } => {
                assert!(expected.contains(&"FI".to_string()));
                assert_eq!(found, "end of input");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_or_huge_constant() {
        assert!(matches!(
            parse_src("IF [ FAULTY TASK {X} ] THEN FI", &[("X", -1)]).unwrap_err(),
            LangError::ValueOutOfRange { value: -1, .. }
        ));
    }

    #[test]
    fn replicated_block() {
        let s = parse_src(
            "REPLICATED GROUP 3 MEMBERS TASK 1 TASK 2 TASK {C} VOTING MAJORITY END REPLICATED",
            &[("C", 5)],
        )
        .unwrap();
        assert_eq!(
            s.configs,
            vec![BtConfig::ReplicatedGroup(ReplicatedGroupConfig {
                group: EntityRef::group(3),
                members: vec![EntityRef::task(1), EntityRef::task(2), EntityRef::task(5)],
                policy: VotingPolicy::Majority,
            })]
        );
        assert!(matches!(
            parse_src(
                "REPLICATED GROUP 3 MEMBERS TASK 1 TASK 1 VOTING MAJORITY END REPLICATED",
                &[]
            )
            .unwrap_err(),
            LangError::InvalidConfig { .. }
        ));
    }

    #[test]
    fn zero_period_watchdog() {
        let src =
            "WATCHDOG 1 WATCHES TASK 2 HEARTBEATS EVERY 0 MS ON ERROR WARN TASK 3 END WATCHDOG";
        assert!(matches!(
            parse_src(src, &[]).unwrap_err(),
            LangError::InvalidConfig {
                line: 1,
                column: 1,
                ..
            }
        ));
    }

    struct MapResolver;
    impl IncludeResolver for MapResolver {
        fn resolve(&self, path: &str) -> Result<String, String> {
            match path {
                "defs.h" => Ok("#define TEN 10\n".into()),
                _ => Err("not found".into()),
            }
        }
    }

    #[test]
    fn include_supplies_constants_for_later_lines() {
        let toks = tokenize("INCLUDE \"defs.h\"\nIF [ FAULTY TASK {TEN} ] THEN FI").unwrap();
        let s = parse_with_includes(&toks, &ConstantTable::new(), &MapResolver).unwrap();
        assert_eq!(s.includes, vec!["defs.h".to_string()]);
        assert_eq!(
            s.rules[0].guard,
            Guard::Pred(Predicate::Faulty, EntityRef::task(10))
        );

        let toks = tokenize("IF [ FAULTY TASK {TEN} ] THEN FI\nINCLUDE \"defs.h\"").unwrap();
        assert!(matches!(
            parse_with_includes(&toks, &ConstantTable::new(), &MapResolver).unwrap_err(),
            LangError::UnresolvedConstant { .. }
        ));

        let toks = tokenize("INCLUDE \"nope.h\"").unwrap();
        assert!(matches!(
            parse_with_includes(&toks, &ConstantTable::new(), &MapResolver).unwrap_err(),
            LangError::Include { .. }
        ));
    }
}

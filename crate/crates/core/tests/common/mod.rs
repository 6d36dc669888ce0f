//! Reference implementations and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use ariel_core::ariel::{Action, Guard, IfClause, Predicate};
use ariel_core::entity::{DbSnapshot, EntityKind, EntityRef, EntityState};
use ariel_core::rcode::{Instruction, Opcode, RCodeProgram};
use ariel_core::vm::{RecoveryCommand, Verb};
use rand::seq::IndexedRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Guard interpretation straight from the AST.

pub fn eval_guard(g: &Guard, db: &DbSnapshot) -> bool {
    let st = |e: &EntityRef| db.get(e).copied().unwrap_or_default();
    match g {
        Guard::Pred(p, e) => {
            let s = st(e);
            match p {
                Predicate::Faulty => s.faulty,
                Predicate::Transient => s.transient,
                Predicate::Isolated => s.isolated,
                Predicate::Restarted => s.restarted,
                Predicate::Active => s.active,
            }
        }
        Guard::PhaseEq(e, v) => st(e).phase == *v,
        Guard::And(l, r) => eval_guard(l, db) && eval_guard(r, db),
        Guard::Or(l, r) => eval_guard(l, db) || eval_guard(r, db),
        Guard::Not(g) => !eval_guard(g, db),
    }
}

fn exec_actions(actions: &[Action], db: &DbSnapshot, out: &mut Vec<RecoveryCommand>) {
    for a in actions {
        match a {
            Action::Restart(e) => out.push(RecoveryCommand::new(Verb::Restart, *e)),
            Action::Terminate(e) => out.push(RecoveryCommand::new(Verb::Terminate, *e)),
            Action::Isolate(e) => out.push(RecoveryCommand::new(Verb::Isolate, *e)),
            Action::Start(e) => out.push(RecoveryCommand::new(Verb::Start, *e)),
            Action::Warn(e) => out.push(RecoveryCommand::new(Verb::Warn, *e)),
            Action::Send { payload, target } => out.push(RecoveryCommand::send(*payload, *target)),
            Action::If(c) => exec_clause(c, db, out),
        }
    }
}

fn exec_clause(c: &IfClause, db: &DbSnapshot, out: &mut Vec<RecoveryCommand>) {
    if eval_guard(&c.guard, db) {
        exec_actions(&c.then, db, out);
    } else {
        exec_actions(&c.otherwise, db, out);
    }
}

pub fn interpret(rules: &[IfClause], db: &DbSnapshot) -> Vec<RecoveryCommand> {
    let mut out = Vec::new();
    for r in rules {
        exec_clause(r, db, &mut out);
    }
    out
}

// ---------------------------------------------------------------------------
// Random rule sets.

/// One boolean input a guard can observe: a predicate flag, or `None` for
/// the entity's phase (0 or 1).
pub type Atom = (EntityRef, Option<Predicate>);

pub fn random_entity_pool(rng: &mut impl Rng, max: usize) -> Vec<EntityRef> {
    let n = rng.random_range(1..=max);
    let mut pool = BTreeSet::new();
    while pool.len() < n {
        let kind = *[EntityKind::Node, EntityKind::Task, EntityKind::Group]
            .choose(rng)
            .unwrap();
        pool.insert(EntityRef {
            kind,
            id: rng.random_range(0..16),
        });
    }
    pool.into_iter().collect()
}

pub fn random_guard(rng: &mut impl Rng, pool: &[EntityRef], depth: u32) -> Guard {
    if depth == 0 || rng.random_bool(0.3) {
        let e = *pool.choose(rng).unwrap();
        return if rng.random_bool(0.1) {
            Guard::PhaseEq(e, rng.random_range(0..3))
        } else {
            Guard::Pred(*Predicate::ALL.choose(rng).unwrap(), e)
        };
    }
    match rng.random_range(0..3) {
        0 => Guard::and(
            random_guard(rng, pool, depth - 1),
            random_guard(rng, pool, depth - 1),
        ),
        1 => Guard::or(
            random_guard(rng, pool, depth - 1),
            random_guard(rng, pool, depth - 1),
        ),
        _ => Guard::not(random_guard(rng, pool, depth - 1)),
    }
}

fn random_action(rng: &mut impl Rng, pool: &[EntityRef], nest: u32) -> Action {
    let e = *pool.choose(rng).unwrap();
    match rng.random_range(0..if nest > 0 { 7 } else { 6 }) {
        0 => Action::Restart(e),
        1 => Action::Terminate(e),
        2 => Action::Start(e),
        3 if e.kind != EntityKind::Group => Action::Isolate(e),
        4 if e.kind != EntityKind::Node => Action::Warn(e),
        5 if e.kind != EntityKind::Node => Action::Send {
            payload: rng.random_range(0..100),
            target: e,
        },
        6 => Action::If(random_clause(rng, pool, nest - 1)),
        // The verb does not accept this kind of target.
        _ => Action::Restart(e),
    }
}

pub fn random_clause(rng: &mut impl Rng, pool: &[EntityRef], nest: u32) -> IfClause {
    let guard = random_guard(rng, pool, 3);
    let then = (0..rng.random_range(0..4))
        .map(|_| random_action(rng, pool, nest))
        .collect();
    let otherwise = if rng.random_bool(0.4) {
        (0..rng.random_range(1..3))
            .map(|_| random_action(rng, pool, nest))
            .collect()
    } else {
        Vec::new()
    };
    IfClause {
        guard,
        then,
        otherwise,
    }
}

/// A rule set over at most four entities.
pub fn random_rules(rng: &mut impl Rng) -> Vec<IfClause> {
    let pool = random_entity_pool(rng, 4);
    (0..rng.random_range(1..4))
        .map(|_| random_clause(rng, &pool, 1))
        .collect()
}

fn guard_atoms(g: &Guard, out: &mut BTreeSet<Atom>) {
    match g {
        Guard::Pred(p, e) => {
            out.insert((*e, Some(*p)));
        }
        Guard::PhaseEq(e, _) => {
            out.insert((*e, None));
        }
        Guard::And(l, r) | Guard::Or(l, r) => {
            guard_atoms(l, out);
            guard_atoms(r, out);
        }
        Guard::Not(g) => guard_atoms(g, out),
    }
}

fn action_atoms(actions: &[Action], out: &mut BTreeSet<Atom>) {
    for a in actions {
        if let Action::If(c) = a {
            clause_atoms(c, out);
        }
    }
}

fn clause_atoms(c: &IfClause, out: &mut BTreeSet<Atom>) {
    guard_atoms(&c.guard, out);
    action_atoms(&c.then, out);
    action_atoms(&c.otherwise, out);
}

/// The distinct state inputs the rules depend on.
pub fn atoms(rules: &[IfClause]) -> Vec<Atom> {
    let mut set = BTreeSet::new();
    for r in rules {
        clause_atoms(r, &mut set);
    }
    set.into_iter().collect()
}

/// The database in which exactly the atoms whose bit is set in `bits` hold.
pub fn assignment(atoms: &[Atom], bits: u32) -> DbSnapshot {
    let mut db = DbSnapshot::new();
    for (i, (e, p)) in atoms.iter().enumerate() {
        let on = bits >> i & 1 == 1;
        let st: &mut EntityState = db.entry(*e).or_default();
        match p {
            Some(Predicate::Faulty) => st.faulty = on,
            Some(Predicate::Transient) => st.transient = on,
            Some(Predicate::Isolated) => st.isolated = on,
            Some(Predicate::Restarted) => st.restarted = on,
            Some(Predicate::Active) => st.active = on,
            None => st.phase = on as u32,
        }
    }
    db
}

// ---------------------------------------------------------------------------
// Rendering rules back to source.

fn kind_word(k: EntityKind) -> &'static str {
    match k {
        EntityKind::Node => "NODE",
        EntityKind::Task => "TASK",
        EntityKind::Group => "GROUP",
    }
}

/// Writes integers either as literals or as `{NAME}` references, collecting
/// the definitions needed for the latter.
pub struct Renderer {
    pub symbolic: bool,
    pub defines: BTreeMap<i64, String>,
}

impl Renderer {
    pub fn new(symbolic: bool) -> Self {
        Renderer {
            symbolic,
            defines: BTreeMap::new(),
        }
    }

    fn int(&mut self, v: i64) -> String {
        if !self.symbolic {
            return v.to_string();
        }
        let n = self.defines.len();
        let name = self.defines.entry(v).or_insert_with(|| format!("K_{n}"));
        format!("{{{name}}}")
    }

    fn entity(&mut self, e: EntityRef) -> String {
        format!("{} {}", kind_word(e.kind), self.int(e.id as i64))
    }

    fn guard(&mut self, g: &Guard) -> String {
        match g {
            Guard::Pred(p, e) => format!("{} {}", p.keyword(), self.entity(*e)),
            Guard::PhaseEq(e, v) => format!("PHASE {} == {}", self.entity(*e), self.int(*v as i64)),
            Guard::And(l, r) => format!("( {} AND {} )", self.guard(l), self.guard(r)),
            Guard::Or(l, r) => format!("( {} OR {} )", self.guard(l), self.guard(r)),
            Guard::Not(g) => format!("NOT {}", self.guard(g)),
        }
    }

    fn actions(&mut self, actions: &[Action], out: &mut String) {
        for a in actions {
            let line = match a {
                Action::Restart(e) => format!("RESTART {}", self.entity(*e)),
                Action::Terminate(e) => format!("TERMINATE {}", self.entity(*e)),
                Action::Isolate(e) => format!("ISOLATE {}", self.entity(*e)),
                Action::Start(e) => format!("START {}", self.entity(*e)),
                Action::Warn(e) => format!("WARN {}", self.entity(*e)),
                Action::Send { payload, target } => {
                    format!(
                        "SEND {} {}",
                        self.int(*payload as i64),
                        self.entity(*target)
                    )
                }
                Action::If(c) => {
                    self.clause(c, out);
                    continue;
                }
            };
            writeln!(out, "  {line}").unwrap();
        }
    }

    pub fn clause(&mut self, c: &IfClause, out: &mut String) {
        let g = self.guard(&c.guard);
        writeln!(out, "IF [ {g} ]\nTHEN").unwrap();
        self.actions(&c.then, out);
        if !c.otherwise.is_empty() {
            writeln!(out, "ELSE").unwrap();
            self.actions(&c.otherwise, out);
        }
        writeln!(out, "FI").unwrap();
    }

    pub fn script(&mut self, rules: &[IfClause]) -> String {
        let mut out = String::new();
        for r in rules {
            self.clause(r, &mut out);
        }
        out
    }

    pub fn header(&self) -> String {
        self.defines
            .iter()
            .map(|(v, name)| format!("#define {name} {v}\n"))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Random r-code containers. Operands are arbitrary apart from entity kinds
// and jump targets, which the decoder validates.

pub fn random_program(rng: &mut impl Rng) -> RCodeProgram {
    let len = rng.random_range(1..40usize);
    let mut code = Vec::with_capacity(len);
    for _ in 0..len - 1 {
        let op = *Opcode::ALL[..Opcode::ALL.len() - 1].choose(rng).unwrap();
        let operands = match op.arity() {
            0 => vec![],
            1 => vec![rng.random_range(0..len as u32)],
            2 => vec![rng.random_range(0..3), rng.random()],
            _ if op == Opcode::ActSend => vec![rng.random(), rng.random_range(0..3), rng.random()],
            _ => vec![rng.random_range(0..3), rng.random(), rng.random()],
        };
        code.push(Instruction::new(op, operands));
    }
    code.push(Instruction::simple(Opcode::End));
    RCodeProgram::new(code)
}

// ---------------------------------------------------------------------------
// α-count as a closed-form sum: each error contributes K^m, where m counts
// the error-free judgments after it.

pub fn alpha_closed_form(stream: &[bool], k: f64) -> f64 {
    let mut total = 0.0;
    for (i, &err) in stream.iter().enumerate() {
        if err {
            let m = stream[i + 1..].iter().filter(|e| !**e).count();
            total += k.powi(m as i32);
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Voting by counting every candidate value.

pub fn brute_force_vote(members: &[u32], ballots: &[Option<i64>]) -> (Option<i64>, Vec<u32>) {
    let submitted: Vec<i64> = ballots.iter().flatten().copied().collect();
    let mut winner = None;
    for cand in &submitted {
        let count = submitted.iter().filter(|v| *v == cand).count();
        if count * 2 > submitted.len() {
            winner = Some(*cand);
        }
    }
    let minority = members
        .iter()
        .zip(ballots)
        .filter(|(_, b)| winner.is_none() || **b != winner)
        .map(|(m, _)| *m)
        .collect();
    (winner, minority)
}

// ---------------------------------------------------------------------------
// Scenario corpus.

pub fn corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `.scn` file in the corpus paired with its `.checks` file.
pub fn corpus_scenarios() -> Vec<(std::path::PathBuf, std::path::PathBuf)> {
    let mut out = Vec::new();
    for dir in std::fs::read_dir(corpus_dir()).unwrap() {
        for f in std::fs::read_dir(dir.unwrap().path()).unwrap() {
            let path = f.unwrap().path();
            if path.extension().is_some_and(|e| e == "scn") {
                out.push((path.clone(), path.with_extension("checks")));
            }
        }
    }
    out.sort();
    out
}

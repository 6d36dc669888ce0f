use super::ast::{Action, Guard, IfClause, Predicate};
use crate::rcode::{Instruction, Opcode, RCodeProgram};

/// Lays out guarded actions as stack-machine code.
///
/// A guard is emitted in postfix form followed by `JUMP_IF_FALSE` over its
/// then-branch. With an else-branch the then-branch ends in a `JUMP` past the
/// else-branch. Top-level clauses follow one another so a false guard falls
/// through to the next one, and the program ends with `END`.
pub fn compile(rules: &[IfClause]) -> RCodeProgram {
    let mut code = Vec::new();
    for rule in rules {
        emit_if(rule, &mut code);
    }
    code.push(Instruction::simple(Opcode::End));
    RCodeProgram::new(code)
}

fn emit_if(clause: &IfClause, code: &mut Vec<Instruction>) {
    emit_guard(&clause.guard, code);
    let jif = code.len();
    code.push(Instruction::new(Opcode::JumpIfFalse, vec![0]));
    emit_actions(&clause.then, code);
    if clause.otherwise.is_empty() {
        patch(code, jif);
    } else {
        let jump = code.len();
        code.push(Instruction::new(Opcode::Jump, vec![0]));
        patch(code, jif);
        emit_actions(&clause.otherwise, code);
        patch(code, jump);
    }
}

fn patch(code: &mut [Instruction], at: usize) {
    code[at].operands[0] = code.len() as u32;
}

fn emit_actions(actions: &[Action], code: &mut Vec<Instruction>) {
    for action in actions {
        let ins = match action {
            Action::Restart(e) => Instruction::with_entity(Opcode::ActRestart, *e),
            Action::Terminate(e) => Instruction::with_entity(Opcode::ActTerminate, *e),
            Action::Isolate(e) => Instruction::with_entity(Opcode::ActIsolate, *e),
            Action::Start(e) => Instruction::with_entity(Opcode::ActStart, *e),
            Action::Warn(e) => Instruction::with_entity(Opcode::ActWarn, *e),
            Action::Send { payload, target } => Instruction::new(
                Opcode::ActSend,
                vec![*payload, target.kind.code(), target.id],
            ),
            Action::If(nested) => {
                emit_if(nested, code);
                continue;
            }
        };
        code.push(ins);
    }
}

fn emit_guard(guard: &Guard, code: &mut Vec<Instruction>) {
    match guard {
        Guard::Pred(p, e) => {
            let op = match p {
                Predicate::Faulty => Opcode::PredFaulty,
                Predicate::Transient => Opcode::PredTransient,
                Predicate::Isolated => Opcode::PredIsolated,
                Predicate::Restarted => Opcode::PredRestarted,
                Predicate::Active => Opcode::PredActive,
            };
            code.push(Instruction::with_entity(op, *e));
        }
        Guard::PhaseEq(e, phase) => code.push(Instruction::new(
            Opcode::PredPhaseEq,
            vec![e.kind.code(), e.id, *phase],
        )),
        Guard::And(l, r) => {
            emit_guard(l, code);
            emit_guard(r, code);
            code.push(Instruction::simple(Opcode::And));
        }
        Guard::Or(l, r) => {
            emit_guard(l, code);
            emit_guard(r, code);
            code.push(Instruction::simple(Opcode::Or));
        }
        Guard::Not(g) => {
            emit_guard(g, code);
            code.push(Instruction::simple(Opcode::Not));
        }
    }
}

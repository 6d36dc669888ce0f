//! RINT: the r-code interpreter.
//!
//! Predicates push booleans read from a database snapshot, connectives
//! combine them, `JUMP_IF_FALSE` pops and branches, and every `ACT_*`
//! appends a recovery command. The snapshot is only read; the backbone
//! applies command effects afterwards.

use std::fmt;

use thiserror::Error;

use crate::entity::{EntityRef, StateView};
use crate::rcode::{Instruction, Opcode, RCodeProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verb {
    Restart,
    Terminate,
    Isolate,
    Start,
    Send,
    Warn,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Restart => "RESTART",
            Verb::Terminate => "TERMINATE",
            Verb::Isolate => "ISOLATE",
            Verb::Start => "START",
            Verb::Send => "SEND",
            Verb::Warn => "WARN",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Verb::Restart,
            Verb::Terminate,
            Verb::Isolate,
            Verb::Start,
            Verb::Send,
            Verb::Warn,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A recovery command emitted by RINT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecoveryCommand {
    pub verb: Verb,
    pub target: EntityRef,
    pub payload: Option<u32>,
}

impl RecoveryCommand {
    pub fn new(verb: Verb, target: EntityRef) -> Self {
        RecoveryCommand {
            verb,
            target,
            payload: None,
        }
    }

    pub fn send(payload: u32, target: EntityRef) -> Self {
        RecoveryCommand {
            verb: Verb::Send,
            target,
            payload: Some(payload),
        }
    }
}

impl fmt::Display for RecoveryCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.payload {
            Some(p) => write!(f, "{} {} {}", self.verb, p, self.target),
            None => write!(f, "{} {}", self.verb, self.target),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultReason {
    #[error("stack underflow")]
    StackUnderflow,
    #[error("jump to {0} out of range")]
    JumpOutOfRange(u32),
    #[error("backward jump to {0}")]
    BackwardJump(u32),
    #[error("fell off the end of the program")]
    MissingEnd,
    #[error("malformed operands")]
    BadOperands,
    #[error("{0} is not part of a guard")]
    NotAGuard(Opcode),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("vm fault at pc {pc}: {reason}")]
pub struct VmFault {
    pub pc: usize,
    pub reason: FaultReason,
}

fn fault(pc: usize, reason: FaultReason) -> VmFault {
    VmFault { pc, reason }
}

fn entity_of(pc: usize, ins: &Instruction) -> Result<EntityRef, VmFault> {
    ins.entity().ok_or(fault(pc, FaultReason::BadOperands))
}

/// Applies one guard opcode to the stack. Returns `false` when `ins` is not
/// a guard opcode.
fn guard_step(
    pc: usize,
    ins: &Instruction,
    view: &impl StateView,
    stack: &mut Vec<bool>,
) -> Result<bool, VmFault> {
    let pop = |stack: &mut Vec<bool>| stack.pop().ok_or(fault(pc, FaultReason::StackUnderflow));
    match ins.op {
        Opcode::PredFaulty
        | Opcode::PredTransient
        | Opcode::PredIsolated
        | Opcode::PredRestarted
        | Opcode::PredActive => {
            let st = view.state(entity_of(pc, ins)?);
            stack.push(match ins.op {
                Opcode::PredFaulty => st.faulty,
                Opcode::PredTransient => st.transient,
                Opcode::PredIsolated => st.isolated,
                Opcode::PredRestarted => st.restarted,
                _ => st.active,
            });
        }
        Opcode::PredPhaseEq => {
            let st = view.state(entity_of(pc, ins)?);
            stack.push(st.phase == ins.operands[2]);
        }
        Opcode::And => {
            let (r, l) = (pop(stack)?, pop(stack)?);
            stack.push(l && r);
        }
        Opcode::Or => {
            let (r, l) = (pop(stack)?, pop(stack)?);
            stack.push(l || r);
        }
        Opcode::Not => {
            let v = pop(stack)?;
            stack.push(!v);
        }
        _ => return Ok(false),
    }
    Ok(true)
}

fn jump_target(pc: usize, ins: &Instruction, len: usize) -> Result<usize, VmFault> {
    let target = *ins
        .operands
        .first()
        .ok_or(fault(pc, FaultReason::BadOperands))?;
    if target as usize >= len {
        return Err(fault(pc, FaultReason::JumpOutOfRange(target)));
    }
    if target as usize <= pc {
        return Err(fault(pc, FaultReason::BackwardJump(target)));
    }
    Ok(target as usize)
}

/// Evaluates every guarded action of `program` against `view` and returns
/// the commands of the guards found true, in program order.
pub fn run(program: &RCodeProgram, view: &impl StateView) -> Result<Vec<RecoveryCommand>, VmFault> {
    let code = &program.instructions;
    let mut stack: Vec<bool> = Vec::new();
    let mut out = Vec::new();
    let mut pc = 0;
    loop {
        let ins = code.get(pc).ok_or(fault(pc, FaultReason::MissingEnd))?;
        if guard_step(pc, ins, view, &mut stack)? {
            pc += 1;
            continue;
        }
        match ins.op {
            Opcode::JumpIfFalse => {
                let cond = stack.pop().ok_or(fault(pc, FaultReason::StackUnderflow))?;
                let target = jump_target(pc, ins, code.len())?;
                pc = if cond { pc + 1 } else { target };
            }
            Opcode::Jump => pc = jump_target(pc, ins, code.len())?,
            Opcode::End => return Ok(out),
            Opcode::ActSend => {
                let payload = ins.operands[0];
                out.push(RecoveryCommand::send(payload, entity_of(pc, ins)?));
                pc += 1;
            }
            op => {
                let verb = match op {
                    Opcode::ActRestart => Verb::Restart,
                    Opcode::ActTerminate => Verb::Terminate,
                    Opcode::ActIsolate => Verb::Isolate,
                    Opcode::ActStart => Verb::Start,
                    Opcode::ActWarn => Verb::Warn,
                    _ => unreachable!("guard opcodes handled above"),
                };
                out.push(RecoveryCommand::new(verb, entity_of(pc, ins)?));
                pc += 1;
            }
        }
    }
}

/// Evaluates the guard starting at `start_pc` up to the `JUMP_IF_FALSE` that
/// consumes it and returns the boolean it would test.
pub fn eval_guard(
    program: &RCodeProgram,
    start_pc: usize,
    view: &impl StateView,
) -> Result<bool, VmFault> {
    let mut stack = Vec::new();
    let mut pc = start_pc;
    loop {
        let ins = program
            .instructions
            .get(pc)
            .ok_or(fault(pc, FaultReason::MissingEnd))?;
        if ins.op == Opcode::JumpIfFalse {
            return stack.pop().ok_or(fault(pc, FaultReason::StackUnderflow));
        }
        if !guard_step(pc, ins, view, &mut stack)? {
            return Err(fault(pc, FaultReason::NotAGuard(ins.op)));
        }
        pc += 1;
    }
}

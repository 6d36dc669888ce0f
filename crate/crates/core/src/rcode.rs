//! Recovery pseudo-code: instruction set, binary container and disassembly.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! "RCOD" | version: u16 | count: u32 | { opcode: u8 | nops: u8 | nops * u32 }*
//! ```

use std::fmt;

use thiserror::Error;

use crate::entity::{EntityKind, EntityRef};

pub const MAGIC: &[u8; 4] = b"RCOD";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    PredFaulty = 0x01,
    PredTransient = 0x02,
    PredIsolated = 0x03,
    PredRestarted = 0x04,
    PredActive = 0x05,
    PredPhaseEq = 0x06,
    And = 0x10,
    Or = 0x11,
    Not = 0x12,
    JumpIfFalse = 0x20,
    Jump = 0x21,
    ActRestart = 0x30,
    ActTerminate = 0x31,
    ActIsolate = 0x32,
    ActStart = 0x33,
    ActSend = 0x34,
    ActWarn = 0x35,
    End = 0xFF,
}

impl Opcode {
    pub const ALL: [Opcode; 18] = [
        Opcode::PredFaulty,
        Opcode::PredTransient,
        Opcode::PredIsolated,
        Opcode::PredRestarted,
        Opcode::PredActive,
        Opcode::PredPhaseEq,
        Opcode::And,
        Opcode::Or,
        Opcode::Not,
        Opcode::JumpIfFalse,
        Opcode::Jump,
        Opcode::ActRestart,
        Opcode::ActTerminate,
        Opcode::ActIsolate,
        Opcode::ActStart,
        Opcode::ActSend,
        Opcode::ActWarn,
        Opcode::End,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.iter().copied().find(|op| *op as u8 == b)
    }

    /// Fixed operand count for each opcode.
    pub fn arity(self) -> usize {
        use Opcode::*;
        match self {
            And | Or | Not | End => 0,
            JumpIfFalse | Jump => 1,
            PredFaulty | PredTransient | PredIsolated | PredRestarted | PredActive => 2,
            ActRestart | ActTerminate | ActIsolate | ActStart | ActWarn => 2,
            PredPhaseEq | ActSend => 3,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        use Opcode::*;
        match self {
            PredFaulty => "PRED_FAULTY",
            PredTransient => "PRED_TRANSIENT",
            PredIsolated => "PRED_ISOLATED",
            PredRestarted => "PRED_RESTARTED",
            PredActive => "PRED_ACTIVE",
            PredPhaseEq => "PRED_PHASE_EQ",
            And => "AND",
            Or => "OR",
            Not => "NOT",
            JumpIfFalse => "JUMP_IF_FALSE",
            Jump => "JUMP",
            ActRestart => "ACT_RESTART",
            ActTerminate => "ACT_TERMINATE",
            ActIsolate => "ACT_ISOLATE",
            ActStart => "ACT_START",
            ActSend => "ACT_SEND",
            ActWarn => "ACT_WARN",
            End => "END",
        }
    }

    pub fn is_jump(self) -> bool {
        matches!(self, Opcode::Jump | Opcode::JumpIfFalse)
    }

    /// Index of the first entity operand pair, if the opcode carries one.
    fn entity_operand(self) -> Option<usize> {
        use Opcode::*;
        match self {
            PredFaulty | PredTransient | PredIsolated | PredRestarted | PredActive
            | PredPhaseEq => Some(0),
            ActRestart | ActTerminate | ActIsolate | ActStart | ActWarn => Some(0),
            ActSend => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Opcode,
    pub operands: Vec<u32>,
}

impl Instruction {
    pub fn new(op: Opcode, operands: Vec<u32>) -> Self {
        debug_assert_eq!(op.arity(), operands.len(), "{op} arity");
        Instruction { op, operands }
    }

    pub fn simple(op: Opcode) -> Self {
        Self::new(op, Vec::new())
    }

    pub fn with_entity(op: Opcode, e: EntityRef) -> Self {
        Self::new(op, vec![e.kind.code(), e.id])
    }

    /// The entity operand, when the opcode has one and its kind code is valid.
    pub fn entity(&self) -> Option<EntityRef> {
        let at = self.op.entity_operand()?;
        let kind = EntityKind::from_code(*self.operands.get(at)?)?;
        Some(EntityRef {
            kind,
            id: *self.operands.get(at + 1)?,
        })
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.op.mnemonic())?;
        match (self.op, self.entity()) {
            (Opcode::PredPhaseEq, Some(e)) => write!(f, " {} {}", e, self.operands[2]),
            (Opcode::ActSend, Some(e)) => write!(f, " {} {}", self.operands[0], e),
            (_, Some(e)) => write!(f, " {e}"),
            _ => {
                for o in &self.operands {
                    write!(f, " {o}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RCodeProgram {
    pub version: u16,
    pub instructions: Vec<Instruction>,
}

impl Default for RCodeProgram {
    fn default() -> Self {
        RCodeProgram {
            version: VERSION,
            instructions: vec![Instruction::simple(Opcode::End)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeReason {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated input")]
    Truncated,
    #[error("unknown opcode 0x{0:02X}")]
    UnknownOpcode(u8),
    #[error("{op} expects {expected} operands, found {found}")]
    WrongOperandCount {
        op: Opcode,
        expected: usize,
        found: usize,
    },
    #[error("jump target {target} out of range (program has {len} instructions)")]
    JumpOutOfRange { target: u32, len: usize },
    #[error("invalid entity kind {0}")]
    BadEntityKind(u32),
    #[error("program does not end with END")]
    MissingEnd,
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decode error at byte {offset}: {reason}")]
pub struct DecodeError {
    pub offset: usize,
    pub reason: DecodeReason,
}

impl RCodeProgram {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        RCodeProgram {
            version: VERSION,
            instructions,
        }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + self.instructions.len() * 10);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(self.instructions.len() as u32).to_le_bytes());
        for ins in &self.instructions {
            out.push(ins.op as u8);
            out.push(ins.operands.len() as u8);
            for o in &ins.operands {
                out.extend_from_slice(&o.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(DecodeError {
                offset: 0,
                reason: DecodeReason::BadMagic,
            });
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(DecodeError {
                offset: 4,
                reason: DecodeReason::UnsupportedVersion(version),
            });
        }
        let count = r.u32()? as usize;
        // every instruction takes at least two bytes
        if count > bytes.len() / 2 {
            return Err(r.err(DecodeReason::Truncated));
        }
        let mut instructions = Vec::with_capacity(count);
        let mut starts = Vec::with_capacity(count);
        for _ in 0..count {
            let start = r.pos;
            starts.push(start);
            let byte = r.u8()?;
            let op = Opcode::from_byte(byte).ok_or(DecodeError {
                offset: start,
                reason: DecodeReason::UnknownOpcode(byte),
            })?;
            let n = r.u8()? as usize;
            if n != op.arity() {
                return Err(DecodeError {
                    offset: start + 1,
                    reason: DecodeReason::WrongOperandCount {
                        op,
                        expected: op.arity(),
                        found: n,
                    },
                });
            }
            let mut operands = Vec::with_capacity(n);
            for _ in 0..n {
                operands.push(r.u32()?);
            }
            let ins = Instruction { op, operands };
            if let Some(at) = ins.op.entity_operand() {
                let kind = ins.operands[at];
                if EntityKind::from_code(kind).is_none() {
                    return Err(DecodeError {
                        offset: start + 2 + 4 * at,
                        reason: DecodeReason::BadEntityKind(kind),
                    });
                }
            }
            instructions.push(ins);
        }
        if r.pos != bytes.len() {
            return Err(r.err(DecodeReason::TrailingBytes(bytes.len() - r.pos)));
        }
        for (ins, start) in instructions.iter().zip(&starts) {
            if ins.op.is_jump() && ins.operands[0] as usize >= count {
                return Err(DecodeError {
                    offset: start + 2,
                    reason: DecodeReason::JumpOutOfRange {
                        target: ins.operands[0],
                        len: count,
                    },
                });
            }
        }
        if instructions.last().map(|i| i.op) != Some(Opcode::End) {
            return Err(DecodeError {
                offset: starts.last().copied().unwrap_or(10),
                reason: DecodeReason::MissingEnd,
            });
        }
        Ok(RCodeProgram {
            version,
            instructions,
        })
    }

    /// One instruction per line, `pc: OPCODE operands`.
    pub fn disassemble(&self) -> String {
        let mut s = String::new();
        for (pc, ins) in self.instructions.iter().enumerate() {
            s.push_str(&format!("{pc}: {ins}\n"));
        }
        s
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: DecodeReason) -> DecodeError {
        DecodeError {
            offset: self.pos,
            reason,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.pos + n > self.bytes.len() {
            return Err(self.err(DecodeReason::Truncated));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

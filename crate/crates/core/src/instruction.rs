//! G-machine instructions and their textual form.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Slide(usize),
    Alloc(usize),
    Update(usize),
    Pop(usize),
    Unwind,
    PushGlobal(Arc<str>),
    PushInt(i64),
    Push(usize),
    Mkap,
    Eval,
    Cond(Code, Code),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Lt,
    Neq,
    Pack { tag: u32, arity: u32 },
    Casejump(Vec<(u32, Code)>),
    Split(usize),
}

/// An immutable, cheaply clonable instruction sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Code(Arc<[Instruction]>);

impl Code {
    pub fn new(instrs: Vec<Instruction>) -> Code {
        Code(instrs.into())
    }
}

impl From<Vec<Instruction>> for Code {
    fn from(v: Vec<Instruction>) -> Code {
        Code::new(v)
    }
}

impl Deref for Code {
    type Target = [Instruction];

    fn deref(&self) -> &[Instruction] {
        &self.0
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_code(f, self)
    }
}

pub(crate) fn write_code(f: &mut fmt::Formatter<'_>, instrs: &[Instruction]) -> fmt::Result {
    f.write_str("[")?;
    for (i, instr) in instrs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{instr}")?;
    }
    f.write_str("]")
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Instruction::*;
        match self {
            Slide(n) | Alloc(n) | Update(n) | Pop(n) | Push(n) | Split(n) => {
                write!(f, "{}({n})", self.kind().name())
            }
            PushGlobal(name) => write!(f, "pushGlobal({name:?})"),
            PushInt(n) => write!(f, "pushInt({n})"),
            Cond(t, e) => write!(f, "cond({t},{e})"),
            Pack { tag, arity } => write!(f, "pack({tag},{arity})"),
            Casejump(branches) => {
                f.write_str("casejump([")?;
                for (i, (tag, code)) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "({tag},{code})")?;
                }
                f.write_str("])")
            }
            Unwind | Mkap | Eval | Add | Sub | Mul | Div | Neg | Lt | Neq => f.write_str(self.kind().name()),
        }
    }
}

/// Operand-free mirror of [`Instruction`], used to key statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum InstrKind {
    Slide,
    Alloc,
    Update,
    Pop,
    Unwind,
    PushGlobal,
    PushInt,
    Push,
    Mkap,
    Eval,
    Cond,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Lt,
    Neq,
    Pack,
    Casejump,
    Split,
}

impl InstrKind {
    pub const ALL: [InstrKind; 21] = [
        InstrKind::Slide,
        InstrKind::Alloc,
        InstrKind::Update,
        InstrKind::Pop,
        InstrKind::Unwind,
        InstrKind::PushGlobal,
        InstrKind::PushInt,
        InstrKind::Push,
        InstrKind::Mkap,
        InstrKind::Eval,
        InstrKind::Cond,
        InstrKind::Add,
        InstrKind::Sub,
        InstrKind::Mul,
        InstrKind::Div,
        InstrKind::Neg,
        InstrKind::Lt,
        InstrKind::Neq,
        InstrKind::Pack,
        InstrKind::Casejump,
        InstrKind::Split,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstrKind::Slide => "slide",
            InstrKind::Alloc => "alloc",
            InstrKind::Update => "update",
            InstrKind::Pop => "pop",
            InstrKind::Unwind => "unwind",
            InstrKind::PushGlobal => "pushGlobal",
            InstrKind::PushInt => "pushInt",
            InstrKind::Push => "push",
            InstrKind::Mkap => "mkap",
            InstrKind::Eval => "eval",
            InstrKind::Cond => "cond",
            InstrKind::Add => "add",
            InstrKind::Sub => "sub",
            InstrKind::Mul => "mul",
            InstrKind::Div => "div",
            InstrKind::Neg => "neg",
            InstrKind::Lt => "lt",
            InstrKind::Neq => "neq",
            InstrKind::Pack => "pack",
            InstrKind::Casejump => "casejump",
            InstrKind::Split => "split",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Instruction {
    pub fn kind(&self) -> InstrKind {
        use Instruction::*;
        match self {
            Slide(_) => InstrKind::Slide,
            Alloc(_) => InstrKind::Alloc,
            Update(_) => InstrKind::Update,
            Pop(_) => InstrKind::Pop,
            Unwind => InstrKind::Unwind,
            PushGlobal(_) => InstrKind::PushGlobal,
            PushInt(_) => InstrKind::PushInt,
            Push(_) => InstrKind::Push,
            Mkap => InstrKind::Mkap,
            Eval => InstrKind::Eval,
            Cond(..) => InstrKind::Cond,
            Add => InstrKind::Add,
            Sub => InstrKind::Sub,
            Mul => InstrKind::Mul,
            Div => InstrKind::Div,
            Neg => InstrKind::Neg,
            Lt => InstrKind::Lt,
            Neq => InstrKind::Neq,
            Pack { .. } => InstrKind::Pack,
            Casejump(_) => InstrKind::Casejump,
            Split(_) => InstrKind::Split,
        }
    }

    pub fn push_global(name: &str) -> Instruction {
        Instruction::PushGlobal(name.into())
    }
}

#[cfg(test)]
mod tests {
    use super::Instruction::*;
    use super::*;

    #[test]
    fn listing_format() {
        let code = Code::new(vec![PushInt(3), Instruction::push_global("id"), Mkap, Eval, Update(0), Pop(0), Unwind]);
        assert_eq!(code.to_string(), r#"[pushInt(3),pushGlobal("id"),mkap,eval,update(0),pop(0),unwind]"#);
    }

    #[test]
    fn nested_code_format() {
        let c = Cond(Code::new(vec![Push(1)]), Code::new(vec![Push(2)]));
        assert_eq!(c.to_string(), "cond([push(1)],[push(2)])");
        let j = Casejump(vec![(1, Code::new(vec![Split(0), PushInt(-1), Slide(0)]))]);
        assert_eq!(j.to_string(), "casejump([(1,[split(0),pushInt(-1),slide(0)])])");
        assert_eq!(Pack { tag: 2, arity: 2 }.to_string(), "pack(2,2)");
    }

    #[test]
    fn kinds_index_densely() {
        for (i, k) in InstrKind::ALL.iter().enumerate() {
            assert_eq!(k.index(), i);
        }
    }
}

//! The G-machine: code, stack, dump, heap and global environment, with a
//! single-step transition function and a run loop.
//!
//! Stack arguments are addressed directly. When `Unwind` reaches a global
//! of arity `n` it rewrites the top of the stack from
//! `[g, ap1, …, apn]` to `[arg1, …, argn, apn]`, so `Push k` just copies
//! the `k`-th entry and let-bound locals live on the stack like parameters.
//!
//! Indirections are followed inside the `Unwind` step that meets them; an
//! overwritten root therefore costs no extra transition.

mod check;
mod dot;
mod force;
mod heap;
mod stats;
mod trace;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use check::{applicable_rules, check_heap_integrity};
pub use dot::heap_dot;
pub use force::force_deep;
pub use heap::{Addr, Heap, Node};
pub use stats::Stats;
pub use trace::{Rule, TraceRecord};

use crate::compiler::CompiledProgram;
use crate::instruction::{write_code, Code, Instruction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow in {0}")]
    ArithmeticOverflow(&'static str),
    #[error("no global named {0:?}")]
    MissingGlobal(String),
    #[error("no case alternative for constructor tag {0}")]
    TagNotFound(u32),
    #[error("stack underflow: needed {needed} entries, have {available}")]
    StackUnderflow { needed: usize, available: usize },
    #[error("dangling address {0}")]
    DanglingAddress(Addr),
    #[error("dereferenced hNull (an unfilled letrec placeholder)")]
    NullDeref,
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: &'static str, found: String },
    #[error("global {name} needs {arity} argument(s) but only {available} are stacked")]
    InsufficientArguments { name: String, arity: usize, available: usize },
    #[error("cyclic indirection starting at {0}")]
    CyclicIndirection(Addr),
    #[error("code ran out before reaching a final state")]
    EmptyCode,
    #[error("step limit of {0} exceeded")]
    StepLimitExceeded(u64),
    #[error("machine has already halted")]
    Halted,
}

/// The weak head normal form left on the stack by a finished run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FinalResult {
    Number(i64),
    Constructor { tag: u32, fields: Vec<Addr> },
    /// A global applied to fewer arguments than its arity.
    Function { name: String, arity: usize, supplied: usize },
}

impl fmt::Display for FinalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FinalResult::Number(n) => write!(f, "{n}"),
            FinalResult::Constructor { tag, fields } => {
                let fs: Vec<String> = fields.iter().map(|a| a.to_string()).collect();
                write!(f, "Pack{{{tag},{}}}[{}]", fields.len(), fs.join(","))
            }
            FinalResult::Function { name, arity, supplied } => {
                write!(f, "function value <{name}>/{arity} applied to {supplied}")
            }
        }
    }
}

/// Remaining code: a stack of instruction sequences with a cursor each.
/// Prefixing a branch (`Cond`, `Casejump`) pushes a segment instead of
/// copying the tail.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodePtr {
    // innermost segment last; no segment is ever exhausted
    segments: Vec<(Code, usize)>,
}

impl CodePtr {
    pub fn new(code: Code) -> CodePtr {
        let mut p = CodePtr::default();
        p.prepend(code);
        p
    }

    pub fn peek(&self) -> Option<&Instruction> {
        self.segments.last().map(|(c, i)| &c[*i])
    }

    fn advance(&mut self) {
        if let Some((code, i)) = self.segments.last_mut() {
            *i += 1;
            if *i == code.len() {
                self.segments.pop();
            }
        }
    }

    /// `code ++ self`.
    fn prepend(&mut self, code: Code) {
        if !code.is_empty() {
            self.segments.push((code, 0));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn to_vec(&self) -> Vec<Instruction> {
        self.segments.iter().rev().flat_map(|(c, i)| c[*i..].iter().cloned()).collect()
    }

    /// True when exactly `[Unwind]` remains.
    pub fn is_unwind_only(&self) -> bool {
        match self.segments.as_slice() {
            [(code, i)] => *i + 1 == code.len() && code[*i] == Instruction::Unwind,
            _ => false,
        }
    }
}

impl fmt::Display for CodePtr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        struct Listing<'a>(&'a [Instruction]);
        impl fmt::Display for Listing<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_code(f, self.0)
            }
        }
        write!(f, "{}", Listing(&self.to_vec()))
    }
}

/// A saved continuation: the code and stack to resume once the value
/// being evaluated reaches weak head normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpFrame {
    pub code: CodePtr,
    pub stack: Vec<Addr>,
}

/// Complete machine state. Stacks are stored bottom-first, so the top is
/// the last element.
#[derive(Debug, Clone)]
pub struct MachineState {
    pub code: CodePtr,
    pub stack: Vec<Addr>,
    pub dump: Vec<DumpFrame>,
    pub heap: Heap,
    pub globals: HashMap<Arc<str>, Addr>,
    pub stats: Stats,
    halted: bool,
}

impl MachineState {
    /// Allocates one global node per compiled global and sets the code to
    /// `[PushGlobal "main", Unwind]`.
    pub fn new(program: &CompiledProgram) -> MachineState {
        let mut heap = Heap::new();
        let mut globals = HashMap::new();
        for g in &program.globals {
            let name: Arc<str> = g.name.as_str().into();
            let addr = heap.alloc(Node::Global { name: name.clone(), arity: g.arity, code: g.code.clone() });
            globals.insert(name, addr);
        }
        MachineState {
            code: CodePtr::new(Code::new(vec![Instruction::push_global("main"), Instruction::Unwind])),
            stack: Vec::new(),
            dump: Vec::new(),
            heap,
            globals,
            stats: Stats::default(),
            halted: false,
        }
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Code is `[Unwind]`, the dump is empty and the stack top is in weak
    /// head normal form: the next step is a terminating one.
    pub fn is_terminal(&self) -> bool {
        if !self.code.is_unwind_only() || !self.dump.is_empty() {
            return false;
        }
        let Some(&top) = self.stack.last() else { return false };
        match self.heap.chase(top).and_then(|a| self.heap.get(a)) {
            Ok(Node::Num(_)) | Ok(Node::Constr { .. }) => true,
            Ok(Node::Global { arity, .. }) => *arity > self.stack.len() - 1,
            _ => false,
        }
    }

    /// Address of stack entry `k`, counting from the top.
    pub fn stack_at(&self, k: usize) -> Option<Addr> {
        self.stack.len().checked_sub(k + 1).map(|i| self.stack[i])
    }

    fn need(&self, n: usize) -> Result<(), MachineError> {
        if self.stack.len() < n {
            Err(MachineError::StackUnderflow { needed: n, available: self.stack.len() })
        } else {
            Ok(())
        }
    }

    fn top(&self) -> Result<Addr, MachineError> {
        self.need(1)?;
        Ok(self.stack[self.stack.len() - 1])
    }

    fn num_at(&self, addr: Addr) -> Result<i64, MachineError> {
        match self.heap.get(addr)? {
            Node::Num(n) => Ok(*n),
            other => Err(MachineError::TypeMismatch { expected: "NNum", found: other.describe(addr) }),
        }
    }

    /// Applies exactly one transition. On error the state is unchanged.
    pub fn step(&mut self) -> Result<Rule, MachineError> {
        if self.halted {
            return Err(MachineError::Halted);
        }
        let instr = self.code.peek().cloned().ok_or(MachineError::EmptyCode)?;
        let heap_before = self.heap.len();
        let rule = self.exec(instr)?;
        let allocated = (self.heap.len() - heap_before) as u64;
        self.stats.record(rule, self.stack.len(), self.dump.len(), allocated);
        Ok(rule)
    }

    fn exec(&mut self, instr: Instruction) -> Result<Rule, MachineError> {
        use Instruction as I;
        let rule = match instr {
            I::PushGlobal(name) => {
                let addr = *self.globals.get(&name).ok_or_else(|| MachineError::MissingGlobal(name.to_string()))?;
                self.code.advance();
                self.stack.push(addr);
                Rule::PushGlobal
            }
            I::PushInt(n) => {
                self.code.advance();
                let a = self.heap.alloc(Node::Num(n));
                self.stack.push(a);
                Rule::PushInt
            }
            I::Mkap => {
                self.need(2)?;
                let f = self.stack.pop().unwrap();
                let x = self.stack.pop().unwrap();
                let a = self.heap.alloc(Node::App(f, x));
                self.stack.push(a);
                self.code.advance();
                Rule::Mkap
            }
            I::Push(k) => {
                self.need(k + 1)?;
                let a = self.stack_at(k).unwrap();
                self.stack.push(a);
                self.code.advance();
                Rule::Push
            }
            I::Slide(n) => {
                self.need(n + 1)?;
                let top = self.stack.pop().unwrap();
                self.stack.truncate(self.stack.len() - n);
                self.stack.push(top);
                self.code.advance();
                Rule::Slide
            }
            I::Update(n) => {
                self.need(n + 2)?;
                let target = self.stack_at(n + 1).unwrap();
                let value = self.stack_at(0).unwrap();
                self.heap.set(target, Node::Ind(value))?;
                self.stack.pop();
                self.code.advance();
                Rule::Update
            }
            I::Pop(n) => {
                self.need(n)?;
                self.stack.truncate(self.stack.len() - n);
                self.code.advance();
                Rule::Pop
            }
            I::Alloc(n) => {
                for _ in 0..n {
                    let a = self.heap.alloc(Node::Ind(Addr::NULL));
                    self.stack.push(a);
                }
                self.code.advance();
                Rule::Alloc
            }
            I::Add | I::Sub | I::Mul | I::Div | I::Lt | I::Neq => self.arithmetic(&instr)?,
            I::Neg => {
                let a = self.top()?;
                let n = self.num_at(a)?;
                let r = n.checked_neg().ok_or(MachineError::ArithmeticOverflow("neg"))?;
                self.stack.pop();
                let a = self.heap.alloc(Node::Num(r));
                self.stack.push(a);
                self.code.advance();
                Rule::Neg
            }
            I::Cond(then, els) => {
                let a = self.top()?;
                let branch = match self.num_at(a)? {
                    1 => then,
                    0 => els,
                    n => {
                        return Err(MachineError::TypeMismatch { expected: "NNum 0 or NNum 1", found: format!("NNum {n}") })
                    }
                };
                self.stack.pop();
                self.code.advance();
                self.code.prepend(branch);
                Rule::Cond
            }
            I::Eval => {
                let a = self.top()?;
                self.stack.pop();
                self.code.advance();
                let saved = DumpFrame { code: std::mem::take(&mut self.code), stack: std::mem::take(&mut self.stack) };
                self.dump.push(saved);
                self.stack.push(a);
                self.code = CodePtr::new(Code::new(vec![Instruction::Unwind]));
                Rule::Eval
            }
            I::Pack { tag, arity } => {
                let n = arity as usize;
                self.need(n)?;
                let fields: Vec<Addr> = self.stack.drain(self.stack.len() - n..).rev().collect();
                let a = self.heap.alloc(Node::Constr { tag, fields });
                self.stack.push(a);
                self.code.advance();
                Rule::Pack
            }
            I::Casejump(branches) => {
                let a = self.top()?;
                let tag = match self.heap.get(a)? {
                    Node::Constr { tag, .. } => *tag,
                    other => return Err(MachineError::TypeMismatch { expected: "NConstr", found: other.describe(a) }),
                };
                let code = branches
                    .iter()
                    .find(|(t, _)| *t == tag)
                    .map(|(_, c)| c.clone())
                    .ok_or(MachineError::TagNotFound(tag))?;
                self.code.advance();
                self.code.prepend(code);
                Rule::Casejump
            }
            I::Split(n) => {
                let a = self.top()?;
                let fields = match self.heap.get(a)? {
                    Node::Constr { fields, .. } if fields.len() == n => fields.clone(),
                    other => {
                        return Err(MachineError::TypeMismatch { expected: "NConstr of matching arity", found: other.describe(a) })
                    }
                };
                self.stack.pop();
                self.stack.extend(fields.iter().rev());
                self.code.advance();
                Rule::Split
            }
            I::Unwind => self.unwind()?,
        };
        Ok(rule)
    }

    fn arithmetic(&mut self, instr: &Instruction) -> Result<Rule, MachineError> {
        self.need(2)?;
        let left = self.num_at(self.stack_at(0).unwrap())?;
        let right = self.num_at(self.stack_at(1).unwrap())?;
        let (value, rule) = match instr {
            Instruction::Add => (left.checked_add(right).ok_or(MachineError::ArithmeticOverflow("add"))?, Rule::Add),
            Instruction::Sub => (left.checked_sub(right).ok_or(MachineError::ArithmeticOverflow("sub"))?, Rule::Sub),
            Instruction::Mul => (left.checked_mul(right).ok_or(MachineError::ArithmeticOverflow("mul"))?, Rule::Mul),
            Instruction::Div => {
                if right == 0 {
                    return Err(MachineError::DivisionByZero);
                }
                (left.checked_div(right).ok_or(MachineError::ArithmeticOverflow("div"))?, Rule::Div)
            }
            Instruction::Lt => (i64::from(left < right), Rule::Lt),
            Instruction::Neq => (i64::from(left != right), Rule::Neq),
            _ => unreachable!("not an arithmetic instruction"),
        };
        self.stack.truncate(self.stack.len() - 2);
        let a = self.heap.alloc(Node::Num(value));
        self.stack.push(a);
        self.code.advance();
        Ok(rule)
    }

    fn unwind(&mut self) -> Result<Rule, MachineError> {
        let top = self.top()?;
        let target = self.heap.chase(top)?;
        let node = self.heap.get(target)?.clone();
        let depth = self.stack.len();
        let rule = match node {
            Node::Num(_) | Node::Constr { .. } => {
                let is_num = matches!(node, Node::Num(_));
                *self.stack.last_mut().unwrap() = target;
                match self.dump.pop() {
                    None => {
                        self.halted = true;
                        if is_num {
                            Rule::TerminateWithNum
                        } else {
                            Rule::TerminateWithConstr
                        }
                    }
                    Some(frame) => {
                        self.return_to(frame, target);
                        if is_num {
                            Rule::UnwindInt
                        } else {
                            Rule::UnwindConstr
                        }
                    }
                }
            }
            Node::App(fun, _) => {
                *self.stack.last_mut().unwrap() = target;
                self.stack.push(fun);
                Rule::UnwindApp
            }
            Node::Global { arity, code, .. } if depth - 1 >= arity => {
                let mut args = Vec::with_capacity(arity);
                for i in 1..=arity {
                    let spine = self.stack[depth - 1 - i];
                    match self.heap.get(spine)? {
                        Node::App(_, arg) => args.push(*arg),
                        Node::Global { name, .. } => {
                            return Err(MachineError::InsufficientArguments { name: name.to_string(), arity, available: i - 1 })
                        }
                        other => {
                            return Err(MachineError::TypeMismatch { expected: "NApp on the spine", found: other.describe(spine) })
                        }
                    }
                }
                *self.stack.last_mut().unwrap() = target;
                self.stack.truncate(depth - arity);
                self.stack.extend(args.into_iter().rev());
                self.code = CodePtr::new(code);
                if self.dump.is_empty() {
                    Rule::UnwindGlobalWithEmptyDump
                } else {
                    Rule::UnwindGlobalWithNonEmptyDump
                }
            }
            Node::Global { .. } => {
                *self.stack.last_mut().unwrap() = target;
                match self.dump.pop() {
                    None => {
                        self.halted = true;
                        Rule::TerminateWithFunction
                    }
                    Some(frame) => {
                        // the partial application's root is the bottom of the spine
                        let root = self.stack[0];
                        self.return_to(frame, root);
                        Rule::UnwindPartialApp
                    }
                }
            }
            Node::Ind(_) => unreachable!("chase stops at non-indirections"),
        };
        Ok(rule)
    }

    fn return_to(&mut self, frame: DumpFrame, value: Addr) {
        self.code = frame.code;
        self.stack = frame.stack;
        self.stack.push(value);
    }

    /// Steps until the machine halts, fails, or `max_steps` more steps
    /// have been taken.
    pub fn run(&mut self, max_steps: u64) -> Result<FinalResult, MachineError> {
        self.run_observed(max_steps, |_, _| {})
    }

    /// Like [`run`](Self::run), calling `observe` after every step with
    /// the trace record and the new state.
    pub fn run_observed(
        &mut self,
        max_steps: u64,
        mut observe: impl FnMut(&TraceRecord, &MachineState),
    ) -> Result<FinalResult, MachineError> {
        let mut taken = 0;
        while !self.halted {
            if taken == max_steps {
                return Err(MachineError::StepLimitExceeded(max_steps));
            }
            let head = self.code.peek().map(|i| i.to_string()).unwrap_or_default();
            let rule = self.step()?;
            taken += 1;
            let record = trace_event(self, rule, head);
            observe(&record, self);
        }
        self.final_result()
    }

    /// The value at the top of a halted machine's stack.
    pub fn final_result(&self) -> Result<FinalResult, MachineError> {
        let top = self.top()?;
        let addr = self.heap.chase(top)?;
        Ok(match self.heap.get(addr)? {
            Node::Num(n) => FinalResult::Number(*n),
            Node::Constr { tag, fields } => FinalResult::Constructor { tag: *tag, fields: fields.clone() },
            Node::Global { name, arity, .. } => {
                FinalResult::Function { name: name.to_string(), arity: *arity, supplied: self.stack.len() - 1 }
            }
            other => return Err(MachineError::TypeMismatch { expected: "a weak head normal form", found: other.describe(addr) }),
        })
    }

    /// Stuck-state report: code, stack (top first), dump, and every node
    /// reachable from the stack and dump.
    pub fn describe(&self) -> String {
        let list = |s: &[Addr]| s.iter().rev().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        out.push_str(&format!("code({}).\n", self.code));
        out.push_str(&format!("stack([{}]).\n", list(&self.stack)));
        let frames: Vec<String> =
            self.dump.iter().rev().map(|d| format!("<[{}],{}>", list(&d.stack), d.code)).collect();
        out.push_str(&format!("dump([{}]).\n", frames.join(",")));
        let roots = self.stack.iter().chain(self.dump.iter().flat_map(|d| d.stack.iter())).copied();
        for addr in self.reachable(roots) {
            if let Ok(node) = self.heap.get(addr) {
                out.push_str(&node.describe(addr));
                out.push_str(".\n");
            }
        }
        out
    }

    /// Allocated addresses reachable from `roots`, in address order.
    pub fn reachable(&self, roots: impl IntoIterator<Item = Addr>) -> BTreeSet<Addr> {
        let mut seen = BTreeSet::new();
        let mut work: Vec<Addr> = roots.into_iter().collect();
        while let Some(a) = work.pop() {
            if !self.heap.contains(a) || !seen.insert(a) {
                continue;
            }
            if let Ok(node) = self.heap.get(a) {
                work.extend(node.children());
            }
        }
        seen
    }

    /// Name of the global stored at `addr`, if it is one.
    pub fn global_name(&self, addr: Addr) -> Option<&str> {
        match self.heap.get(addr) {
            Ok(Node::Global { name, .. }) => Some(name),
            _ => None,
        }
    }

    /// Globals ordered by address, for stable output.
    pub fn globals_by_addr(&self) -> BTreeMap<Addr, &str> {
        self.globals.iter().map(|(n, a)| (*a, n.as_ref())).collect()
    }
}

/// Builds the trace record for a transition that just produced `after`.
pub fn trace_event(after: &MachineState, rule: Rule, code_head: String) -> TraceRecord {
    TraceRecord {
        step: after.stats.steps,
        rule,
        code_head,
        stack_depth: after.stack.len(),
        dump_depth: after.dump.len(),
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub result: Result<FinalResult, MachineError>,
    pub stats: Stats,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Runs a compiled initial state, optionally collecting the trace.
pub fn run(state: &mut MachineState, max_steps: u64, collect_trace: bool) -> RunReport {
    let mut trace = collect_trace.then(Vec::new);
    let result = state.run_observed(max_steps, |rec, _| {
        if let Some(t) = trace.as_mut() {
            t.push(rec.clone());
        }
    });
    RunReport { result, stats: state.stats.clone(), trace }
}

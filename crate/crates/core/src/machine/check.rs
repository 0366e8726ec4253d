//! Invariant checks used by tests and the CLI's debug output.

use super::{MachineState, Node, Rule};
use crate::instruction::Instruction;

/// Every address on the stack, in the dump, or inside a node is allocated.
/// `hNull` is tolerated only as the target of an indirection (an unfilled
/// `letrec` placeholder).
pub fn check_heap_integrity(state: &MachineState) -> Result<(), String> {
    let frames = std::iter::once(&state.stack).chain(state.dump.iter().map(|d| &d.stack));
    for (depth, stack) in frames.enumerate() {
        for a in stack {
            if !state.heap.contains(*a) {
                return Err(format!("stack {depth} holds unallocated address {a}"));
            }
        }
    }
    for (addr, node) in state.heap.iter() {
        for child in node.children() {
            let placeholder = child.is_null() && matches!(node, Node::Ind(_));
            if !placeholder && !state.heap.contains(child) {
                return Err(format!("{} points at unallocated {child}", node.describe(addr)));
            }
        }
    }
    for (name, addr) in &state.globals {
        match state.heap.get(*addr) {
            Ok(Node::Global { name: n, .. }) if n == name => {}
            // a CAF overwritten by its value
            Ok(Node::Ind(_)) => {}
            _ => return Err(format!("global {name} does not refer to its node")),
        }
    }
    Ok(())
}

/// Every rule whose precondition holds in `state`. Each rule is tested on
/// its own, so a well-formed machine yields at most one.
pub fn applicable_rules(state: &MachineState) -> Vec<Rule> {
    Rule::ALL.iter().copied().filter(|r| applies(state, *r)).collect()
}

fn applies(s: &MachineState, rule: Rule) -> bool {
    if s.is_halted() {
        return false;
    }
    let Some(instr) = s.code.peek() else { return false };
    let depth = s.stack.len();
    let num = |k: usize| s.stack_at(k).and_then(|a| match s.heap.get(a) {
        Ok(Node::Num(n)) => Some(*n),
        _ => None,
    });
    let two_nums = || num(0).is_some() && num(1).is_some();
    match rule {
        Rule::PushGlobal => matches!(instr, Instruction::PushGlobal(g) if s.globals.contains_key(g)),
        Rule::PushInt => matches!(instr, Instruction::PushInt(_)),
        Rule::Push => matches!(instr, Instruction::Push(k) if depth > *k),
        Rule::Mkap => matches!(instr, Instruction::Mkap) && depth >= 2,
        Rule::Slide => matches!(instr, Instruction::Slide(n) if depth > *n),
        Rule::Update => matches!(instr, Instruction::Update(n) if depth >= n + 2),
        Rule::Pop => matches!(instr, Instruction::Pop(n) if depth >= *n),
        Rule::Alloc => matches!(instr, Instruction::Alloc(_)),
        Rule::Add => matches!(instr, Instruction::Add) && two_nums() && num(0).unwrap().checked_add(num(1).unwrap()).is_some(),
        Rule::Sub => matches!(instr, Instruction::Sub) && two_nums() && num(0).unwrap().checked_sub(num(1).unwrap()).is_some(),
        Rule::Mul => matches!(instr, Instruction::Mul) && two_nums() && num(0).unwrap().checked_mul(num(1).unwrap()).is_some(),
        Rule::Div => matches!(instr, Instruction::Div) && two_nums() && num(0).unwrap().checked_div(num(1).unwrap()).is_some(),
        Rule::Lt => matches!(instr, Instruction::Lt) && two_nums(),
        Rule::Neq => matches!(instr, Instruction::Neq) && two_nums(),
        Rule::Neg => matches!(instr, Instruction::Neg) && num(0).is_some_and(|n| n != i64::MIN),
        Rule::Cond => matches!(instr, Instruction::Cond(..)) && matches!(num(0), Some(0 | 1)),
        Rule::Eval => matches!(instr, Instruction::Eval) && depth >= 1,
        Rule::Pack => matches!(instr, Instruction::Pack { arity, .. } if depth >= *arity as usize),
        Rule::Casejump => match (instr, s.stack_at(0).map(|a| s.heap.get(a))) {
            (Instruction::Casejump(bs), Some(Ok(Node::Constr { tag, .. }))) => bs.iter().any(|(t, _)| t == tag),
            _ => false,
        },
        Rule::Split => match (instr, s.stack_at(0).map(|a| s.heap.get(a))) {
            (Instruction::Split(n), Some(Ok(Node::Constr { fields, .. }))) => fields.len() == *n,
            _ => false,
        },
        _ => matches!(instr, Instruction::Unwind) && unwind_rule(s) == Some(rule),
    }
}

fn unwind_rule(s: &MachineState) -> Option<Rule> {
    let top = s.stack_at(0)?;
    let target = s.heap.chase(top).ok()?;
    let empty = s.dump.is_empty();
    Some(match s.heap.get(target).ok()? {
        Node::Num(_) if empty => Rule::TerminateWithNum,
        Node::Num(_) => Rule::UnwindInt,
        Node::Constr { .. } if empty => Rule::TerminateWithConstr,
        Node::Constr { .. } => Rule::UnwindConstr,
        Node::App(..) => Rule::UnwindApp,
        Node::Global { arity, .. } if s.stack.len() > *arity => {
            // the spine below the global must consist of applications
            let spine_ok = (1..=*arity).all(|i| matches!(s.stack_at(i).map(|a| s.heap.get(a)), Some(Ok(Node::App(..)))));
            if !spine_ok {
                return None;
            }
            if empty {
                Rule::UnwindGlobalWithEmptyDump
            } else {
                Rule::UnwindGlobalWithNonEmptyDump
            }
        }
        Node::Global { .. } if empty => Rule::TerminateWithFunction,
        Node::Global { .. } => Rule::UnwindPartialApp,
        Node::Ind(_) => return None,
    })
}

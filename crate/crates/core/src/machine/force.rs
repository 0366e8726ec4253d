use super::{Addr, CodePtr, FinalResult, MachineError, MachineState, Node};
use crate::instruction::{Code, Instruction};
use crate::value::DeepValue;

/// Evaluates the result of a halted machine `depth` constructor levels
/// deep. Each component is reduced by a sub-run on the same heap, so work
/// already done is shared and the steps it takes land in `state.stats`.
/// Components below the limit become [`DeepValue::Truncated`]. `max_steps`
/// bounds the steps of all sub-runs together.
pub fn force_deep(state: &mut MachineState, depth: usize, max_steps: u64) -> Result<DeepValue, MachineError> {
    let top = state.stack_at(0).ok_or(MachineError::StackUnderflow { needed: 1, available: 0 })?;
    let start = state.stats.steps;
    let saved = (state.code.clone(), state.stack.clone(), state.dump.clone(), state.is_halted());
    let out = force_addr(state, top, depth, start + max_steps);
    state.code = saved.0;
    state.stack = saved.1;
    state.dump = saved.2;
    state.halted = saved.3;
    out
}

fn force_addr(state: &mut MachineState, addr: Addr, depth: usize, step_cap: u64) -> Result<DeepValue, MachineError> {
    let whnf = whnf(state, addr, step_cap)?;
    match whnf {
        FinalResult::Number(n) => Ok(DeepValue::Num(n)),
        FinalResult::Function { name, arity, .. } => Ok(DeepValue::Function { name, arity }),
        FinalResult::Constructor { tag, fields } if fields.is_empty() => Ok(DeepValue::Constr { tag, fields: vec![] }),
        FinalResult::Constructor { .. } if depth == 0 => Ok(DeepValue::Truncated),
        FinalResult::Constructor { tag, fields } => {
            let fields =
                fields.into_iter().map(|f| force_addr(state, f, depth - 1, step_cap)).collect::<Result<Vec<_>, _>>()?;
            Ok(DeepValue::Constr { tag, fields })
        }
    }
}

fn whnf(state: &mut MachineState, addr: Addr, step_cap: u64) -> Result<FinalResult, MachineError> {
    // values already in normal form need no sub-run
    let target = state.heap.chase(addr)?;
    match state.heap.get(target)? {
        Node::Num(n) => return Ok(FinalResult::Number(*n)),
        Node::Constr { tag, fields } => return Ok(FinalResult::Constructor { tag: *tag, fields: fields.clone() }),
        _ => {}
    }
    state.code = CodePtr::new(Code::new(vec![Instruction::Unwind]));
    state.stack = vec![addr];
    state.dump = Vec::new();
    state.halted = false;
    let budget = step_cap.saturating_sub(state.stats.steps);
    state.run(budget)
}

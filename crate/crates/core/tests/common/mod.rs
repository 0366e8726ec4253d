#![allow(dead_code)]

use std::path::PathBuf;

use gmachine::ast::{BinOp, CoreSC, Expr};
use gmachine::machine::{applicable_rules, check_heap_integrity, Rule};
use gmachine::oracle::{eval_cbn_deep, OracleError};
use gmachine::{compile_program, parse_program, CoreProgram, DeepValue, MachineError, MachineState};
use proptest::prelude::*;

pub const MAX_STEPS: u64 = 1_000_000;

/// Expected outcome of a corpus program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expect {
    Num(i64),
    /// Constructor result; checked by deep forcing.
    Constr,
    DivByZero,
}

pub const CORPUS: &[(&str, Expect)] = &[
    ("id_main", Expect::Num(3)),
    ("fac", Expect::Num(120)),
    ("fib", Expect::Num(13)),
    ("nfib", Expect::Num(287)),
    ("ski", Expect::Num(3)),
    ("incr", Expect::Num(5)),
    ("twice", Expect::Num(7)),
    ("div0", Expect::DivByZero),
    ("k_lazy", Expect::Num(2)),
    ("double", Expect::Num(6)),
    ("times_n", Expect::Num(120)),
    ("sieve", Expect::Num(13)),
    ("let_arith", Expect::Num(17)),
    ("case_arg", Expect::Num(42)),
    ("cycle", Expect::Constr),
    ("from", Expect::Constr),
];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.core"))
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

pub fn corpus_program(name: &str) -> CoreProgram {
    parse_program(&corpus_source(name)).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

/// Replaces the numeric argument of the first `call <digits>` in `src`,
/// e.g. `nfib 10` → `nfib 3`.
pub fn with_main_arg(src: &str, call: &str, arg: i64) -> String {
    let mut from = 0;
    while let Some(i) = src[from..].find(call).map(|i| i + from) {
        let rest = &src[i + call.len()..];
        let trimmed = rest.trim_start();
        let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 && trimmed.len() < rest.len() {
            let tail = &trimmed[digits..];
            return format!("{}{call} {arg}{tail}", &src[..i]);
        }
        from = i + call.len();
    }
    panic!("no `{call} <number>` in source")
}

pub fn machine(src: &str) -> MachineState {
    compile_program(&parse_program(src).expect("parse")).expect("compile")
}

/// Steps `state` to completion, checking the machine invariants before
/// and after every transition. Returns the number of steps taken.
pub fn run_checked(state: &mut MachineState, max_steps: u64) -> Result<u64, String> {
    let mut steps = 0;
    while !state.is_halted() && steps < max_steps {
        check_heap_integrity(state)?;
        let rules = applicable_rules(state);
        if rules.len() > 1 {
            return Err(format!("step {}: several rules apply: {rules:?}", state.stats.steps));
        }
        let dump_before = state.dump.len();
        let steps_before = state.stats.steps;
        match state.step() {
            Ok(rule) => {
                if rules != [rule] {
                    return Err(format!("step {}: took {rule:?}, predicted {rules:?}", steps_before));
                }
                let dump_after = state.dump.len();
                let grew = dump_after == dump_before + 1;
                if grew != (rule == Rule::Eval) || dump_after + 1 < dump_before {
                    return Err(format!("dump went {dump_before} -> {dump_after} under {rule:?}"));
                }
                if state.stats.steps != steps_before + 1 {
                    return Err("step counter did not advance by one".into());
                }
            }
            Err(e) => {
                if !rules.is_empty() {
                    return Err(format!("step failed with {e:?} although {rules:?} applied"));
                }
                if state.stats.steps != steps_before {
                    return Err("failed step was counted".into());
                }
                return Ok(steps);
            }
        }
        steps += 1;
    }
    check_heap_integrity(state)?;
    Ok(steps)
}

/// Machine and oracle results for one program, forced `depth` levels.
pub fn machine_deep(p: &CoreProgram, depth: usize) -> Result<DeepValue, MachineError> {
    let mut m = compile_program(p).expect("compile");
    m.run(MAX_STEPS)?;
    gmachine::force_deep(&mut m, depth, MAX_STEPS)
}

pub fn oracle_deep(p: &CoreProgram, depth: usize, fuel: u64) -> Result<DeepValue, OracleError> {
    eval_cbn_deep(p, fuel, depth)
}

/// Differential verdict: `Ok(true)` when both engines agree, `Ok(false)`
/// when the oracle ran out of budget, `Err` on a disagreement.
pub fn differential(p: &CoreProgram, depth: usize, fuel: u64) -> Result<bool, String> {
    let m = machine_deep(p, depth);
    let o = oracle_deep(p, depth, fuel);
    match (&m, &o) {
        (_, Err(OracleError::FuelExhausted | OracleError::DepthExceeded(_))) => Ok(false),
        (Ok(a), Ok(b)) if a.agrees_with(b) => Ok(true),
        (Err(_), Err(_)) => Ok(true),
        _ => Err(format!("machine {m:?} vs oracle {o:?}")),
    }
}

/// Runs `f` on a thread with a large stack; the oracle recurses deeply.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new().stack_size(512 << 20).spawn(f).expect("spawn").join().expect("thread panicked")
}

/// Closed arithmetic programs over `let` and `if`, nested at most `depth`
/// levels. Literals stay small so overflow is rare.
pub fn arb_expr(depth: u32) -> impl Strategy<Value = Expr> {
    arb_scoped(depth, Vec::new())
}

fn arb_scoped(depth: u32, scope: Vec<String>) -> BoxedStrategy<Expr> {
    let mut leaves: Vec<BoxedStrategy<Expr>> = vec![(-3i64..12).prop_map(Expr::num).boxed()];
    if !scope.is_empty() {
        leaves.push(proptest::sample::select(scope.clone()).prop_map(|v: String| Expr::var(&v)).boxed());
    }
    let leaf = proptest::strategy::Union::new(leaves).boxed();
    if depth == 0 {
        return leaf;
    }
    let sub = arb_scoped(depth - 1, scope.clone());
    let op = proptest::sample::select(BinOp::ALL.to_vec());
    let binop = (op, sub.clone(), sub.clone()).prop_map(|(op, a, b)| Expr::binop(op, a, b));
    let cmp = proptest::sample::select(vec![BinOp::Lt, BinOp::Neq]);
    let cond = (cmp, sub.clone(), sub.clone()).prop_map(|(op, a, b)| Expr::binop(op, a, b));
    let if_ = (cond, sub.clone(), sub.clone()).prop_map(|(c, t, e)| Expr::if_(c, t, e));
    let neg = sub.clone().prop_map(Expr::neg);
    let name = format!("v{}", scope.len());
    let mut inner = scope;
    inner.push(name.clone());
    let body = arb_scoped(depth - 1, inner);
    let let_ = (sub, body).prop_map(move |(e, b)| Expr::let_(vec![(name.as_str(), e)], b));
    prop_oneof![2 => leaf, 3 => binop, 2 => if_, 1 => neg, 2 => let_].boxed()
}

/// A one-supercombinator program `main = e`.
pub fn main_program(e: Expr) -> CoreProgram {
    CoreProgram::new(vec![CoreSC::new("main", &[], e)])
}

mod common;

use common::*;
use gmachine::instruction::InstrKind;
use gmachine::machine::run;
use gmachine::{compile_program, FinalResult};
use proptest::prelude::*;

#[test]
fn corpus_invariants_hold_at_every_step() {
    for (name, _) in CORPUS {
        let mut m = machine(&corpus_source(name));
        if let Err(e) = run_checked(&mut m, 50_000) {
            panic!("{name}: {e}");
        }
    }
}

#[test]
fn corpus_results() {
    for (name, expect) in CORPUS {
        let mut m = machine(&corpus_source(name));
        let r = m.run(MAX_STEPS);
        match expect {
            Expect::Num(n) => assert_eq!(r, Ok(FinalResult::Number(*n)), "{name}"),
            Expect::Constr => assert!(matches!(r, Ok(FinalResult::Constructor { .. })), "{name}: {r:?}"),
            Expect::DivByZero => assert_eq!(r, Err(gmachine::MachineError::DivisionByZero), "{name}"),
        }
    }
}

#[test]
fn instruction_counts_sum_to_steps() {
    for (name, _) in CORPUS {
        let mut m = machine(&corpus_source(name));
        let _ = m.run(MAX_STEPS);
        let total: u64 = m.stats.counts().map(|(_, n)| n).sum();
        assert_eq!(total, m.stats.steps, "{name}");
    }
}

#[test]
fn tracing_does_not_change_the_run() {
    for (name, _) in CORPUS {
        let p = corpus_program(name);
        let mut plain = compile_program(&p).unwrap();
        let mut traced = compile_program(&p).unwrap();
        let a = run(&mut plain, MAX_STEPS, false);
        let b = run(&mut traced, MAX_STEPS, true);
        assert_eq!(a.result, b.result, "{name}");
        assert_eq!(a.stats, b.stats, "{name}");
        let trace = b.trace.unwrap();
        assert_eq!(trace.len() as u64, b.stats.steps, "{name}");
        assert!(trace.iter().enumerate().all(|(i, r)| r.step == i as u64 + 1));
    }
}

#[test]
fn sharing_allocates_one_sum() {
    let mut m = machine(&corpus_source("double"));
    assert_eq!(m.run(MAX_STEPS), Ok(FinalResult::Number(6)));
    assert_eq!(m.stats.count(InstrKind::Add), 2);
    let threes = m.heap.iter().filter(|(_, n)| matches!(n, gmachine::machine::Node::Num(3))).count();
    assert_eq!(threes, 1);
}

#[test]
fn force_from_to_depth_three() {
    let mut m = machine(&corpus_source("from"));
    m.run(MAX_STEPS).unwrap();
    let v = gmachine::force_deep(&mut m, 3, MAX_STEPS).unwrap();
    let heads: Vec<String> = v.list_heads().iter().map(|h| h.to_string()).collect();
    assert_eq!(heads, ["1", "2", "3"]);
    assert_eq!(v.to_string(), "Pack{2,2}(1, Pack{2,2}(2, Pack{2,2}(3, ...)))");
}

#[test]
fn step_limit_stops_the_run() {
    let mut m = machine(&corpus_source("nfib"));
    assert_eq!(m.run(100), Err(gmachine::MachineError::StepLimitExceeded(100)));
    assert_eq!(m.stats.steps, 100);
    // the run can be resumed
    assert_eq!(m.run(MAX_STEPS), Ok(FinalResult::Number(287)));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_programs_keep_invariants(e in arb_expr(5)) {
        let mut m = compile_program(&main_program(e)).unwrap();
        let r = run_checked(&mut m, 100_000);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

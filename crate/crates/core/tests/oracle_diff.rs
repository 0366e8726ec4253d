mod common;

use common::*;
use gmachine::oracle::{eval_cbn, OracleError, Value};
use proptest::prelude::*;

#[test]
fn oracle_agrees_on_corpus() {
    with_big_stack(|| {
        for (name, expect) in CORPUS {
            let depth = if *expect == Expect::Constr { 8 } else { 0 };
            match differential(&corpus_program(name), depth, 20_000_000) {
                Ok(true) => {}
                Ok(false) => panic!("{name}: oracle budget exhausted"),
                Err(e) => panic!("{name}: {e}"),
            }
        }
    });
}

#[test]
fn oracle_reference_examples() {
    with_big_stack(|| {
        let fac = eval_cbn(&corpus_program("fac"), 1_000_000).unwrap();
        assert_eq!(fac.as_int(), Some(120));
        let k = eval_cbn(&corpus_program("k_lazy"), 1_000).unwrap();
        assert_eq!(k.as_int(), Some(2));
        let sum = eval_cbn(&gmachine::parse_program("main = 1 + 2").unwrap(), 10).unwrap();
        assert_eq!(sum.as_int(), Some(3));
        assert!(matches!(eval_cbn(&corpus_program("div0"), 10), Err(OracleError::DivisionByZero)));
    });
}

#[test]
fn oracle_does_not_share() {
    // without sharing the argument of double is evaluated twice, so it
    // needs more reductions than a program that names the sum once
    let fuel = 1_000;
    let mut shared = gmachine::oracle::Oracle::new(&corpus_program("double"), fuel).unwrap();
    assert!(matches!(shared.eval_main(), Ok(Value::IntV(6))));
    let mut direct = gmachine::oracle::Oracle::new(&gmachine::parse_program("main = 3 + 3").unwrap(), fuel).unwrap();
    direct.eval_main().unwrap();
    assert!(fuel - shared.fuel() > fuel - direct.fuel() + 1);
}

#[test]
fn oracle_depth_guard() {
    with_big_stack(|| {
        let p = gmachine::parse_program("sum n = if n < 1 then 0 else n + sum (n - 1); main = sum 100000").unwrap();
        let mut o = gmachine::oracle::Oracle::new(&p, u64::MAX).unwrap().with_depth_limit(500);
        assert_eq!(o.eval_main().unwrap_err(), OracleError::DepthExceeded(500));
    });
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn machine_matches_oracle_on_random_programs(e in arb_expr(5)) {
        let p = main_program(e);
        let verdict = differential(&p, 0, 5_000_000);
        prop_assert_eq!(verdict, Ok(true), "{}", p);
    }
}

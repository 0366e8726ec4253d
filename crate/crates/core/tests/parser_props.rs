mod common;

use common::*;
use gmachine::parse_program;
use gmachine::parser::parse_program_bytes;
use proptest::prelude::*;

#[test]
fn corpus_reprints_to_the_same_program() {
    for (name, _) in CORPUS {
        let p = corpus_program(name);
        let text = p.to_string();
        assert_eq!(parse_program(&text).unwrap(), p, "{name}:\n{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printing_then_parsing_is_identity(e in arb_expr(5)) {
        let p = main_program(e);
        let text = p.to_string();
        let back = parse_program(&text);
        prop_assert!(back.is_ok(), "{}: {:?}", text, back);
        prop_assert_eq!(back.unwrap(), p);
    }

    #[test]
    fn arbitrary_bytes_do_not_crash(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_program_bytes(&bytes);
    }

    #[test]
    fn token_soup_does_not_crash(toks in proptest::collection::vec(proptest::sample::select(vec![
        "let", "letrec", "in", "case", "of", "if", "then", "else", "Pack", "{", "}", "(", ")", "<", ">", "->",
        ";", "=", ",", "+", "-", "*", "/", "/=", "negate", "x", "main", "1", "-2", "99999999999999999999",
    ]), 0..40)) {
        let _ = parse_program(&toks.join(" "));
    }
}

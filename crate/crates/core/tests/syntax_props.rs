use folreward::syntax::{
    alternative_parses, catalan, enumerate_chain, parse, tokenize, BinOp, BracketOptions, FolExpr, ParseMode,
    Quantifier, Style,
};
use proptest::prelude::*;

fn arb_atom() -> impl Strategy<Value = FolExpr> {
    let preds = prop::sample::select(vec!["Human", "Mortal", "Dog", "Likes", "Teacher", "Red1"]);
    let args = prop::collection::vec(prop::sample::select(vec!["x", "y", "z", "socrates", "bob"]), 0..3);
    (preds, args).prop_map(|(p, a)| FolExpr::atom(p, &a))
}

fn arb_expr() -> impl Strategy<Value = FolExpr> {
    let ops = prop::sample::select(vec![BinOp::And, BinOp::Or, BinOp::Implies, BinOp::Iff, BinOp::Xor]);
    arb_atom().prop_recursive(5, 40, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(FolExpr::not),
            (ops.clone(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| FolExpr::binary(op, l, r)),
            (any::<bool>(), prop::sample::select(vec!["x", "y", "z"]), inner).prop_map(|(all, v, b)| {
                FolExpr::quantified(if all { Quantifier::Forall } else { Quantifier::Exists }, v, b)
            }),
        ]
    })
}

/// Connective and quantifier skeleton, ignoring names.
fn skeleton(e: &FolExpr) -> String {
    match e {
        FolExpr::Quantified { quantifier, body, .. } => format!("{quantifier:?}({})", skeleton(body)),
        FolExpr::Not { body } => format!("Not({})", skeleton(body)),
        FolExpr::Binary { op, left, right } => format!("{op:?}({},{})", skeleton(left), skeleton(right)),
        FolExpr::Atom { args, .. } => format!("A{}", args.len()),
    }
}

/// Distinct bracketings of a chain of `k` operators, built by brute force.
fn brute_bracketings(lo: usize, hi: usize) -> Vec<String> {
    if lo == hi {
        return vec![format!("x{lo}")];
    }
    let mut out = Vec::new();
    for split in lo..hi {
        for l in brute_bracketings(lo, split) {
            for r in brute_bracketings(split + 1, hi) {
                out.push(format!("({l} {r})"));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn render_parse_round_trip(e in arb_expr()) {
        for style in [Style::Unicode, Style::Ascii] {
            let text = e.render(style);
            prop_assert_eq!(parse(&text, ParseMode::Precedence).unwrap(), e.clone(), "{}", text);
        }
    }

    #[test]
    fn styles_share_token_kinds(e in arb_expr()) {
        let kinds = |s: Style| tokenize(&e.render(s)).unwrap().into_iter().map(|t| t.kind).collect::<Vec<_>>();
        prop_assert_eq!(kinds(Style::Unicode), kinds(Style::Ascii));
    }

    #[test]
    fn canonicalize_is_idempotent_and_keeps_skeleton(e in arb_expr()) {
        let c = e.canonicalize();
        prop_assert_eq!(c.canonicalize(), c.clone());
        prop_assert_eq!(skeleton(&c), skeleton(&e));
    }

    #[test]
    fn atoms_are_distinct(e in arb_expr()) {
        let atoms = e.canonicalize().atoms();
        let mut texts: Vec<_> = atoms.iter().map(|a| a.canonical_text.clone()).collect();
        texts.sort();
        texts.dedup();
        prop_assert_eq!(texts.len(), atoms.len());
    }
}

fn chain(ops: &[BinOp]) -> (Vec<FolExpr>, Vec<BinOp>) {
    let operands = (0..=ops.len()).map(|i| FolExpr::atom(&format!("P{i}"), &["x"])).collect();
    (operands, ops.to_vec())
}

#[test]
fn full_enumeration_matches_brute_force() {
    for k in 1..=8 {
        let (operands, ops) = chain(&vec![BinOp::Or; k]);
        let got = enumerate_chain(&operands, &ops, &BracketOptions::full()).unwrap();
        let expected = brute_bracketings(0, k).len();
        assert_eq!(got.trees.len(), expected, "k = {k}");
        assert_eq!(expected as u128, catalan(k));
    }
}

#[test]
fn chunked_never_exceeds_full() {
    for k in 1..=9 {
        let (operands, ops) = chain(&vec![BinOp::And; k]);
        let full = enumerate_chain(&operands, &ops, &BracketOptions::full()).unwrap().trees.len();
        for m in [3, 4, 5] {
            let chunked = enumerate_chain(&operands, &ops, &BracketOptions::chunked(m)).unwrap().trees.len();
            assert!(chunked <= full, "k {k} m {m}");
            if k < m {
                assert_eq!(chunked, full, "k {k} m {m}");
            }
        }
    }
}

#[test]
fn precedence_reading_comes_first() {
    let text = "A(x) ∧ B(x) → C(x) ∨ D(x)";
    let alts = alternative_parses(text, &BracketOptions::full()).unwrap();
    assert_eq!(alts.trees[0], parse(text, ParseMode::Precedence).unwrap());
    assert_eq!(alts.trees.len(), 5);
}

#[test]
fn fully_parenthesized_mode_rejects_bare_chains() {
    assert!(parse("A(x) ∧ B(x) ∧ C(x)", ParseMode::FullyParenthesized).is_err());
    assert!(parse("((A(x) ∧ B(x)) ∧ C(x))", ParseMode::FullyParenthesized).is_ok());
}

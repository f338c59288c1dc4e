mod common;

use common::{all_injective_matchings, edit_distance, oracle_score, random_formula};
use folreward::le::{le_score, LeConfig, LeMode};
use folreward::similarity::{is_related, levenshtein, ngram_cosine, SimilarityConfig};
use folreward::syntax::Style;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn levenshtein_is_a_metric(a in "[a-zA-Z]{0,10}", b in "[a-zA-Z]{0,10}", c in "[a-zA-Z]{0,10}") {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert_eq!(levenshtein(&a, &b), edit_distance(&a, &b));
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(a in "[a-zA-Z()]{0,14}", b in "[a-zA-Z()]{0,14}") {
        let cfg = SimilarityConfig::default();
        let ab = ngram_cosine(&a, &b, &cfg);
        prop_assert_eq!(ab, ngram_cosine(&b, &a, &cfg));
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert!(is_related(&a, &a, &cfg));
        }
    }

    #[test]
    fn scores_are_reflexive_and_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, 4, 4).render(Style::Unicode);
        let g = random_formula(&mut rng, 4, 4).render(Style::Ascii);
        let cfg = LeConfig::default();
        for mode in [LeMode::Original, LeMode::Optimized] {
            prop_assert_eq!(le_score(&f, &f, mode, &cfg).unwrap().score, 1.0);
            let s = le_score(&g, &f, mode, &cfg).unwrap().score;
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}

#[test]
fn original_mode_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // one reading per side so the oracle and the engine see the same trees
    let cfg = LeConfig { chunk_size: Some(2), ..LeConfig::default() };
    let mut checked = 0;
    for _ in 0..150 {
        let p = random_formula(&mut rng, 3, 3);
        let r = random_formula(&mut rng, 3, 3);
        let (pc, rc) = (p.canonicalize(), r.canonicalize());
        let pt = pc.render(Style::Unicode);
        let alts = folreward::syntax::alternative_parses(&pt, &cfg.bracket_options()).unwrap();
        if alts.trees.len() != 1 {
            continue;
        }
        let best = all_injective_matchings(pc.atoms().len(), rc.atoms().len())
            .iter()
            .map(|m| oracle_score(&pc, &rc, m))
            .fold(0.0f64, f64::max);
        let got = le_score(&pt, &rc.render(Style::Unicode), LeMode::Original, &cfg).unwrap();
        assert!((got.score - best).abs() < 1e-12, "{pt} vs {}: {} != {best}", rc.render(Style::Unicode), got.score);
        checked += 1;
    }
    assert!(checked >= 50, "only {checked} single-reading pairs");
}

#[test]
fn equivalence_laws_score_one() {
    let cfg = LeConfig::default();
    let laws = [
        ("Human(x) ∧ Mortal(x)", "Mortal(x) ∧ Human(x)"),
        ("(Human(x) ∨ Dog(x)) ∨ Wise(x)", "Human(x) ∨ (Dog(x) ∨ Wise(x))"),
        ("¬(Human(x) ∧ Mortal(x))", "¬Human(x) ∨ ¬Mortal(x)"),
        ("Human(x) → Mortal(x)", "¬Mortal(x) → ¬Human(x)"),
        ("¬¬Human(x)", "Human(x)"),
    ];
    for (a, b) in laws {
        for mode in [LeMode::Original, LeMode::Optimized] {
            assert_eq!(le_score(a, b, mode, &cfg).unwrap().score, 1.0, "{a} / {b}");
        }
    }
}

#[test]
fn negation_scores_zero() {
    let cfg = LeConfig::default();
    for f in ["Human(x) → Mortal(x)", "∀x (Dog(x) ∧ Animal(x))", "Wise(x) ⊕ Teacher(x)"] {
        let neg = format!("¬({f})");
        assert_eq!(le_score(&neg, f, LeMode::Optimized, &cfg).unwrap().score, 0.0, "{f}");
    }
}

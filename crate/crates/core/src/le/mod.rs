//! Logical-equivalence (LE) scoring between a predicted and a reference
//! formula.
//!
//! Both formulas are canonicalized, reduced to their propositional skeletons
//! and compared on every row of the joint truth table under an atom binding.
//! The score is the fraction of rows on which they agree. Two binding
//! searches are provided: [`LeMode::Original`] (exhaustive, edit-distance
//! ordered) and [`LeMode::Optimized`] (candidate-restricted, reported as
//! LE*).

mod binding;
mod truth_table;

use serde::{Deserialize, Serialize};

pub use binding::{bind_optimized, bind_original, BindingMap, BindingOutcome, CandidateGraph};

use crate::similarity::{ConfigError, NgramCosine, SimilarityBackend, SimilarityConfig};
use crate::syntax::{alternative_parses, parse, BracketOptions, FolExpr, ParseMode, Style, SyntaxError};
use binding::{bind_optimized_with, bind_original_with, Scorer};

pub const DEFAULT_MAX_ATOMS: usize = 16;
pub const DEFAULT_MAX_FACTORIAL_ATOMS: usize = 7;
pub const DEFAULT_COMPONENT_CAP: usize = 10_000;
pub const DEFAULT_CHUNK_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeMode {
    Original,
    #[default]
    Optimized,
}

impl std::str::FromStr for LeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(LeMode::Original),
            "optimized" => Ok(LeMode::Optimized),
            other => Err(format!("unknown mode {other:?} (expected original|optimized)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest truth table (in variables) that will be enumerated.
    pub max_atoms: usize,
    /// Largest atom set per side accepted by the exhaustive search.
    pub max_factorial_atoms: usize,
    /// Most joint component assignments scored by the optimized search.
    pub component_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_atoms: DEFAULT_MAX_ATOMS,
            max_factorial_atoms: DEFAULT_MAX_FACTORIAL_ATOMS,
            component_cap: DEFAULT_COMPONENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeConfig {
    pub similarity: SimilarityConfig,
    pub limits: Limits,
    /// Operands per chunk when enumerating prediction bracketings; `None`
    /// enumerates all of them.
    pub chunk_size: Option<usize>,
    pub max_operators: usize,
    pub max_trees: usize,
}

impl Default for LeConfig {
    fn default() -> Self {
        LeConfig {
            similarity: SimilarityConfig::default(),
            limits: Limits::default(),
            chunk_size: Some(DEFAULT_CHUNK_SIZE),
            max_operators: crate::syntax::DEFAULT_MAX_OPERATORS,
            max_trees: crate::syntax::DEFAULT_MAX_TREES,
        }
    }
}

impl LeConfig {
    pub fn bracket_options(&self) -> BracketOptions {
        BracketOptions { chunk_size: self.chunk_size, max_operators: self.max_operators, max_trees: self.max_trees }
    }

    pub fn validate(&self) -> Result<(), LeError> {
        self.similarity.validate()?;
        if let Some(m) = self.chunk_size {
            if m < 2 {
                return Err(LeError::Syntax { side: Side::Prediction, source: SyntaxError::InvalidChunkSize { chunk_size: m } });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Prediction,
    Reference,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Prediction => "prediction",
            Side::Reference => "reference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LeError {
    #[error("{side}: {source}")]
    Syntax { side: Side, source: SyntaxError },
    #[error("truth table over {atoms} atoms exceeds the cap of {cap}")]
    AtomCapExceeded { atoms: usize, cap: usize },
    #[error("exhaustive binding over {pred}x{reference} atoms exceeds the cap of {cap}; use optimized mode")]
    FactorialCapExceeded { pred: usize, reference: usize, cap: usize },
    #[error("invalid binding: {0}")]
    InvalidBinding(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl LeError {
    /// True when a configured limit, not the input text, stopped scoring.
    pub fn is_cap(&self) -> bool {
        match self {
            LeError::AtomCapExceeded { .. } | LeError::FactorialCapExceeded { .. } => true,
            LeError::Syntax { source, .. } => source.is_cap(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeReport {
    pub score: f64,
    pub binding: BindingMap,
    /// Variables in the winning truth table.
    pub atom_count: usize,
    pub pred_atoms: usize,
    pub ref_atoms: usize,
    /// Truth-table rows evaluated over the whole search.
    pub assignments_evaluated: u64,
    pub bindings_explored: u64,
    pub trees_explored: usize,
    pub mode: LeMode,
    pub truncated: bool,
    /// Canonical rendering of the prediction reading that won.
    pub best_tree: String,
}

/// Truth-table agreement of two canonicalized formulas under `binding`.
pub fn propositional_score(
    pred: &FolExpr,
    reference: &FolExpr,
    binding: &BindingMap,
    max_atoms: usize,
) -> Result<f64, LeError> {
    let mut scorer = Scorer::new(pred, reference, max_atoms);
    let assign = binding.assignment(&scorer.pred_atoms, &scorer.ref_atoms)?;
    scorer.score(&assign)
}

/// Scores `pred_text` against `ref_text` with the built-in n-gram backend.
pub fn le_score(pred_text: &str, ref_text: &str, mode: LeMode, config: &LeConfig) -> Result<LeReport, LeError> {
    let backend = NgramCosine::new(config.similarity.clone());
    le_score_with(pred_text, ref_text, mode, config, &backend)
}

/// As [`le_score`] with a caller-supplied similarity backend.
///
/// The reference is read with the precedence table only. Every bracketing
/// reading of the prediction is scored and the maximum kept (earliest
/// reading on ties).
pub fn le_score_with(
    pred_text: &str,
    ref_text: &str,
    mode: LeMode,
    config: &LeConfig,
    backend: &dyn SimilarityBackend,
) -> Result<LeReport, LeError> {
    config.validate()?;
    let reference = parse(ref_text, ParseMode::Precedence)
        .map_err(|source| LeError::Syntax { side: Side::Reference, source })?
        .canonicalize();
    let readings = alternative_parses(pred_text, &config.bracket_options())
        .map_err(|source| LeError::Syntax { side: Side::Prediction, source })?;

    let mut best: Option<(BindingOutcome, FolExpr, usize)> = None;
    let mut bindings_explored = 0;
    let mut assignments_evaluated = 0;
    let mut truncated = false;
    for tree in &readings.trees {
        let tree = tree.canonicalize();
        let mut scorer = Scorer::new(&tree, &reference, config.limits.max_atoms);
        let pred_atoms = scorer.pred_atoms.len();
        let outcome = match mode {
            LeMode::Original => bind_original_with(&mut scorer, &config.limits)?,
            LeMode::Optimized => bind_optimized_with(&mut scorer, backend, config.similarity.threshold, &config.limits)?,
        };
        bindings_explored += outcome.bindings_explored;
        assignments_evaluated += outcome.assignments_evaluated;
        truncated |= outcome.truncated;
        if best.as_ref().is_none_or(|(b, ..)| outcome.score > b.score) {
            best = Some((outcome, tree, pred_atoms));
        }
    }

    let (outcome, tree, pred_atoms) = best.expect("at least one reading");
    Ok(LeReport {
        score: outcome.score,
        binding: outcome.binding,
        atom_count: outcome.atom_count,
        pred_atoms,
        ref_atoms: reference.atoms().len(),
        assignments_evaluated,
        bindings_explored,
        trees_explored: readings.trees.len(),
        mode,
        truncated,
        best_tree: tree.render(Style::Unicode),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::AtomicUnit;

    fn canon(s: &str) -> FolExpr {
        parse(s, ParseMode::Precedence).unwrap().canonicalize()
    }

    fn ident_score(p: &str, r: &str) -> f64 {
        let (p, r) = (canon(p), canon(r));
        let b = BindingMap::identity(&p.atoms(), &r.atoms());
        propositional_score(&p, &r, &b, DEFAULT_MAX_ATOMS).unwrap()
    }

    /// Row-by-row oracle using `eval_propositional` and explicit variable
    /// renaming, independent of the bit-column evaluator.
    fn oracle_score(pred: &FolExpr, reference: &FolExpr, pairs: &[(usize, usize)]) -> f64 {
        let pa = pred.atoms();
        let ra = reference.atoms();
        let mut names: Vec<String> = ra.iter().map(|a| a.canonical_text.clone()).collect();
        let mut rename = std::collections::HashMap::new();
        for (i, a) in pa.iter().enumerate() {
            let target = match pairs.iter().find(|(p, _)| *p == i) {
                Some((_, r)) => ra[*r].canonical_text.clone(),
                None => {
                    let fresh = format!("__unbound{i}()");
                    names.push(fresh.clone());
                    fresh
                }
            };
            rename.insert(a.canonical_text.clone(), target);
        }
        let n = names.len();
        let mut agree = 0;
        for row in 0..(1u32 << n) {
            let value_of = |name: &str| {
                let k = names.iter().position(|x| x == name).unwrap();
                (row >> k) & 1 == 1
            };
            let p = pred.eval_propositional(&|t: &str| value_of(&rename[t]));
            let r = reference.eval_propositional(&|t: &str| value_of(t));
            if p == r {
                agree += 1;
            }
        }
        agree as f64 / (1u32 << n) as f64
    }

    #[test]
    fn propositional_examples() {
        assert_eq!(ident_score("P(a) ∧ Q(a)", "P(a) ∧ Q(a)"), 1.0);
        assert_eq!(ident_score("P(a)", "¬P(a)"), 0.0);
        let (p, r) = (canon("P(a)"), canon("P(a) ∧ Q(a)"));
        assert_eq!(oracle_score(&p, &r, &[(0, 0)]), 0.75);
        assert_eq!(ident_score("P(a)", "P(a) ∧ Q(a)"), 0.75);
    }

    #[test]
    fn unbound_atoms_are_fresh_variables() {
        let (p, r) = (canon("P(a)"), canon("P(a)"));
        let empty = BindingMap::empty(&p.atoms(), &r.atoms());
        // P vs P' over two independent variables agree on half the rows
        assert_eq!(propositional_score(&p, &r, &empty, 16).unwrap(), 0.5);
        assert_eq!(oracle_score(&p, &r, &[]), 0.5);
    }

    #[test]
    fn atom_cap() {
        let p = canon("A ∧ B ∧ C");
        let r = canon("D ∧ E");
        let empty = BindingMap::empty(&p.atoms(), &r.atoms());
        assert_eq!(
            propositional_score(&p, &r, &empty, 4),
            Err(LeError::AtomCapExceeded { atoms: 5, cap: 4 })
        );
    }

    #[test]
    fn binding_validation() {
        let p = canon("A ∧ B").atoms();
        let r = canon("C ∧ D").atoms();
        assert!(BindingMap::from_pairs(&p, &r, &[(0, 1), (1, 0)]).is_ok());
        assert!(BindingMap::from_pairs(&p, &r, &[(0, 1), (1, 1)]).is_err());
        assert!(BindingMap::from_pairs(&p, &r, &[(0, 0), (0, 1)]).is_err());
        assert!(BindingMap::from_pairs(&p, &r, &[(2, 0)]).is_err());
        let foreign = BindingMap {
            pairs: vec![(AtomicUnit::new("Z", &[]), r[0].clone())],
            unbound_pred: vec![],
            unbound_ref: vec![],
        };
        assert!(matches!(
            propositional_score(&canon("A ∧ B"), &canon("C ∧ D"), &foreign, 16),
            Err(LeError::InvalidBinding(_))
        ));
    }

    #[test]
    fn original_binding_examples() {
        let limits = Limits::default();
        let f = canon("∀x (Mortal(x) → Person(x))");
        let out = bind_original(&f, &f, &limits).unwrap();
        assert_eq!(out.score, 1.0);
        assert!(out.binding.pairs.iter().all(|(a, b)| a == b));
        assert_eq!(out.bindings_explored, 2);

        let p = canon("Angry(x) → NonPhys(x)");
        let r = canon("Anger(x) → NonPhysical(x)");
        let out = bind_original(&p, &r, &limits).unwrap();
        assert_eq!(out.score, 1.0);
        let names: Vec<(String, String)> =
            out.binding.pairs.iter().map(|(a, b)| (a.predicate.clone(), b.predicate.clone())).collect();
        assert_eq!(names, vec![("Angry".into(), "Anger".into()), ("NonPhys".into(), "NonPhysical".into())]);
        // brute force: both 2-element matchings, the straight one wins
        assert_eq!(oracle_score(&p, &r, &[(0, 0), (1, 1)]), 1.0);
        assert_eq!(oracle_score(&p, &r, &[(0, 1), (1, 0)]), 0.5);

        let out = bind_original(&canon("P(a)"), &canon("Q(b)"), &limits).unwrap();
        assert_eq!(out.score, 1.0);
        assert_eq!(out.binding.len(), 1);
    }

    #[test]
    fn original_unequal_sizes_and_cap() {
        let limits = Limits::default();
        let out = bind_original(&canon("A ∧ B ∧ C"), &canon("A ∧ B"), &limits).unwrap();
        // 3 · 2 injective maps from the reference side into the prediction side
        assert_eq!(out.bindings_explored, 6);
        assert_eq!(out.binding.unbound_pred.len(), 1);
        let big = canon("A ∧ B ∧ C ∧ D ∧ E ∧ F ∧ G ∧ H");
        assert!(matches!(
            bind_original(&big, &big, &limits),
            Err(LeError::FactorialCapExceeded { pred: 8, reference: 8, cap: 7 })
        ));
    }

    #[test]
    fn optimized_binding_examples() {
        let limits = Limits::default();
        let backend = NgramCosine::default();
        let f = canon("∀x∀y (Push(x, y) ∧ NotHurt(x, y) → Anger(x, y))");
        let out = bind_optimized(&f, &f, &backend, 0.6, &limits).unwrap();
        assert_eq!(out.score, 1.0);
        assert_eq!(out.binding.len(), 3);

        // nothing clears the threshold: every atom is a fresh variable
        let p = canon("Alpha(a) ∧ Beta(a)");
        let r = canon("Gamma(b) ∧ Delta(b)");
        let out = bind_optimized(&p, &r, &backend, 0.6, &limits).unwrap();
        assert!(out.binding.is_empty());
        let empty = BindingMap::empty(&p.atoms(), &r.atoms());
        assert_eq!(out.score, propositional_score(&p, &r, &empty, 16).unwrap());
        assert_eq!(out.atom_count, 4);
        assert_eq!(out.bindings_explored, 1);
    }

    #[test]
    fn optimized_component_matches_brute_force() {
        // Three near-identical predicates form one 3x3 component.
        let p = canon("Redcolour1(a) ∧ ¬Redcolour2(a) → Redcolour3(a)");
        let r = canon("Redcolour3(a) ∧ ¬Redcolour1(a) → Redcolour2(a)");
        let backend = NgramCosine::default();
        let graph = CandidateGraph::build(&p.atoms(), &r.atoms(), &backend, 0.6);
        assert_eq!(graph.components.len(), 1);
        assert_eq!(graph.components[0].0.len(), 3);
        let out = bind_optimized(&p, &r, &backend, 0.6, &Limits::default()).unwrap();
        assert_eq!(out.bindings_explored, 6);

        let mut best = 0.0f64;
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let pairs: Vec<(usize, usize)> = perm.iter().enumerate().map(|(i, &j)| (i, j)).collect();
            best = best.max(oracle_score(&p, &r, &pairs));
        }
        assert_eq!(out.score, best);
        assert_eq!(out.score, 1.0);
    }

    #[test]
    fn component_cap_truncates() {
        let p = canon("Redcolour1(a) ∧ Redcolour2(a) ∧ Redcolour3(a) ∧ Redcolour4(a)");
        let limits = Limits { component_cap: 5, ..Limits::default() };
        let out = bind_optimized(&p, &p, &NgramCosine::default(), 0.6, &limits).unwrap();
        assert!(out.truncated);
        assert!(out.bindings_explored <= 5);
    }

    #[test]
    fn le_score_examples() {
        let cfg = LeConfig::default();
        for mode in [LeMode::Original, LeMode::Optimized] {
            let f = "∀x (Mortal(x) → Person(x))";
            assert_eq!(le_score(f, f, mode, &cfg).unwrap().score, 1.0);
            assert_eq!(le_score("P(a) → Q(a)", "¬P(a) ∨ Q(a)", mode, &cfg).unwrap().score, 1.0);
            let rep = le_score("A(x) ∧ B(x) → C(x)", "(A(x) ∧ B(x)) → C(x)", mode, &cfg).unwrap();
            assert_eq!(rep.score, 1.0);
            assert_eq!(rep.trees_explored, 2);
        }
    }

    #[test]
    fn le_score_picks_the_matching_bracketing() {
        // precedence reads (A ∧ B) ∨ C; the reference wants A ∧ (B ∨ C)
        let cfg = LeConfig::default();
        let rep = le_score("Aa(x) ∧ Bb(x) ∨ Cc(x)", "Aa(x) ∧ (Bb(x) ∨ Cc(x))", LeMode::Optimized, &cfg).unwrap();
        assert_eq!(rep.score, 1.0);
        assert_eq!(rep.best_tree, "Aa(x) ∧ (Bb(x) ∨ Cc(x))");
        // precedence-only reading scores lower
        let p = canon("Aa(x) ∧ Bb(x) ∨ Cc(x)");
        let r = canon("Aa(x) ∧ (Bb(x) ∨ Cc(x))");
        assert!(ident_score("Aa(x) ∧ Bb(x) ∨ Cc(x)", "Aa(x) ∧ (Bb(x) ∨ Cc(x))") < 1.0);
        assert_eq!(oracle_score(&p, &r, &[(0, 0), (1, 1), (2, 2)]), 0.75);
    }

    #[test]
    fn le_score_errors() {
        let cfg = LeConfig::default();
        assert!(matches!(
            le_score("((", "P(a)", LeMode::Optimized, &cfg),
            Err(LeError::Syntax { side: Side::Prediction, .. })
        ));
        assert!(matches!(
            le_score("P(a)", "P(a) ∧", LeMode::Optimized, &cfg),
            Err(LeError::Syntax { side: Side::Reference, .. })
        ));
        let bad = LeConfig { chunk_size: Some(1), ..LeConfig::default() };
        assert!(le_score("P(a)", "P(a)", LeMode::Optimized, &bad).is_err());
    }
}

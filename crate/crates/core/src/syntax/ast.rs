use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinOp {
    And,
    Or,
    Implies,
    Iff,
    Xor,
}

impl BinOp {
    /// Binding strength; larger binds tighter. `↔` and `⊕` share the loosest
    /// level.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Iff | BinOp::Xor => 1,
            BinOp::Implies => 2,
            BinOp::Or => 3,
            BinOp::And => 4,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        self == BinOp::Implies
    }

    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            BinOp::And => a && b,
            BinOp::Or => a || b,
            BinOp::Implies => !a || b,
            BinOp::Iff => a == b,
            BinOp::Xor => a != b,
        }
    }

    fn symbol(self, style: Style) -> &'static str {
        match (style, self) {
            (Style::Unicode, BinOp::And) => "∧",
            (Style::Unicode, BinOp::Or) => "∨",
            (Style::Unicode, BinOp::Implies) => "→",
            (Style::Unicode, BinOp::Iff) => "↔",
            (Style::Unicode, BinOp::Xor) => "⊕",
            (Style::Ascii, BinOp::And) => "&",
            (Style::Ascii, BinOp::Or) => "|",
            (Style::Ascii, BinOp::Implies) => "->",
            (Style::Ascii, BinOp::Iff) => "<->",
            (Style::Ascii, BinOp::Xor) => "^",
        }
    }
}

/// Syntax tree of a first-order-logic formula.
///
/// Atom arguments are plain names; there are no function terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FolExpr {
    Quantified { quantifier: Quantifier, var: String, body: Box<FolExpr> },
    Not { body: Box<FolExpr> },
    Binary { op: BinOp, left: Box<FolExpr>, right: Box<FolExpr> },
    Atom { predicate: String, args: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    #[default]
    Unicode,
    Ascii,
}

impl FolExpr {
    pub fn atom(predicate: &str, args: &[&str]) -> Self {
        FolExpr::Atom {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn not(body: FolExpr) -> Self {
        FolExpr::Not { body: Box::new(body) }
    }

    pub fn binary(op: BinOp, left: FolExpr, right: FolExpr) -> Self {
        FolExpr::Binary { op, left: Box::new(left), right: Box::new(right) }
    }

    pub fn quantified(quantifier: Quantifier, var: &str, body: FolExpr) -> Self {
        FolExpr::Quantified { quantifier, var: var.to_string(), body: Box::new(body) }
    }

    /// Precedence of the outermost construct, on the same scale as
    /// [`BinOp::precedence`]. Unary forms and atoms bind tighter than any
    /// binary connective.
    fn precedence(&self) -> u8 {
        match self {
            FolExpr::Binary { op, .. } => op.precedence(),
            FolExpr::Not { .. } | FolExpr::Quantified { .. } => 5,
            FolExpr::Atom { .. } => 6,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            FolExpr::Quantified { body, .. } | FolExpr::Not { body } => 1 + body.size(),
            FolExpr::Binary { left, right, .. } => 1 + left.size() + right.size(),
            FolExpr::Atom { .. } => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            FolExpr::Quantified { body, .. } | FolExpr::Not { body } => 1 + body.depth(),
            FolExpr::Binary { left, right, .. } => 1 + left.depth().max(right.depth()),
            FolExpr::Atom { .. } => 1,
        }
    }

    /// Renders with the minimum parentheses needed for the text to parse back
    /// to the same tree in precedence mode.
    pub fn render(&self, style: Style) -> String {
        let mut out = String::new();
        self.write(style, &mut out);
        out
    }

    fn write(&self, style: Style, out: &mut String) {
        match self {
            FolExpr::Atom { predicate, args } => {
                out.push_str(predicate);
                if !args.is_empty() {
                    out.push('(');
                    out.push_str(&args.join(", "));
                    out.push(')');
                }
            }
            FolExpr::Not { body } => {
                out.push_str(match style {
                    Style::Unicode => "¬",
                    Style::Ascii => "~",
                });
                body.write_operand(style, body.precedence() < 5, out);
            }
            FolExpr::Quantified { quantifier, var, body } => {
                let q = match (style, quantifier) {
                    (Style::Unicode, Quantifier::Forall) => "∀",
                    (Style::Unicode, Quantifier::Exists) => "∃",
                    (Style::Ascii, Quantifier::Forall) => "forall ",
                    (Style::Ascii, Quantifier::Exists) => "exists ",
                };
                out.push_str(q);
                out.push_str(var);
                out.push(' ');
                body.write_operand(style, body.precedence() < 5, out);
            }
            FolExpr::Binary { op, left, right } => {
                let p = op.precedence();
                let left_parens = left.precedence() < p || (left.precedence() == p && op.is_right_assoc());
                let right_parens =
                    right.precedence() < p || (right.precedence() == p && !op.is_right_assoc());
                left.write_operand(style, left_parens, out);
                out.push(' ');
                out.push_str(op.symbol(style));
                out.push(' ');
                right.write_operand(style, right_parens, out);
            }
        }
    }

    fn write_operand(&self, style: Style, parens: bool, out: &mut String) {
        if parens {
            out.push('(');
            self.write(style, out);
            out.push(')');
        } else {
            self.write(style, out);
        }
    }

    /// Renames bound variables to `v1, v2, …` in order of quantifier
    /// appearance. Free identifiers are left alone; a generated name that
    /// would collide with a free identifier is skipped.
    pub fn canonicalize(&self) -> FolExpr {
        let mut free = HashSet::new();
        self.collect_free(&mut Vec::new(), &mut free);
        let mut counter = 0usize;
        let mut scope: Vec<(String, String)> = Vec::new();
        self.rename(&mut scope, &mut counter, &free)
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, free: &mut HashSet<String>) {
        match self {
            FolExpr::Quantified { var, body, .. } => {
                bound.push(var);
                body.collect_free(bound, free);
                bound.pop();
            }
            FolExpr::Not { body } => body.collect_free(bound, free),
            FolExpr::Binary { left, right, .. } => {
                left.collect_free(bound, free);
                right.collect_free(bound, free);
            }
            FolExpr::Atom { args, .. } => {
                for a in args {
                    if !bound.contains(&a.as_str()) {
                        free.insert(a.clone());
                    }
                }
            }
        }
    }

    fn rename(
        &self,
        scope: &mut Vec<(String, String)>,
        counter: &mut usize,
        free: &HashSet<String>,
    ) -> FolExpr {
        match self {
            FolExpr::Quantified { quantifier, var, body } => {
                let fresh = loop {
                    *counter += 1;
                    let name = format!("v{counter}");
                    if !free.contains(&name) {
                        break name;
                    }
                };
                scope.push((var.clone(), fresh.clone()));
                let body = body.rename(scope, counter, free);
                scope.pop();
                FolExpr::Quantified { quantifier: *quantifier, var: fresh, body: Box::new(body) }
            }
            FolExpr::Not { body } => FolExpr::not(body.rename(scope, counter, free)),
            FolExpr::Binary { op, left, right } => {
                let l = left.rename(scope, counter, free);
                let r = right.rename(scope, counter, free);
                FolExpr::binary(*op, l, r)
            }
            FolExpr::Atom { predicate, args } => FolExpr::Atom {
                predicate: predicate.clone(),
                args: args
                    .iter()
                    .map(|a| {
                        scope
                            .iter()
                            .rev()
                            .find(|(orig, _)| orig == a)
                            .map(|(_, new)| new.clone())
                            .unwrap_or_else(|| a.clone())
                    })
                    .collect(),
            },
        }
    }

    /// Distinct atomic formulas in first-occurrence (left-to-right) order.
    /// Meaningful after [`FolExpr::canonicalize`].
    pub fn atoms(&self) -> Vec<AtomicUnit> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.visit_atoms(&mut |predicate, args| {
            let unit = AtomicUnit::new(predicate, args);
            if seen.insert(unit.canonical_text.clone()) {
                out.push(unit);
            }
        });
        out
    }

    fn visit_atoms(&self, f: &mut impl FnMut(&str, &[String])) {
        match self {
            FolExpr::Quantified { body, .. } | FolExpr::Not { body } => body.visit_atoms(f),
            FolExpr::Binary { left, right, .. } => {
                left.visit_atoms(f);
                right.visit_atoms(f);
            }
            FolExpr::Atom { predicate, args } => f(predicate, args),
        }
    }

    /// The connective/quantifier skeleton with names erased, used to check
    /// that renaming never alters structure.
    pub fn shape(&self) -> String {
        match self {
            FolExpr::Quantified { quantifier, body, .. } => format!("{quantifier:?}[{}]", body.shape()),
            FolExpr::Not { body } => format!("Not[{}]", body.shape()),
            FolExpr::Binary { op, left, right } => {
                format!("{op:?}[{},{}]", left.shape(), right.shape())
            }
            FolExpr::Atom { args, .. } => format!("Atom/{}", args.len()),
        }
    }

    /// Evaluates the propositional skeleton (quantifiers stripped) given a
    /// truth value for each atom's canonical text.
    pub fn eval_propositional(&self, value: &impl Fn(&str) -> bool) -> bool {
        match self {
            FolExpr::Quantified { body, .. } => body.eval_propositional(value),
            FolExpr::Not { body } => !body.eval_propositional(value),
            FolExpr::Binary { op, left, right } => {
                op.apply(left.eval_propositional(value), right.eval_propositional(value))
            }
            FolExpr::Atom { predicate, args } => value(&AtomicUnit::text_of(predicate, args)),
        }
    }

    /// Replaces atoms by looking up their canonical text in `map`; atoms not
    /// in the map are kept.
    pub fn map_atoms(&self, map: &HashMap<String, FolExpr>) -> FolExpr {
        match self {
            FolExpr::Quantified { quantifier, var, body } => FolExpr::Quantified {
                quantifier: *quantifier,
                var: var.clone(),
                body: Box::new(body.map_atoms(map)),
            },
            FolExpr::Not { body } => FolExpr::not(body.map_atoms(map)),
            FolExpr::Binary { op, left, right } => {
                FolExpr::binary(*op, left.map_atoms(map), right.map_atoms(map))
            }
            FolExpr::Atom { predicate, args } => map
                .get(&AtomicUnit::text_of(predicate, args))
                .cloned()
                .unwrap_or_else(|| self.clone()),
        }
    }
}

impl fmt::Display for FolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(Style::Unicode))
    }
}

/// An atomic formula as a binding unit. Equality is equality of
/// `canonical_text`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomicUnit {
    pub predicate: String,
    pub args: Vec<String>,
    pub canonical_text: String,
}

impl AtomicUnit {
    pub fn new(predicate: &str, args: &[String]) -> Self {
        AtomicUnit {
            predicate: predicate.to_string(),
            args: args.to_vec(),
            canonical_text: Self::text_of(predicate, args),
        }
    }

    pub fn text_of(predicate: &str, args: &[String]) -> String {
        format!("{predicate}({})", args.join(","))
    }
}

impl PartialEq for AtomicUnit {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_text == other.canonical_text
    }
}

impl Eq for AtomicUnit {}

impl std::hash::Hash for AtomicUnit {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical_text.hash(state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_examples() {
        assert_eq!(FolExpr::atom("P", &["x"]).render(Style::Unicode), "P(x)");
        let e = FolExpr::quantified(
            Quantifier::Forall,
            "x",
            FolExpr::binary(BinOp::And, FolExpr::atom("A", &["x"]), FolExpr::atom("B", &["x"])),
        );
        assert_eq!(e.render(Style::Unicode), "∀x (A(x) ∧ B(x))");
        assert_eq!(e.render(Style::Ascii), "forall x (A(x) & B(x))");
    }

    #[test]
    fn render_parenthesizes_by_associativity() {
        let (a, b, c) = (FolExpr::atom("A", &[]), FolExpr::atom("B", &[]), FolExpr::atom("C", &[]));
        let right_impl =
            FolExpr::binary(BinOp::Implies, a.clone(), FolExpr::binary(BinOp::Implies, b.clone(), c.clone()));
        assert_eq!(right_impl.render(Style::Unicode), "A → B → C");
        let left_impl =
            FolExpr::binary(BinOp::Implies, FolExpr::binary(BinOp::Implies, a.clone(), b.clone()), c.clone());
        assert_eq!(left_impl.render(Style::Unicode), "(A → B) → C");
        let right_and = FolExpr::binary(BinOp::And, a.clone(), FolExpr::binary(BinOp::And, b, c));
        assert_eq!(right_and.render(Style::Ascii), "A & (B & C)");
        let neg = FolExpr::not(FolExpr::not(a));
        assert_eq!(neg.render(Style::Unicode), "¬¬A");
    }

    #[test]
    fn canonicalize_renames_in_quantifier_order() {
        let e = FolExpr::quantified(Quantifier::Forall, "y", FolExpr::atom("P", &["y"]));
        assert_eq!(e.canonicalize(), FolExpr::quantified(Quantifier::Forall, "v1", FolExpr::atom("P", &["v1"])));

        let e = FolExpr::quantified(
            Quantifier::Forall,
            "x",
            FolExpr::quantified(Quantifier::Forall, "y", FolExpr::atom("R", &["x", "y"])),
        );
        let want = FolExpr::quantified(
            Quantifier::Forall,
            "v1",
            FolExpr::quantified(Quantifier::Forall, "v2", FolExpr::atom("R", &["v1", "v2"])),
        );
        assert_eq!(e.canonicalize(), want);
    }

    #[test]
    fn canonicalize_respects_shadowing_and_free_names() {
        // ∀x (P(x) ∧ ∃x Q(x, a))
        let e = FolExpr::quantified(
            Quantifier::Forall,
            "x",
            FolExpr::binary(
                BinOp::And,
                FolExpr::atom("P", &["x"]),
                FolExpr::quantified(Quantifier::Exists, "x", FolExpr::atom("Q", &["x", "a"])),
            ),
        );
        let c = e.canonicalize();
        assert_eq!(c.render(Style::Unicode), "∀v1 (P(v1) ∧ ∃v2 Q(v2, a))");

        // a free constant called v1 is never captured
        let e = FolExpr::quantified(Quantifier::Forall, "x", FolExpr::atom("R", &["x", "v1"]));
        assert_eq!(e.canonicalize().render(Style::Unicode), "∀v2 R(v2, v1)");
    }

    #[test]
    fn atoms_dedup_in_order() {
        let e = FolExpr::binary(BinOp::And, FolExpr::atom("P", &["a"]), FolExpr::atom("P", &["a"]));
        assert_eq!(e.atoms().len(), 1);
        let e = FolExpr::binary(BinOp::Or, FolExpr::atom("Q", &[]), FolExpr::atom("P", &["a", "b"]));
        let texts: Vec<String> = e.atoms().into_iter().map(|a| a.canonical_text).collect();
        assert_eq!(texts, vec!["Q()", "P(a,b)"]);
    }
}

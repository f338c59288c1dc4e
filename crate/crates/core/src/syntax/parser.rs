use serde::{Deserialize, Serialize};

use super::ast::{BinOp, FolExpr, Quantifier};
use super::bracket::Layout;
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseMode {
    /// Ambiguity resolved by the precedence table: `¬` > `∧` > `∨` > `→` >
    /// `↔`/`⊕`, with `→` right-associative and the rest left-associative.
    #[default]
    Precedence,
    /// Every binary connective must sit inside its own pair of parentheses.
    FullyParenthesized,
}

pub fn parse(text: &str, mode: ParseMode) -> Result<FolExpr, SyntaxError> {
    let tokens = tokenize(text)?;
    parse_tokens(&tokens, mode)
}

pub fn parse_tokens(tokens: &[Token], mode: ParseMode) -> Result<FolExpr, SyntaxError> {
    if tokens.is_empty() {
        return Err(SyntaxError::Empty);
    }
    match mode {
        ParseMode::Precedence => Ok(Layout::from_tokens(tokens)?.precedence_tree()),
        ParseMode::FullyParenthesized => {
            let mut p = Cursor::new(tokens);
            let e = p.fully_parenthesized()?;
            p.finish()?;
            Ok(e)
        }
    }
}

pub(super) fn binop_of(kind: TokenKind) -> Option<BinOp> {
    Some(match kind {
        TokenKind::And => BinOp::And,
        TokenKind::Or => BinOp::Or,
        TokenKind::Implies => BinOp::Implies,
        TokenKind::Iff => BinOp::Iff,
        TokenKind::Xor => BinOp::Xor,
        _ => return None,
    })
}

/// Token cursor shared by both grammars.
pub(super) struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(super) fn new(tokens: &'a [Token]) -> Self {
        Cursor { tokens, pos: 0 }
    }

    pub(super) fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    pub(super) fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    pub(super) fn unexpected(&self, tok: &Token, expected: &str) -> SyntaxError {
        if tok.kind == TokenKind::RParen {
            return SyntaxError::UnbalancedParens { offset: tok.position };
        }
        SyntaxError::UnexpectedToken {
            found: format!("{} {:?}", tok.kind, tok.text),
            offset: tok.position,
            expected: expected.to_string(),
        }
    }

    pub(super) fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<&'a Token, SyntaxError> {
        match self.bump() {
            Some(t) if t.kind == kind => Ok(t),
            Some(t) => Err(self.unexpected(t, expected)),
            None => Err(SyntaxError::UnexpectedEnd { expected: expected.to_string() }),
        }
    }

    /// Errors if tokens remain.
    pub(super) fn finish(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) if t.kind == TokenKind::RParen => Err(SyntaxError::UnbalancedParens { offset: t.position }),
            Some(t) if t.kind.is_binary_connective() => Err(SyntaxError::MissingParentheses { offset: t.position }),
            Some(t) => Err(self.unexpected(t, "end of input")),
        }
    }

    /// `Name` or `Name(arg, …)`; the identifier has already been peeked.
    pub(super) fn atom(&mut self) -> Result<FolExpr, SyntaxError> {
        let name = self.expect(TokenKind::Identifier, "predicate name")?;
        let mut args = Vec::new();
        if self.peek().map(|t| t.kind) == Some(TokenKind::LParen) {
            let open = self.bump().unwrap();
            loop {
                match self.bump() {
                    Some(t) if t.kind == TokenKind::Identifier => args.push(t.text.clone()),
                    Some(t) => {
                        return Err(SyntaxError::UnexpectedToken {
                            found: format!("{} {:?}", t.kind, t.text),
                            offset: t.position,
                            expected: "argument name".into(),
                        })
                    }
                    None => return Err(SyntaxError::UnbalancedParens { offset: open.position }),
                }
                match self.bump() {
                    Some(t) if t.kind == TokenKind::Comma => continue,
                    Some(t) if t.kind == TokenKind::RParen => break,
                    Some(t) => return Err(self.unexpected(t, "',' or ')'")),
                    None => return Err(SyntaxError::UnbalancedParens { offset: open.position }),
                }
            }
        }
        Ok(FolExpr::Atom { predicate: name.text.clone(), args })
    }

    pub(super) fn quantifier(&mut self) -> Option<Quantifier> {
        match self.peek()?.kind {
            TokenKind::Forall => Some(Quantifier::Forall),
            TokenKind::Exists => Some(Quantifier::Exists),
            _ => None,
        }
    }

    fn fully_parenthesized(&mut self) -> Result<FolExpr, SyntaxError> {
        let Some(tok) = self.peek() else {
            return Err(SyntaxError::UnexpectedEnd { expected: "formula".into() });
        };
        match tok.kind {
            TokenKind::Not => {
                self.bump();
                Ok(FolExpr::not(self.fully_parenthesized()?))
            }
            TokenKind::Forall | TokenKind::Exists => {
                let q = self.quantifier().unwrap();
                self.bump();
                let var = self.expect(TokenKind::Identifier, "quantified variable")?;
                let body = self.fully_parenthesized()?;
                Ok(FolExpr::Quantified { quantifier: q, var: var.text.clone(), body: Box::new(body) })
            }
            TokenKind::LParen => {
                let open = self.bump().unwrap();
                let left = self.fully_parenthesized()?;
                let out = match self.peek() {
                    Some(t) if t.kind.is_binary_connective() => {
                        self.bump();
                        let right = self.fully_parenthesized()?;
                        FolExpr::binary(binop_of(t.kind).unwrap(), left, right)
                    }
                    _ => left,
                };
                match self.bump() {
                    Some(t) if t.kind == TokenKind::RParen => Ok(out),
                    Some(t) if t.kind.is_binary_connective() => {
                        Err(SyntaxError::MissingParentheses { offset: t.position })
                    }
                    Some(t) => Err(self.unexpected(t, "')'")),
                    None => Err(SyntaxError::UnbalancedParens { offset: open.position }),
                }
            }
            TokenKind::Identifier => self.atom(),
            _ => Err(self.unexpected(tok, "formula")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Style;

    fn p(s: &str) -> FolExpr {
        parse(s, ParseMode::Precedence).unwrap()
    }

    #[test]
    fn mortal_example() {
        let want = FolExpr::quantified(
            Quantifier::Forall,
            "x",
            FolExpr::binary(BinOp::Implies, FolExpr::atom("Mortal", &["x"]), FolExpr::atom("Person", &["x"])),
        );
        assert_eq!(p("∀x (Mortal(x) → Person(x))"), want);
        assert_eq!(p("forall x (Mortal(x) -> Person(x))"), want);
    }

    #[test]
    fn base_cases() {
        assert_eq!(p("P(a)"), FolExpr::atom("P", &["a"]));
        assert_eq!(p("¬¬P(a)"), FolExpr::not(FolExpr::not(FolExpr::atom("P", &["a"]))));
        assert_eq!(p("Rain"), FolExpr::atom("Rain", &[]));
        assert_eq!(p("R(a, b,c)"), FolExpr::atom("R", &["a", "b", "c"]));
    }

    #[test]
    fn precedence_table() {
        let (a, b, c) = (FolExpr::atom("A", &[]), FolExpr::atom("B", &[]), FolExpr::atom("C", &[]));
        assert_eq!(
            p("A ∧ B → C"),
            FolExpr::binary(BinOp::Implies, FolExpr::binary(BinOp::And, a.clone(), b.clone()), c.clone())
        );
        assert_eq!(
            p("A ∨ B ∧ C"),
            FolExpr::binary(BinOp::Or, a.clone(), FolExpr::binary(BinOp::And, b.clone(), c.clone()))
        );
        assert_eq!(
            p("A → B → C"),
            FolExpr::binary(BinOp::Implies, a.clone(), FolExpr::binary(BinOp::Implies, b.clone(), c.clone()))
        );
        assert_eq!(
            p("A ∧ B ∧ C"),
            FolExpr::binary(BinOp::And, FolExpr::binary(BinOp::And, a.clone(), b.clone()), c.clone())
        );
        assert_eq!(
            p("A ↔ B ⊕ C"),
            FolExpr::binary(BinOp::Xor, FolExpr::binary(BinOp::Iff, a.clone(), b.clone()), c.clone())
        );
        assert_eq!(
            p("¬A ∧ B"),
            FolExpr::binary(BinOp::And, FolExpr::not(a.clone()), b.clone())
        );
        // quantifiers bind as tightly as negation
        assert_eq!(
            p("∀x A ∧ B"),
            FolExpr::binary(BinOp::And, FolExpr::quantified(Quantifier::Forall, "x", a), b)
        );
    }

    #[test]
    fn errors_carry_offsets() {
        assert!(matches!(parse("P(x) ∧", ParseMode::Precedence), Err(SyntaxError::UnexpectedEnd { .. })));
        assert_eq!(parse("(P(x)", ParseMode::Precedence), Err(SyntaxError::UnbalancedParens { offset: 0 }));
        assert_eq!(parse("P(x))", ParseMode::Precedence), Err(SyntaxError::UnbalancedParens { offset: 4 }));
        assert!(matches!(
            parse("P(x) Q(x)", ParseMode::Precedence),
            Err(SyntaxError::UnexpectedToken { offset: 5, .. })
        ));
        assert!(matches!(parse("P()", ParseMode::Precedence), Err(SyntaxError::UnexpectedToken { offset: 2, .. })));
        assert_eq!(parse("   ", ParseMode::Precedence), Err(SyntaxError::Empty));
        assert!(matches!(parse("((", ParseMode::Precedence), Err(SyntaxError::UnexpectedEnd { .. })));
        assert!(matches!(parse("∀ (P(x))", ParseMode::Precedence), Err(SyntaxError::UnexpectedToken { .. })));
    }

    #[test]
    fn fully_parenthesized_mode() {
        let fp = |s| parse(s, ParseMode::FullyParenthesized);
        assert_eq!(fp("((A ∧ B) → C)").unwrap(), p("A ∧ B → C"));
        assert_eq!(fp("∀x (P(x) → Q(x))").unwrap(), p("∀x (P(x) → Q(x))"));
        assert_eq!(fp("¬(A ∨ B)").unwrap(), p("¬(A ∨ B)"));
        assert_eq!(fp("A ∧ B"), Err(SyntaxError::MissingParentheses { offset: 2 }));
        assert_eq!(fp("(A ∧ B ∨ C)"), Err(SyntaxError::MissingParentheses { offset: 7 }));
        assert_eq!(fp("((A))").unwrap(), p("A"));
    }

    #[test]
    fn ascii_render_reparses() {
        let e = p("∀x ∃y (R(x, y) ↔ ¬S(y) ⊕ T)");
        assert_eq!(p(&e.render(Style::Ascii)), e);
        assert_eq!(p(&e.render(Style::Unicode)), e);
    }
}

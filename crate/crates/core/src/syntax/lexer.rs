//! Tokenizer for first-order-logic text.
//!
//! Unicode and ASCII spellings of every connective are accepted by the same
//! lexer, so `∀x (P(x) → Q(x))` and `forall x (P(x) -> Q(x))` produce the
//! same token-kind sequence.

use std::fmt;

use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Forall,
    Exists,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Xor,
    LParen,
    RParen,
    Comma,
    Identifier,
}

impl TokenKind {
    pub fn is_binary_connective(self) -> bool {
        matches!(
            self,
            TokenKind::And | TokenKind::Or | TokenKind::Implies | TokenKind::Iff | TokenKind::Xor
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Forall => "'∀'",
            TokenKind::Exists => "'∃'",
            TokenKind::Not => "'¬'",
            TokenKind::And => "'∧'",
            TokenKind::Or => "'∨'",
            TokenKind::Implies => "'→'",
            TokenKind::Iff => "'↔'",
            TokenKind::Xor => "'⊕'",
            TokenKind::LParen => "'('",
            TokenKind::RParen => "')'",
            TokenKind::Comma => "','",
            TokenKind::Identifier => "identifier",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Character offset (not byte offset) of the first character.
    pub position: usize,
}

fn keyword(word: &str) -> Option<TokenKind> {
    match word {
        "forall" => Some(TokenKind::Forall),
        "exists" => Some(TokenKind::Exists),
        _ => None,
    }
}

fn single_char(c: char) -> Option<TokenKind> {
    Some(match c {
        '∀' => TokenKind::Forall,
        '∃' => TokenKind::Exists,
        '¬' | '~' | '!' => TokenKind::Not,
        '∧' | '&' => TokenKind::And,
        '∨' | '|' => TokenKind::Or,
        '→' | '⇒' => TokenKind::Implies,
        '↔' | '⇔' => TokenKind::Iff,
        '⊕' | '^' => TokenKind::Xor,
        '(' => TokenKind::LParen,
        ')' => TokenKind::RParen,
        ',' => TokenKind::Comma,
        _ => return None,
    })
}

/// Splits `text` into tokens. Whitespace separates tokens and is otherwise
/// ignored.
pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // multi-character ASCII arrows first
        if c == '<' && chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
            tokens.push(Token { kind: TokenKind::Iff, text: "<->".into(), position: i });
            i += 3;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            tokens.push(Token { kind: TokenKind::Implies, text: "->".into(), position: i });
            i += 2;
            continue;
        }
        if let Some(kind) = single_char(c) {
            tokens.push(Token { kind, text: c.to_string(), position: i });
            i += 1;
            continue;
        }
        if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let kind = keyword(&word).unwrap_or(TokenKind::Identifier);
            tokens.push(Token { kind, text: word, position: start });
            continue;
        }
        return Err(SyntaxError::UnknownCharacter { ch: c, offset: i });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn unicode_and_ascii_agree() {
        assert_eq!(
            kinds("∀x (Mortal(x) → Person(x))"),
            kinds("forall x (Mortal(x) -> Person(x))")
        );
        assert_eq!(kinds("¬A ∧ B ∨ C ↔ D ⊕ E"), kinds("~A & B | C <-> D ^ E"));
    }

    #[test]
    fn positions_are_character_offsets() {
        let toks = tokenize("∀x ¬P(x)").unwrap();
        let pos: Vec<usize> = toks.iter().map(|t| t.position).collect();
        assert_eq!(pos, vec![0, 1, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn identifiers_allow_digits_and_underscore() {
        let toks = tokenize("Is_red2(v10)").unwrap();
        assert_eq!(toks[0].text, "Is_red2");
        assert_eq!(toks[2].text, "v10");
    }

    #[test]
    fn unknown_character_reports_offset() {
        let err = tokenize("P(x) # Q(x)").unwrap_err();
        assert_eq!(err, SyntaxError::UnknownCharacter { ch: '#', offset: 5 });
        // a digit cannot start an identifier
        assert!(matches!(tokenize("3P"), Err(SyntaxError::UnknownCharacter { offset: 0, .. })));
    }

    #[test]
    fn lone_dash_is_rejected() {
        assert!(tokenize("P - Q").is_err());
    }
}

//! First-order-logic surface syntax: lexing, parsing, rendering,
//! canonicalization and enumeration of alternative bracketings.

mod ast;
mod bracket;
mod lexer;
mod parser;

pub use ast::{AtomicUnit, BinOp, FolExpr, Quantifier, Style};
pub use bracket::{
    alternative_parses, catalan, enumerate_bracketings, enumerate_chain, BracketOptions, Bracketings,
    EnumerationStats, Layout, DEFAULT_MAX_OPERATORS, DEFAULT_MAX_TREES,
};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_tokens, ParseMode};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum SyntaxError {
    #[error("unknown character {ch:?} at offset {offset}")]
    UnknownCharacter { ch: char, offset: usize },
    #[error("unexpected {found} at offset {offset}, expected {expected}")]
    UnexpectedToken { found: String, offset: usize, expected: String },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: String },
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParens { offset: usize },
    #[error("binary connective at offset {offset} must be parenthesized")]
    MissingParentheses { offset: usize },
    #[error("chunk size must be at least 2, got {chunk_size}")]
    InvalidChunkSize { chunk_size: usize },
    #[error("empty formula")]
    Empty,
    #[error("connective chain of {operators} operators exceeds the cap of {cap}")]
    ChainTooLong { operators: usize, cap: usize },
    #[error("bracketing enumeration would produce {trees} trees, above the cap of {cap}")]
    TooManyTrees { trees: u128, cap: usize },
}

impl SyntaxError {
    /// True for errors caused by configured limits rather than bad input.
    pub fn is_cap(&self) -> bool {
        matches!(self, SyntaxError::ChainTooLong { .. } | SyntaxError::TooManyTrees { .. })
    }
}

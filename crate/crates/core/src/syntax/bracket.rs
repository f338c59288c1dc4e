//! Enumeration of alternative binary bracketings of connective chains.
//!
//! A chain `A op B op C …` written without parentheses can be read as any of
//! Catalan(k) binary trees for k operators. Full enumeration produces all of
//! them. Chunked enumeration splits the operands into consecutive windows of
//! at most `chunk_size` operands, enumerates every bracketing inside each
//! window, then enumerates every bracketing of the (shorter) chain formed by
//! the window roots. The precedence-table reading is always included.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ast::{BinOp, FolExpr, Quantifier};
use super::lexer::{tokenize, Token, TokenKind};
use super::parser::{binop_of, Cursor};
use super::SyntaxError;

pub const DEFAULT_MAX_OPERATORS: usize = 16;
pub const DEFAULT_MAX_TREES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketOptions {
    /// Operands per chunk; `None` enumerates every bracketing.
    pub chunk_size: Option<usize>,
    /// Longest connective chain accepted at any one level.
    pub max_operators: usize,
    /// Upper bound on the number of trees returned.
    pub max_trees: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions { chunk_size: None, max_operators: DEFAULT_MAX_OPERATORS, max_trees: DEFAULT_MAX_TREES }
    }
}

impl BracketOptions {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn chunked(chunk_size: usize) -> Self {
        BracketOptions { chunk_size: Some(chunk_size), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    /// Distinct complete trees returned.
    pub trees: usize,
    /// Partial trees built on the way: one per bracketing of each chunk plus
    /// one per bracketing of each root chain. Equals `trees` (less the
    /// precedence reading) for unchunked flat chains.
    pub partial_trees: usize,
    /// Longest connective chain seen.
    pub longest_chain: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracketings {
    /// Distinct trees; the precedence-table reading is always first.
    pub trees: Vec<FolExpr>,
    pub stats: EnumerationStats,
}

/// Formula structure with connective chains left unresolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Atom(FolExpr),
    Not(Box<Layout>),
    Quantified { quantifier: Quantifier, var: String, body: Box<Layout> },
    /// `operands.len() == ops.len() + 1`, at least one operator.
    Chain { operands: Vec<Layout>, ops: Vec<BinOp> },
}

impl Layout {
    pub fn parse(text: &str) -> Result<Layout, SyntaxError> {
        Layout::from_tokens(&tokenize(text)?)
    }

    pub fn from_tokens(tokens: &[Token]) -> Result<Layout, SyntaxError> {
        if tokens.is_empty() {
            return Err(SyntaxError::Empty);
        }
        let mut cur = Cursor::new(tokens);
        let layout = chain(&mut cur)?;
        cur.finish()?;
        Ok(layout)
    }

    /// The single reading given by the precedence table.
    pub fn precedence_tree(&self) -> FolExpr {
        match self {
            Layout::Atom(e) => e.clone(),
            Layout::Not(body) => FolExpr::not(body.precedence_tree()),
            Layout::Quantified { quantifier, var, body } => {
                FolExpr::quantified(*quantifier, var, body.precedence_tree())
            }
            Layout::Chain { operands, ops } => {
                let trees: Vec<FolExpr> = operands.iter().map(Layout::precedence_tree).collect();
                precedence_combine(&trees, ops)
            }
        }
    }

    /// Number of readings [`Layout::expand`] would produce (before the
    /// precedence reading is merged in), saturating.
    fn reading_count(&self, opts: &BracketOptions) -> u128 {
        match self {
            Layout::Atom(_) => 1,
            Layout::Not(body) | Layout::Quantified { body, .. } => body.reading_count(opts),
            Layout::Chain { operands, .. } => {
                let leaves: Vec<u128> = operands.iter().map(|o| o.reading_count(opts)).collect();
                chain_count(&leaves, opts.chunk_size).saturating_add(1)
            }
        }
    }

    /// Every reading of the formula, with the precedence reading first.
    pub fn expand(&self, opts: &BracketOptions, stats: &mut EnumerationStats) -> Result<Vec<FolExpr>, SyntaxError> {
        match self {
            Layout::Atom(e) => Ok(vec![e.clone()]),
            Layout::Not(body) => Ok(body.expand(opts, stats)?.into_iter().map(FolExpr::not).collect()),
            Layout::Quantified { quantifier, var, body } => Ok(body
                .expand(opts, stats)?
                .into_iter()
                .map(|b| FolExpr::quantified(*quantifier, var, b))
                .collect()),
            Layout::Chain { operands, ops } => {
                let leaves = operands
                    .iter()
                    .map(|o| o.expand(opts, stats))
                    .collect::<Result<Vec<_>, _>>()?;
                enumerate_leaves(&leaves, ops, opts, stats)
            }
        }
    }
}

fn chain(cur: &mut Cursor<'_>) -> Result<Layout, SyntaxError> {
    let mut operands = vec![unary(cur)?];
    let mut ops = Vec::new();
    while let Some(op) = cur.peek().and_then(|t| binop_of(t.kind)) {
        cur.bump();
        ops.push(op);
        operands.push(unary(cur)?);
    }
    if ops.is_empty() {
        Ok(operands.pop().unwrap())
    } else {
        Ok(Layout::Chain { operands, ops })
    }
}

fn unary(cur: &mut Cursor<'_>) -> Result<Layout, SyntaxError> {
    let Some(tok) = cur.peek() else {
        return Err(SyntaxError::UnexpectedEnd { expected: "formula".into() });
    };
    match tok.kind {
        TokenKind::Not => {
            cur.bump();
            Ok(Layout::Not(Box::new(unary(cur)?)))
        }
        TokenKind::Forall | TokenKind::Exists => {
            let quantifier = cur.quantifier().unwrap();
            cur.bump();
            let var = cur.expect(TokenKind::Identifier, "quantified variable")?;
            Ok(Layout::Quantified { quantifier, var: var.text.clone(), body: Box::new(unary(cur)?) })
        }
        TokenKind::LParen => {
            cur.bump();
            let inner = chain(cur)?;
            match cur.bump() {
                Some(t) if t.kind == TokenKind::RParen => Ok(inner),
                Some(t) => Err(cur.unexpected(t, "')' or connective")),
                None => Err(SyntaxError::UnbalancedParens { offset: tok.position }),
            }
        }
        TokenKind::Identifier => Ok(Layout::Atom(cur.atom()?)),
        _ => Err(cur.unexpected(tok, "formula")),
    }
}

/// Combines a flat chain by precedence climbing.
pub(crate) fn precedence_combine(operands: &[FolExpr], ops: &[BinOp]) -> FolExpr {
    fn climb(operands: &[FolExpr], ops: &[BinOp], idx: &mut usize, min_prec: u8) -> FolExpr {
        let mut lhs = operands[*idx].clone();
        while *idx < ops.len() && ops[*idx].precedence() >= min_prec {
            let op = ops[*idx];
            *idx += 1;
            let next_min = if op.is_right_assoc() { op.precedence() } else { op.precedence() + 1 };
            let rhs = climb(operands, ops, idx, next_min);
            lhs = FolExpr::binary(op, lhs, rhs);
        }
        lhs
    }
    let mut idx = 0;
    climb(operands, ops, &mut idx, 0)
}

pub fn catalan(n: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..n as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

fn all_count(leaves: &[u128]) -> u128 {
    let n = leaves.len();
    let mut tab = vec![vec![0u128; n]; n];
    for i in 0..n {
        tab[i][i] = leaves[i];
    }
    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len - 1;
            let mut total: u128 = 0;
            for s in i..j {
                total = total.saturating_add(tab[i][s].saturating_mul(tab[s + 1][j]));
            }
            tab[i][j] = total;
        }
    }
    tab[0][n - 1]
}

fn chunk_bounds(n: usize, chunk_size: Option<usize>) -> Vec<(usize, usize)> {
    let size = chunk_size.unwrap_or(n).max(1);
    (0..n).step_by(size).map(|start| (start, (start + size).min(n))).collect()
}

fn chain_count(leaves: &[u128], chunk_size: Option<usize>) -> u128 {
    let chunks = chunk_bounds(leaves.len(), chunk_size);
    if chunks.len() == 1 {
        return all_count(leaves);
    }
    let roots: Vec<u128> = chunks.iter().map(|&(a, b)| all_count(&leaves[a..b])).collect();
    all_count(&roots)
}

/// All bracketings over `leaves` (each leaf a list of alternative subtrees),
/// built bottom-up over intervals.
fn all_trees(leaves: &[Vec<FolExpr>], ops: &[BinOp]) -> Vec<FolExpr> {
    let n = leaves.len();
    let mut tab: Vec<Vec<Vec<FolExpr>>> = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        tab[i][i] = leaves[i].clone();
    }
    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len - 1;
            let mut out = Vec::new();
            for s in i..j {
                for l in &tab[i][s] {
                    for r in &tab[s + 1][j] {
                        out.push(FolExpr::binary(ops[s], l.clone(), r.clone()));
                    }
                }
            }
            tab[i][j] = out;
        }
    }
    std::mem::take(&mut tab[0][n - 1])
}

fn enumerate_leaves(
    leaves: &[Vec<FolExpr>],
    ops: &[BinOp],
    opts: &BracketOptions,
    stats: &mut EnumerationStats,
) -> Result<Vec<FolExpr>, SyntaxError> {
    debug_assert_eq!(leaves.len(), ops.len() + 1);
    if let Some(m) = opts.chunk_size {
        if m < 2 {
            return Err(SyntaxError::InvalidChunkSize { chunk_size: m });
        }
    }
    if ops.len() > opts.max_operators {
        return Err(SyntaxError::ChainTooLong { operators: ops.len(), cap: opts.max_operators });
    }
    stats.longest_chain = stats.longest_chain.max(ops.len());
    let counts: Vec<u128> = leaves.iter().map(|l| l.len() as u128).collect();
    let expected = chain_count(&counts, opts.chunk_size);
    if expected >= opts.max_trees as u128 {
        return Err(SyntaxError::TooManyTrees { trees: expected.saturating_add(1), cap: opts.max_trees });
    }

    let firsts: Vec<FolExpr> = leaves.iter().map(|l| l[0].clone()).collect();
    let mut out = vec![precedence_combine(&firsts, ops)];

    let chunks = chunk_bounds(leaves.len(), opts.chunk_size);
    if chunks.len() == 1 {
        let trees = all_trees(leaves, ops);
        stats.partial_trees += trees.len();
        out.extend(trees);
    } else {
        let mut roots = Vec::with_capacity(chunks.len());
        let mut root_ops = Vec::with_capacity(chunks.len() - 1);
        for (c, &(a, b)) in chunks.iter().enumerate() {
            let trees = all_trees(&leaves[a..b], &ops[a..b - 1]);
            stats.partial_trees += trees.len();
            roots.push(trees);
            if c + 1 < chunks.len() {
                root_ops.push(ops[b - 1]);
            }
        }
        stats.partial_trees += catalan(root_ops.len()) as usize;
        out.extend(all_trees(&roots, &root_ops));
    }

    let mut seen = HashSet::with_capacity(out.len());
    out.retain(|t| seen.insert(t.clone()));
    Ok(out)
}

/// Enumerates readings of an explicit operand chain.
pub fn enumerate_chain(operands: &[FolExpr], ops: &[BinOp], opts: &BracketOptions) -> Result<Bracketings, SyntaxError> {
    assert_eq!(operands.len(), ops.len() + 1, "chain needs one more operand than operators");
    let mut stats = EnumerationStats::default();
    let leaves: Vec<Vec<FolExpr>> = operands.iter().map(|o| vec![o.clone()]).collect();
    let trees = enumerate_leaves(&leaves, ops, opts, &mut stats)?;
    stats.trees = trees.len();
    Ok(Bracketings { trees, stats })
}

/// Enumerates readings of the top-level connective chain of `tokens`.
/// Operands below the top level are read with the precedence table.
pub fn enumerate_bracketings(tokens: &[Token], opts: &BracketOptions) -> Result<Bracketings, SyntaxError> {
    match Layout::from_tokens(tokens)? {
        Layout::Chain { operands, ops } => {
            let operands: Vec<FolExpr> = operands.iter().map(Layout::precedence_tree).collect();
            enumerate_chain(&operands, &ops, opts)
        }
        other => {
            let tree = other.precedence_tree();
            Ok(Bracketings { trees: vec![tree], stats: EnumerationStats { trees: 1, ..Default::default() } })
        }
    }
}

/// Every reading of `text`, enumerating bracketings of each unparenthesized
/// chain at every nesting level. The precedence reading comes first.
pub fn alternative_parses(text: &str, opts: &BracketOptions) -> Result<Bracketings, SyntaxError> {
    let layout = Layout::parse(text)?;
    let estimate = layout.reading_count(opts);
    if estimate > opts.max_trees as u128 {
        return Err(SyntaxError::TooManyTrees { trees: estimate, cap: opts.max_trees });
    }
    let mut stats = EnumerationStats::default();
    let trees = layout.expand(opts, &mut stats)?;
    stats.trees = trees.len();
    Ok(Bracketings { trees, stats })
}

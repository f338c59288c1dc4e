//! Propositional abstraction and truth-table agreement.
//!
//! Quantifier prefixes are dropped and each distinct atom becomes a
//! propositional variable. All 2^n assignments are evaluated at once by
//! representing each variable as a bit column over the rows.

use std::collections::HashMap;

use crate::syntax::{AtomicUnit, BinOp, FolExpr};

/// Propositional skeleton over local variable indices.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Prop {
    Var(usize),
    Not(Box<Prop>),
    Bin(BinOp, Box<Prop>, Box<Prop>),
}

impl Prop {
    /// Compiles `expr` with variables numbered by position in `atoms`.
    pub(crate) fn compile(expr: &FolExpr, atoms: &[AtomicUnit]) -> Prop {
        let index: HashMap<&str, usize> =
            atoms.iter().enumerate().map(|(i, a)| (a.canonical_text.as_str(), i)).collect();
        Self::build(expr, &index)
    }

    fn build(expr: &FolExpr, index: &HashMap<&str, usize>) -> Prop {
        match expr {
            FolExpr::Quantified { body, .. } => Self::build(body, index),
            FolExpr::Not { body } => Prop::Not(Box::new(Self::build(body, index))),
            FolExpr::Binary { op, left, right } => {
                Prop::Bin(*op, Box::new(Self::build(left, index)), Box::new(Self::build(right, index)))
            }
            FolExpr::Atom { predicate, args } => Prop::Var(index[AtomicUnit::text_of(predicate, args).as_str()]),
        }
    }

    /// Evaluates on every row; `var_of` maps local indices to table columns.
    fn eval(&self, table: &TruthTable, var_of: &[usize]) -> Vec<u64> {
        match self {
            Prop::Var(i) => table.columns[var_of[*i]].clone(),
            Prop::Not(b) => {
                let mut v = b.eval(table, var_of);
                v.iter_mut().for_each(|w| *w = !*w);
                v
            }
            Prop::Bin(op, l, r) => {
                let mut a = l.eval(table, var_of);
                let b = r.eval(table, var_of);
                for (x, y) in a.iter_mut().zip(&b) {
                    *x = match op {
                        BinOp::And => *x & y,
                        BinOp::Or => *x | y,
                        BinOp::Implies => !*x | y,
                        BinOp::Iff => !(*x ^ y),
                        BinOp::Xor => *x ^ y,
                    };
                }
                a
            }
        }
    }
}

/// Bit columns for `nvars` variables over all 2^nvars rows. Row `r` assigns
/// variable `i` the bit `(r >> i) & 1`.
#[derive(Debug)]
pub(crate) struct TruthTable {
    nvars: usize,
    columns: Vec<Vec<u64>>,
}

impl TruthTable {
    pub(crate) fn new(nvars: usize) -> Self {
        let rows = 1usize << nvars;
        let words = rows.div_ceil(64);
        let columns = (0..nvars)
            .map(|i| {
                let mut col = vec![0u64; words];
                for r in 0..rows {
                    if (r >> i) & 1 == 1 {
                        col[r / 64] |= 1 << (r % 64);
                    }
                }
                col
            })
            .collect();
        TruthTable { nvars, columns }
    }

    pub(crate) fn rows(&self) -> u64 {
        1u64 << self.nvars
    }

    /// Number of rows on which `a` and `b` agree.
    pub(crate) fn agreements(&self, a: &Prop, a_vars: &[usize], b: &Prop, b_vars: &[usize]) -> u64 {
        let va = a.eval(self, a_vars);
        let vb = b.eval(self, b_vars);
        let rows = self.rows();
        let mut total = 0u64;
        for (i, (x, y)) in va.iter().zip(&vb).enumerate() {
            let mut same = !(x ^ y);
            let start = i as u64 * 64;
            if rows < start + 64 {
                same &= (1u64 << (rows - start)) - 1;
            }
            total += u64::from(same.count_ones());
        }
        total
    }
}

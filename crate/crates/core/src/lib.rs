//! First-order logic parsing and logical-equivalence scoring.
//!
//! - [`syntax`]: lexer, parser, canonical form and bracketing enumeration
//! - [`similarity`]: edit distance and character n-gram cosine
//! - [`le`]: truth-table equivalence score with atom binding search
//! - [`corpus`]: corpus BLEU and mean LE over pair files
//! - [`sgrpo`]: tabular policy trainer driven by the LE reward
//! - [`service`] and [`cli`]: NDJSON scoring service and command line

pub mod cli;
pub mod corpus;
pub mod le;
pub mod service;
pub mod sgrpo;
pub mod similarity;
pub mod syntax;

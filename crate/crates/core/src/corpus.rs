//! Batch evaluation over prediction/reference corpora.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::le::{le_score, LeConfig, LeMode, LeReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub prediction: String,
    pub reference: String,
}

impl EvalPair {
    pub fn new(id: impl Into<String>, prediction: impl Into<String>, reference: impl Into<String>) -> Self {
        EvalPair { id: id.into(), prediction: prediction.into(), reference: reference.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairFormat {
    Jsonl,
    Tsv,
}

impl std::str::FromStr for PairFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(PairFormat::Jsonl),
            "tsv" => Ok(PairFormat::Tsv),
            other => Err(format!("unknown pair format {other:?} (expected jsonl|tsv)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedRow {
    /// 1-based line number in the source file.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadedPairs {
    pub pairs: Vec<EvalPair>,
    pub malformed: Vec<MalformedRow>,
}

pub fn load_pairs(path: &Path, format: PairFormat) -> Result<LoadedPairs, CorpusError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    Ok(parse_pairs(&text, format))
}

/// Parses pair rows from in-memory text. Blank lines are ignored; rows that
/// fail to parse or repeat an earlier id are skipped and recorded.
pub fn parse_pairs(text: &str, format: PairFormat) -> LoadedPairs {
    let mut out = LoadedPairs::default();
    let mut seen = HashSet::new();
    let mut row = 0usize;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            PairFormat::Jsonl => jsonl_row(line, row),
            PairFormat::Tsv => tsv_row(line, row),
        };
        row += 1;
        match parsed {
            Ok(pair) if !seen.insert(pair.id.clone()) => {
                out.malformed.push(MalformedRow { line: i + 1, message: format!("duplicate id {:?}", pair.id) })
            }
            Ok(pair) => out.pairs.push(pair),
            Err(message) => out.malformed.push(MalformedRow { line: i + 1, message }),
        }
    }
    out
}

fn jsonl_row(line: &str, row: usize) -> Result<EvalPair, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("row is not a JSON object")?;
    let field = |k: &str| -> Result<String, String> {
        match obj.get(k) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(format!("field {k:?} is not a string")),
            None => Err(format!("missing field {k:?}")),
        }
    };
    let id = match obj.get("id") {
        None | Some(serde_json::Value::Null) => row.to_string(),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Number(n)) => n.to_string(),
        Some(_) => return Err("field \"id\" is not a string".into()),
    };
    Ok(EvalPair { id, prediction: field("prediction")?, reference: field("reference")? })
}

fn tsv_row(line: &str, row: usize) -> Result<EvalPair, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    match cols.as_slice() {
        [p, r] => Ok(EvalPair::new(row.to_string(), *p, *r)),
        [id, p, r] => Ok(EvalPair::new(*id, *p, *r)),
        _ => Err(format!("expected 2 or 3 tab-separated columns, found {}", cols.len())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "epsilon")]
pub enum Smoothing {
    #[default]
    None,
    /// Zero n-gram match counts are replaced by this value.
    Floor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig { max_order: 4, smoothing: Smoothing::None }
    }
}

const PADDED: &[char] = &['∀', '∃', '¬', '∧', '∨', '→', '↔', '⊕', '⇒', '⇔', '(', ')', ',', '~', '!', '&', '|', '^'];

/// Whitespace tokens after padding connectives, parentheses and commas.
pub fn bleu_tokens(s: &str) -> Vec<String> {
    let mut padded = String::with_capacity(s.len() * 2);
    let mut rest = s;
    while let Some(c) = rest.chars().next() {
        if let Some(arrow) = ["<->", "->"].into_iter().find(|a| rest.starts_with(a)) {
            padded.push(' ');
            padded.push_str(arrow);
            padded.push(' ');
            rest = &rest[arrow.len()..];
            continue;
        }
        if PADDED.contains(&c) {
            padded.push(' ');
            padded.push(c);
            padded.push(' ');
        } else {
            padded.push(c);
        }
        rest = &rest[c.len_utf8()..];
    }
    padded.split_whitespace().map(str::to_string).collect()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Matched and total n-gram counts for one order, summed over the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NgramStat {
    pub matched: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuBreakdown {
    pub bleu: f64,
    pub precisions: Vec<f64>,
    pub stats: Vec<NgramStat>,
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

/// Corpus BLEU in `[0, 100]`.
pub fn corpus_bleu(pairs: &[EvalPair], cfg: &BleuConfig) -> Result<f64, CorpusError> {
    corpus_bleu_breakdown(pairs, cfg).map(|b| b.bleu)
}

pub fn corpus_bleu_breakdown(pairs: &[EvalPair], cfg: &BleuConfig) -> Result<BleuBreakdown, CorpusError> {
    if pairs.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut stats = vec![NgramStat { matched: 0, total: 0 }; cfg.max_order];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for pair in pairs {
        let hyp = bleu_tokens(&pair.prediction);
        let rf = bleu_tokens(&pair.reference);
        hyp_len += hyp.len();
        ref_len += rf.len();
        for (k, stat) in stats.iter_mut().enumerate() {
            let h = ngrams(&hyp, k + 1);
            let r = ngrams(&rf, k + 1);
            stat.matched += h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum::<usize>();
            stat.total += h.values().sum::<usize>();
        }
    }

    let precisions: Vec<f64> = stats
        .iter()
        .map(|s| {
            if s.total == 0 {
                return 0.0;
            }
            let matched = match cfg.smoothing {
                Smoothing::Floor(eps) if s.matched == 0 => eps,
                _ => s.matched as f64,
            };
            matched / s.total as f64
        })
        .collect();
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let bleu = if precisions.iter().any(|&p| p <= 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        (100.0 * brevity_penalty * log_mean.exp()).clamp(0.0, 100.0)
    };
    Ok(BleuBreakdown { bleu, precisions, stats, brevity_penalty, hyp_len, ref_len })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub id: String,
    pub report: LeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFailure {
    pub id: String,
    pub error: String,
    /// The pair failed on a configured limit rather than on its text.
    pub cap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub bleu: f64,
    /// Failed pairs contribute 0 to the mean and count toward the corpus size.
    pub mean_le: f64,
    pub per_pair: Vec<PairReport>,
    pub failures: Vec<PairFailure>,
}

pub fn corpus_le(
    pairs: &[EvalPair],
    mode: LeMode,
    config: &LeConfig,
    bleu: &BleuConfig,
) -> Result<CorpusReport, CorpusError> {
    let bleu = corpus_bleu(pairs, bleu)?;
    let mut per_pair = Vec::new();
    let mut failures = Vec::new();
    for pair in pairs {
        match le_score(&pair.prediction, &pair.reference, mode, config) {
            Ok(report) => per_pair.push(PairReport { id: pair.id.clone(), report }),
            Err(e) => failures.push(PairFailure { id: pair.id.clone(), error: e.to_string(), cap: e.is_cap() }),
        }
    }
    let total: f64 = per_pair.iter().map(|p| p.report.score).sum();
    Ok(CorpusReport { bleu, mean_le: total / pairs.len() as f64, per_pair, failures })
}

//! String distance and similarity used to order and filter atom bindings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub ngram_sizes: BTreeSet<usize>,
    /// Pairs with similarity `>=` threshold are related.
    pub threshold: f64,
    pub case_sensitive: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig { ngram_sizes: BTreeSet::from([2, 3]), threshold: DEFAULT_THRESHOLD, case_sensitive: false }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("ngram_sizes must be non-empty with every size >= 1")]
    NgramSizes,
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConfigError::Threshold(self.threshold));
        }
        if self.ngram_sizes.is_empty() || self.ngram_sizes.contains(&0) {
            return Err(ConfigError::NgramSizes);
        }
        Ok(())
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_ngram_sizes(mut self, sizes: &[usize]) -> Self {
        self.ngram_sizes = sizes.iter().copied().collect();
        self
    }
}

/// A pairwise similarity in `[0, 1]` between binding units.
///
/// [`NgramCosine`] is the built-in backend; an embedding model can be
/// plugged in by implementing this trait.
pub trait SimilarityBackend {
    fn similarity(&self, a: &str, b: &str) -> f64;

    /// All pairwise similarities, `out[i][j] = similarity(left[i], right[j])`.
    fn similarity_matrix(&self, left: &[&str], right: &[&str]) -> Vec<Vec<f64>> {
        left.iter().map(|a| right.iter().map(|b| self.similarity(a, b)).collect()).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct NgramCosine {
    pub config: SimilarityConfig,
}

impl NgramCosine {
    pub fn new(config: SimilarityConfig) -> Self {
        NgramCosine { config }
    }
}

impl SimilarityBackend for NgramCosine {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        ngram_cosine(a, b, &self.config)
    }

    fn similarity_matrix(&self, left: &[&str], right: &[&str]) -> Vec<Vec<f64>> {
        let chars = |xs: &[&str]| -> Vec<Vec<char>> { xs.iter().map(|x| folded(x, &self.config)).collect() };
        let (lc, rc) = (chars(left), chars(right));
        let lp: Vec<_> = lc.iter().map(|c| Profile::new(c, &self.config)).collect();
        let rp: Vec<_> = rc.iter().map(|c| Profile::new(c, &self.config)).collect();
        lp.iter().map(|a| rp.iter().map(|b| a.cosine(b)).collect()).collect()
    }
}

/// Unit-cost insert/delete/substitute edit distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn folded(s: &str, cfg: &SimilarityConfig) -> Vec<char> {
    if cfg.case_sensitive {
        s.chars().collect()
    } else {
        s.chars().flat_map(char::to_lowercase).collect()
    }
}

/// Sorted `(count, size, gram)` entries pooled over every configured size,
/// with the squared norm. A string shorter than `n` contributes itself as
/// its single n-gram of that size.
struct Profile<'a> {
    counts: Vec<(f64, usize, &'a [char])>,
    norm2: f64,
}

impl<'a> Profile<'a> {
    fn new(chars: &'a [char], cfg: &SimilarityConfig) -> Self {
        let mut grams: Vec<(usize, &[char])> = Vec::new();
        if !chars.is_empty() {
            for &n in &cfg.ngram_sizes {
                if chars.len() < n {
                    grams.push((n, chars));
                } else {
                    grams.extend(chars.windows(n).map(|w| (n, w)));
                }
            }
        }
        grams.sort_unstable();
        let mut counts: Vec<(f64, usize, &[char])> = Vec::with_capacity(grams.len());
        for (n, g) in grams {
            match counts.last_mut() {
                Some(last) if last.1 == n && last.2 == g => last.0 += 1.0,
                _ => counts.push((1.0, n, g)),
            }
        }
        let norm2 = counts.iter().map(|x| x.0 * x.0).sum();
        Profile { counts, norm2 }
    }

    fn cosine(&self, other: &Profile) -> f64 {
        let (va, vb) = (&self.counts, &other.counts);
        if va.is_empty() || vb.is_empty() {
            return 0.0;
        }
        let mut dot = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < va.len() && j < vb.len() {
            match (va[i].1, va[i].2).cmp(&(vb[j].1, vb[j].2)) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += va[i].0 * vb[j].0;
                    i += 1;
                    j += 1;
                }
            }
        }
        (dot / (self.norm2 * other.norm2).sqrt()).clamp(0.0, 1.0)
    }
}

/// Cosine of the pooled character n-gram count vectors; 0 when either
/// vector is empty.
pub fn ngram_cosine(a: &str, b: &str, cfg: &SimilarityConfig) -> f64 {
    let (ca, cb) = (folded(a, cfg), folded(b, cfg));
    Profile::new(&ca, cfg).cosine(&Profile::new(&cb, cfg))
}

pub fn is_related(a: &str, b: &str, cfg: &SimilarityConfig) -> bool {
    ngram_cosine(a, b, cfg) >= cfg.threshold
}

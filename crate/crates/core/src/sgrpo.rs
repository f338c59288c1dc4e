//! Group-relative policy optimization with a supervised log-ratio term, on a
//! tabular softmax policy.
//!
//! The policy has one independent categorical distribution per
//! (prompt, position). For a prompt `q`, a group of `G` sequences is sampled
//! from the old policy, rewarded, and the objective
//!
//! ```text
//! J = (1/G) Σ_i [ clip(ρ_i, 1-ε, 1+ε)·Â_i + λ·log(π_θ(y|q)/π_ref(y|q)) - β·KL_i ]
//! ```
//!
//! is ascended, where `ρ_i = π_θ(o_i|q)/π_old(o_i|q)` and `y` is the gold
//! label sequence.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::le::{le_score, LeConfig, LeMode};
use crate::syntax::{parse, ParseMode};

#[derive(Debug, thiserror::Error)]
pub enum SgrpoError {
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("invalid vocabulary or label: {0}")]
    Label(String),
    #[error("reference formula {formula:?} does not parse: {message}")]
    Reference { formula: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Current,
    Old,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub prompt_id: usize,
    /// Gold token ids.
    pub label: Vec<usize>,
    pub reference_formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub group_size: usize,
    pub clip_epsilon: f64,
    pub kl_beta: f64,
    pub sft_weight: f64,
    pub std_epsilon: f64,
    pub learning_rate: f64,
    pub max_length: usize,
    pub seed: u64,
    /// Use `min(ρÂ, clip(ρ)Â)` instead of `clip(ρ)Â`.
    pub min_form: bool,
    /// Average per-token ratios instead of one sequence-level ratio.
    pub per_token_ratio: bool,
    /// Gradient steps per sampled group.
    pub inner_epochs: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            group_size: 8,
            clip_epsilon: 0.2,
            kl_beta: 0.04,
            sft_weight: 1.0,
            std_epsilon: 1e-8,
            learning_rate: 0.5,
            max_length: 12,
            seed: 7,
            min_form: false,
            per_token_ratio: false,
            inner_epochs: 1,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), SgrpoError> {
        let bad = |m: &str| Err(SgrpoError::Hyperparams(m.to_string()));
        if self.group_size < 2 {
            return bad("group_size must be >= 2");
        }
        if !(self.clip_epsilon > 0.0) {
            return bad("clip_epsilon must be > 0");
        }
        if !(self.kl_beta >= 0.0) || !(self.sft_weight >= 0.0) {
            return bad("kl_beta and sft_weight must be >= 0");
        }
        if !(self.std_epsilon > 0.0) {
            return bad("std_epsilon must be > 0");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be finite and >= 0");
        }
        if self.max_length == 0 || self.inner_epochs == 0 {
            return bad("max_length and inner_epochs must be >= 1");
        }
        Ok(())
    }
}

/// Logits indexed `[prompt][position][vocab]`, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub prompts: usize,
    pub positions: usize,
    pub vocab: usize,
    pub logits: Vec<f64>,
    pub role: Role,
}

impl PolicyParams {
    pub fn zeros(prompts: usize, positions: usize, vocab: usize, role: Role) -> Self {
        PolicyParams { prompts, positions, vocab, logits: vec![0.0; prompts * positions * vocab], role }
    }

    /// Logits drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng>(prompts: usize, positions: usize, vocab: usize, scale: f64, role: Role, rng: &mut R) -> Self {
        let mut p = Self::zeros(prompts, positions, vocab, role);
        p.logits.iter_mut().for_each(|x| *x = rng.random_range(-scale..=scale));
        p
    }

    pub fn with_role(&self, role: Role) -> Self {
        PolicyParams { role, ..self.clone() }
    }

    pub fn index(&self, prompt: usize, pos: usize, v: usize) -> usize {
        (prompt * self.positions + pos) * self.vocab + v
    }

    pub fn row(&self, prompt: usize, pos: usize) -> &[f64] {
        let start = self.index(prompt, pos, 0);
        &self.logits[start..start + self.vocab]
    }

    pub fn log_probs(&self, prompt: usize, pos: usize) -> Vec<f64> {
        let row = self.row(prompt, pos);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        row.iter().map(|x| x - lse).collect()
    }

    pub fn probs(&self, prompt: usize, pos: usize) -> Vec<f64> {
        self.log_probs(prompt, pos).into_iter().map(f64::exp).collect()
    }

    pub fn log_prob(&self, prompt: usize, pos: usize, v: usize) -> f64 {
        self.log_probs(prompt, pos)[v]
    }

    pub fn token_log_probs(&self, prompt: usize, seq: &[usize]) -> Vec<f64> {
        seq.iter().enumerate().map(|(t, &v)| self.log_prob(prompt, t, v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGroup {
    pub prompt_id: usize,
    pub outputs: Vec<Vec<usize>>,
    pub old_logprobs: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    /// Empty until [`SampleGroup::set_rewards`] is called.
    pub advantages: Vec<f64>,
}

impl SampleGroup {
    /// Stores rewards and their group-normalized advantages.
    ///
    /// # Panics
    /// If the count differs from the group size or a reward is outside `[0, 1]`.
    pub fn set_rewards(&mut self, rewards: Vec<f64>, std_epsilon: f64) {
        assert_eq!(rewards.len(), self.outputs.len(), "one reward per output");
        assert!(rewards.iter().all(|r| (0.0..=1.0).contains(r)), "rewards must lie in [0, 1]: {rewards:?}");
        self.advantages = group_advantages(&rewards, std_epsilon);
        self.rewards = rewards;
    }
}

/// Draws `G` sequences of `max_length` tokens from the old policy.
pub fn sample_group<R: Rng>(policy: &PolicyParams, prompt: &PromptSpec, hp: &Hyperparams, rng: &mut R) -> SampleGroup {
    debug_assert_eq!(policy.role, Role::Old, "groups are sampled from the old policy");
    let probs: Vec<Vec<f64>> = (0..hp.max_length).map(|t| policy.probs(prompt.prompt_id, t)).collect();
    let mut outputs = Vec::with_capacity(hp.group_size);
    let mut old_logprobs = Vec::with_capacity(hp.group_size);
    for _ in 0..hp.group_size {
        let seq: Vec<usize> = probs.iter().map(|p| categorical(p, rng)).collect();
        old_logprobs.push(seq.iter().enumerate().map(|(t, &v)| probs[t][v].ln()).collect());
        outputs.push(seq);
    }
    SampleGroup { prompt_id: prompt.prompt_id, outputs, old_logprobs, rewards: Vec::new(), advantages: Vec::new() }
}

fn categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// `(r_i - mean) / (popstd + std_epsilon)`. Identical rewards give exact
/// zeros even when the floating mean is off by an ulp.
pub fn group_advantages(rewards: &[f64], std_epsilon: f64) -> Vec<f64> {
    if rewards.windows(2).all(|w| w[0] == w[1]) {
        return vec![0.0; rewards.len()];
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let denom = var.sqrt() + std_epsilon;
    rewards.iter().map(|r| (r - mean) / denom).collect()
}

/// Mean over positions of `r - ln r - 1` with `r = π_ref(o_t)/π_θ(o_t)`.
pub fn kl_estimate(current: &PolicyParams, reference: &PolicyParams, output: &[usize], prompt: &PromptSpec) -> f64 {
    if output.is_empty() {
        return 0.0;
    }
    let total: f64 = output
        .iter()
        .enumerate()
        .map(|(t, &v)| {
            let log_r = reference.log_prob(prompt.prompt_id, t, v) - current.log_prob(prompt.prompt_id, t, v);
            log_r.exp() - log_r - 1.0
        })
        .sum();
    (total / output.len() as f64).max(0.0)
}

/// `log π_θ(y|q) - log π_ref(y|q)` over the label positions.
pub fn sft_term(current: &PolicyParams, reference: &PolicyParams, prompt: &PromptSpec) -> f64 {
    prompt
        .label
        .iter()
        .enumerate()
        .map(|(t, &v)| current.log_prob(prompt.prompt_id, t, v) - reference.log_prob(prompt.prompt_id, t, v))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// Mean clipped surrogate over the group.
    pub surrogate: f64,
    /// Unweighted SFT log-ratio.
    pub sft: f64,
    /// Mean KL estimate over the group.
    pub kl: f64,
    pub objective: f64,
}

/// Surrogate value for one ratio and whether gradient flows through it.
fn clipped(ratio: f64, adv: f64, hp: &Hyperparams) -> (f64, bool) {
    let lo = 1.0 - hp.clip_epsilon;
    let hi = 1.0 + hp.clip_epsilon;
    let clip = ratio.clamp(lo, hi);
    let inside = ratio > lo && ratio < hi;
    if hp.min_form {
        let raw = ratio * adv;
        let cl = clip * adv;
        if raw < cl || inside {
            (raw, true)
        } else {
            (cl, false)
        }
    } else {
        (clip * adv, inside)
    }
}

fn log_ratios(current: &PolicyParams, group: &SampleGroup, i: usize) -> Vec<f64> {
    group.outputs[i]
        .iter()
        .enumerate()
        .map(|(t, &v)| current.log_prob(group.prompt_id, t, v) - group.old_logprobs[i][t])
        .collect()
}

fn surrogate_of(current: &PolicyParams, group: &SampleGroup, i: usize, hp: &Hyperparams) -> f64 {
    let lr = log_ratios(current, group, i);
    let adv = group.advantages[i];
    if hp.per_token_ratio {
        lr.iter().map(|l| clipped(l.exp(), adv, hp).0).sum::<f64>() / lr.len().max(1) as f64
    } else {
        clipped(lr.iter().sum::<f64>().exp(), adv, hp).0
    }
}

/// The old policy enters only through `group.old_logprobs`.
pub fn sgrpo_objective(
    current: &PolicyParams,
    _old: &PolicyParams,
    reference: &PolicyParams,
    prompt: &PromptSpec,
    group: &SampleGroup,
    hp: &Hyperparams,
) -> ObjectiveBreakdown {
    assert_eq!(group.advantages.len(), group.outputs.len(), "advantages must be populated");
    let g = group.outputs.len() as f64;
    let surrogate = (0..group.outputs.len()).map(|i| surrogate_of(current, group, i, hp)).sum::<f64>() / g;
    let kl = group.outputs.iter().map(|o| kl_estimate(current, reference, o, prompt)).sum::<f64>() / g;
    let sft = sft_term(current, reference, prompt);
    ObjectiveBreakdown { surrogate, sft, kl, objective: surrogate + hp.sft_weight * sft - hp.kl_beta * kl }
}

/// Analytic gradient of [`sgrpo_objective`] with respect to `current.logits`.
pub fn objective_gradient(
    current: &PolicyParams,
    _old: &PolicyParams,
    reference: &PolicyParams,
    prompt: &PromptSpec,
    group: &SampleGroup,
    hp: &Hyperparams,
) -> Vec<f64> {
    assert_eq!(group.advantages.len(), group.outputs.len(), "advantages must be populated");
    let p = prompt.prompt_id;
    let mut grad = vec![0.0; current.logits.len()];
    let probs: Vec<Vec<f64>> = (0..current.positions).map(|t| current.probs(p, t)).collect();
    // adds w · ∂ log π_t(v) / ∂ z_t
    let add_dlogp = |grad: &mut Vec<f64>, t: usize, v: usize, w: f64| {
        if w == 0.0 {
            return;
        }
        let base = current.index(p, t, 0);
        for (u, pu) in probs[t].iter().enumerate() {
            grad[base + u] -= w * pu;
        }
        grad[base + v] += w;
    };

    let g = group.outputs.len() as f64;
    for (i, out) in group.outputs.iter().enumerate() {
        let adv = group.advantages[i];
        let lr = log_ratios(current, group, i);
        if hp.per_token_ratio {
            let tlen = out.len().max(1) as f64;
            for (t, &v) in out.iter().enumerate() {
                let r = lr[t].exp();
                if clipped(r, adv, hp).1 {
                    add_dlogp(&mut grad, t, v, adv * r / (tlen * g));
                }
            }
        } else {
            let r = lr.iter().sum::<f64>().exp();
            if clipped(r, adv, hp).1 {
                for (t, &v) in out.iter().enumerate() {
                    add_dlogp(&mut grad, t, v, adv * r / g);
                }
            }
        }
        if hp.kl_beta != 0.0 && !out.is_empty() {
            let tlen = out.len() as f64;
            for (t, &v) in out.iter().enumerate() {
                let r = (reference.log_prob(p, t, v) - probs[t][v].ln()).exp();
                add_dlogp(&mut grad, t, v, -hp.kl_beta * (1.0 - r) / (tlen * g));
            }
        }
    }
    for (t, &y) in prompt.label.iter().enumerate() {
        add_dlogp(&mut grad, t, y, hp.sft_weight);
    }
    grad
}

/// Splits `formula` into vocabulary pieces by greedy longest match,
/// ignoring whitespace.
pub fn segment(formula: &str, vocab: &[String]) -> Result<Vec<usize>, SgrpoError> {
    let mut out = Vec::new();
    let mut rest = formula.trim_start();
    while !rest.is_empty() {
        let best = vocab
            .iter()
            .enumerate()
            .filter(|(_, tok)| !tok.is_empty() && rest.starts_with(tok.as_str()))
            .max_by_key(|(i, tok)| (tok.len(), std::cmp::Reverse(*i)));
        match best {
            Some((i, tok)) => {
                out.push(i);
                rest = rest[tok.len()..].trim_start();
            }
            None => return Err(SgrpoError::Label(format!("no vocabulary token matches at {rest:?}"))),
        }
    }
    Ok(out)
}

/// Joins non-empty token texts with spaces.
pub fn render_tokens(seq: &[usize], vocab: &[String]) -> String {
    seq.iter().map(|&v| vocab[v].as_str()).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Token texts; an empty string is a padding token that renders as nothing.
    pub vocab: Vec<String>,
    pub references: Vec<String>,
    /// Initial logit scale for the current (and reference) policy.
    pub init_scale: f64,
    pub hyperparams: Hyperparams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let vocab = ["", "∀x", "∃x", "(", ")", "¬", "∧", "∨", "→", "Mortal(x)", "Person(x)", "Human(x)", "Animal(x)", "Dog(x)"];
        TrainConfig {
            iterations: 500,
            vocab: vocab.iter().map(|s| s.to_string()).collect(),
            references: vec![
                "∀x (Human(x) → Mortal(x))".into(),
                "∃x (Dog(x) ∧ Animal(x))".into(),
                "∀x (Mortal(x) → Person(x))".into(),
            ],
            init_scale: 0.0,
            hyperparams: Hyperparams::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self, SgrpoError> {
        toml::from_str(text).map_err(|e| SgrpoError::Config(e.to_string()))
    }

    /// Builds one prompt per reference. Labels are padded to `max_length`
    /// with the padding token when the vocabulary has one.
    pub fn prompts(&self) -> Result<Vec<PromptSpec>, SgrpoError> {
        let max_length = self.hyperparams.max_length;
        let pad = self.vocab.iter().position(String::is_empty);
        self.references
            .iter()
            .enumerate()
            .map(|(prompt_id, formula)| {
                parse(formula, ParseMode::Precedence)
                    .map_err(|e| SgrpoError::Reference { formula: formula.clone(), message: e.to_string() })?;
                let mut label = segment(formula, &self.vocab)?;
                if label.len() > max_length {
                    return Err(SgrpoError::Label(format!(
                        "label for {formula:?} has {} tokens, more than max_length {max_length}",
                        label.len()
                    )));
                }
                if let Some(pad) = pad {
                    label.resize(max_length, pad);
                }
                Ok(PromptSpec { prompt_id, label, reference_formula: formula.clone() })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub mean_reward: f64,
    pub reward_std: f64,
    pub surrogate: f64,
    pub sft: f64,
    pub kl: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub trace: Vec<TraceRow>,
    pub policy: PolicyParams,
    /// Every reward handed to the optimizer, in order.
    pub rewards_seen: usize,
}

pub fn write_trace<W: Write>(rows: &[TraceRow], mut w: W) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_trace_file(rows: &[TraceRow], path: &Path) -> Result<(), SgrpoError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_trace(rows, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reward for one rendered output: optimized LE against the reference,
/// 0 when it does not parse or scoring fails.
pub fn reward(text: &str, reference: &str, cfg: &LeConfig) -> f64 {
    le_score(text, reference, LeMode::Optimized, cfg).map(|r| r.score).unwrap_or(0.0).clamp(0.0, 1.0)
}

pub fn train_demo(config: &TrainConfig) -> Result<TrainOutcome, SgrpoError> {
    let hp = &config.hyperparams;
    hp.validate()?;
    if config.vocab.is_empty() || config.references.is_empty() {
        return Err(SgrpoError::Label("vocab and references must be non-empty".into()));
    }
    let prompts = config.prompts()?;
    let le_cfg = LeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut current =
        PolicyParams::random(prompts.len(), hp.max_length, config.vocab.len(), config.init_scale, Role::Current, &mut rng);
    let reference = current.with_role(Role::Reference);
    let mut cache: HashMap<(usize, String), f64> = HashMap::new();
    let mut trace = Vec::with_capacity(config.iterations);
    let mut rewards_seen = 0;

    for iter in 0..config.iterations {
        let mut all_rewards = Vec::new();
        let mut sums = ObjectiveBreakdown { surrogate: 0.0, sft: 0.0, kl: 0.0, objective: 0.0 };
        for prompt in &prompts {
            let old = current.with_role(Role::Old);
            let mut group = sample_group(&old, prompt, hp, &mut rng);
            let rewards: Vec<f64> = group
                .outputs
                .iter()
                .map(|o| {
                    let text = render_tokens(o, &config.vocab);
                    *cache
                        .entry((prompt.prompt_id, text))
                        .or_insert_with_key(|(_, t)| reward(t, &prompt.reference_formula, &le_cfg))
                })
                .collect();
            rewards_seen += rewards.len();
            all_rewards.extend_from_slice(&rewards);
            group.set_rewards(rewards, hp.std_epsilon);

            let b = sgrpo_objective(&current, &old, &reference, prompt, &group, hp);
            sums.surrogate += b.surrogate;
            sums.sft += b.sft;
            sums.kl += b.kl;
            sums.objective += b.objective;
            for _ in 0..hp.inner_epochs {
                let grad = objective_gradient(&current, &old, &reference, prompt, &group, hp);
                for (x, d) in current.logits.iter_mut().zip(&grad) {
                    *x += hp.learning_rate * d;
                }
            }
        }
        let n = prompts.len() as f64;
        let mean = all_rewards.iter().sum::<f64>() / all_rewards.len() as f64;
        let var = all_rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / all_rewards.len() as f64;
        trace.push(TraceRow {
            iter,
            mean_reward: mean,
            reward_std: var.sqrt(),
            surrogate: sums.surrogate / n,
            sft: sums.sft / n,
            kl: sums.kl / n,
            objective: sums.objective / n,
        });
    }
    Ok(TrainOutcome { trace, policy: current, rewards_seen })
}

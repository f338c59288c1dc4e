//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{corpus_le, load_pairs, EvalPair, PairFormat, Smoothing};
use crate::le::{LeConfig, LeMode};
use crate::service::{serve_stream, ServiceConfig};
use crate::sgrpo::{train_demo, write_trace, write_trace_file, TrainConfig};
use crate::syntax::{alternative_parses, parse, ParseMode, Style};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "folreward", version, about = "First-order logic parsing and logical-equivalence scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a formula and print its tree
    Parse(ParseArgs),
    /// Score a pair or a corpus
    Score(ScoreArgs),
    /// Serve newline-delimited JSON scoring requests
    Serve(ServeArgs),
    /// Run the toy training loop
    TrainDemo(TrainArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Original,
    Optimized,
}

impl From<ModeArg> for LeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Original => LeMode::Original,
            ModeArg::Optimized => LeMode::Optimized,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ParseModeArg {
    Precedence,
    FullyParenthesized,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StyleArg {
    Unicode,
    Ascii,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Jsonl,
    Tsv,
}

#[derive(Args, Debug)]
struct ParseArgs {
    formula: String,
    #[arg(long, value_enum, default_value = "precedence")]
    mode: ParseModeArg,
    #[arg(long, value_enum, default_value = "unicode")]
    style: StyleArg,
    /// Print the tree as JSON
    #[arg(long)]
    json: bool,
    /// Print the canonical form
    #[arg(long)]
    canonical: bool,
    /// List every bracketing reading
    #[arg(long)]
    alternatives: bool,
    /// Operands per chunk for --alternatives; 0 enumerates all readings
    #[arg(long, default_value_t = 0)]
    chunk_size: usize,
}

#[derive(Args, Debug, Default)]
struct ScoringFlags {
    /// Flat TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Operands per bracketing chunk; 0 enumerates all readings
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long)]
    max_atoms: Option<usize>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long, requires = "reference")]
    pred: Option<String>,
    #[arg(long = "ref", id = "reference", requires = "pred")]
    reference: Option<String>,
    /// One prediction per line
    #[arg(long, requires = "ref_file", conflicts_with_all = ["pred", "pairs"])]
    pred_file: Option<PathBuf>,
    /// One reference per line
    #[arg(long, requires = "pred_file")]
    ref_file: Option<PathBuf>,
    /// jsonl or tsv pair file
    #[arg(long, conflicts_with = "pred")]
    pairs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "jsonl")]
    pairs_format: FormatArg,
    #[command(flatten)]
    scoring: ScoringFlags,
    /// Per-pair report format
    #[arg(long, value_enum, default_value = "jsonl")]
    format: FormatArg,
    /// Per-pair report destination; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(id = "transport", required = true, args = ["socket", "stdio"])]
struct ServeArgs {
    #[arg(long)]
    socket: Option<PathBuf>,
    #[arg(long)]
    stdio: bool,
    #[command(flatten)]
    scoring: ScoringFlags,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// TOML training config; built-in defaults when absent
    #[arg(long)]
    config: Option<PathBuf>,
    /// jsonl trace destination; standard output when absent
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

/// Flat scoring config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threshold: Option<f64>,
    /// 0 enumerates all bracketings.
    pub chunk_size: Option<usize>,
    pub max_atoms: Option<usize>,
    pub mode: Option<LeMode>,
    pub ngram_sizes: Option<Vec<usize>>,
    /// Floor epsilon for zero n-gram matches; 0 disables smoothing.
    pub bleu_smoothing: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn apply(&self, cfg: &mut ServiceConfig) {
        if let Some(t) = self.threshold {
            cfg.le.similarity.threshold = t;
        }
        if let Some(m) = self.chunk_size {
            cfg.le.chunk_size = (m != 0).then_some(m);
        }
        if let Some(a) = self.max_atoms {
            cfg.le.limits.max_atoms = a;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(sizes) = &self.ngram_sizes {
            cfg.le.similarity.ngram_sizes = sizes.iter().copied().collect();
        }
        if let Some(eps) = self.bleu_smoothing {
            cfg.bleu.smoothing = if eps > 0.0 { Smoothing::Floor(eps) } else { Smoothing::None };
        }
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

fn build_config(flags: &ScoringFlags) -> Result<ServiceConfig, Failure> {
    let mut cfg = ServiceConfig::default();
    if let Some(path) = &flags.config {
        FileConfig::load(path).map_err(Failure::Usage)?.apply(&mut cfg);
    }
    FileConfig {
        threshold: flags.threshold,
        chunk_size: flags.chunk_size,
        max_atoms: flags.max_atoms,
        mode: flags.mode.map(LeMode::from),
        ngram_sizes: None,
        bleu_smoothing: None,
    }
    .apply(&mut cfg);
    cfg.le.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

/// Runs the command line `argv` (program name first) against the given
/// streams and returns the process exit code.
pub fn run_cli<I, S>(argv: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { write!(stdout, "{rendered}") } else { write!(stderr, "{rendered}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Parse(a) => cmd_parse(&a, stdout),
        Command::Score(a) => cmd_score(&a, stdout, stderr),
        Command::Serve(a) => cmd_serve(&a, stdin, stdout),
        Command::TrainDemo(a) => cmd_train(&a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_DATA
        }
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Data(format!("write failed: {e}"))
}

fn cmd_parse(a: &ParseArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mode = match a.mode {
        ParseModeArg::Precedence => ParseMode::Precedence,
        ParseModeArg::FullyParenthesized => ParseMode::FullyParenthesized,
    };
    let style = match a.style {
        StyleArg::Unicode => Style::Unicode,
        StyleArg::Ascii => Style::Ascii,
    };
    let mut expr = parse(&a.formula, mode).map_err(|e| Failure::Data(e.to_string()))?;
    if a.canonical {
        expr = expr.canonicalize();
    }
    if a.json {
        writeln!(out, "{}", serde_json::to_string(&expr).expect("tree serializes")).map_err(io_err)?;
    } else {
        writeln!(out, "{}", expr.render(style)).map_err(io_err)?;
    }
    if a.alternatives {
        let opts = LeConfig { chunk_size: (a.chunk_size != 0).then_some(a.chunk_size), ..LeConfig::default() }
            .bracket_options();
        let alts = alternative_parses(&a.formula, &opts).map_err(|e| Failure::Data(e.to_string()))?;
        for t in &alts.trees {
            writeln!(out, "  {}", t.render(style)).map_err(io_err)?;
        }
        writeln!(out, "{} readings", alts.trees.len()).map_err(io_err)?;
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn gather_pairs(a: &ScoreArgs, err: &mut dyn Write) -> Result<Vec<EvalPair>, Failure> {
    if let (Some(p), Some(r)) = (&a.pred, &a.reference) {
        return Ok(vec![EvalPair::new("0", p.clone(), r.clone())]);
    }
    if let (Some(pf), Some(rf)) = (&a.pred_file, &a.ref_file) {
        let preds = read_lines(pf)?;
        let refs = read_lines(rf)?;
        if preds.len() != refs.len() {
            return Err(Failure::Data(format!(
                "{} has {} lines but {} has {}",
                pf.display(),
                preds.len(),
                rf.display(),
                refs.len()
            )));
        }
        return Ok(preds.into_iter().zip(refs).enumerate().map(|(i, (p, r))| EvalPair::new(i.to_string(), p, r)).collect());
    }
    if let Some(path) = &a.pairs {
        let format = match a.pairs_format {
            FormatArg::Jsonl => PairFormat::Jsonl,
            FormatArg::Tsv => PairFormat::Tsv,
        };
        let loaded = load_pairs(path, format).map_err(|e| Failure::Data(e.to_string()))?;
        for m in &loaded.malformed {
            let _ = writeln!(err, "warning: {}:{}: {}", path.display(), m.line, m.message);
        }
        return Ok(loaded.pairs);
    }
    Err(Failure::Usage("give --pred/--ref, --pred-file/--ref-file or --pairs".into()))
}

fn cmd_score(a: &ScoreArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let cfg = build_config(&a.scoring)?;
    let pairs = gather_pairs(a, err)?;
    if pairs.is_empty() {
        return Err(Failure::Data("no pairs to score".into()));
    }
    let report = corpus_le(&pairs, cfg.mode, &cfg.le, &cfg.bleu).map_err(|e| Failure::Data(e.to_string()))?;

    let mut rows = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let scored = report.per_pair.iter().find(|p| p.id == pair.id);
        let failed = report.failures.iter().find(|f| f.id == pair.id);
        rows.push(match a.format {
            FormatArg::Jsonl => serde_json::to_string(&json!({
                "id": pair.id,
                "score": scored.map_or(0.0, |p| p.report.score),
                "detail": scored.map(|p| &p.report),
                "error": failed.map(|f| &f.error),
            }))
            .expect("row serializes"),
            FormatArg::Tsv => format!(
                "{}\t{}\t{}",
                pair.id,
                scored.map_or(0.0, |p| p.report.score),
                failed.map_or("", |f| f.error.as_str())
            ),
        });
    }
    let body = rows.join("\n") + "\n";
    match &a.out {
        Some(path) => std::fs::write(path, body).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))?,
        None => out.write_all(body.as_bytes()).map_err(io_err)?,
    }
    let summary = json!({
        "pairs": pairs.len(),
        "failures": report.failures.len(),
        "mean_le": report.mean_le,
        "bleu": report.bleu,
    });
    writeln!(out, "{summary}").map_err(io_err)
}

fn cmd_serve(a: &ServeArgs, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = build_config(&a.scoring)?;
    if a.stdio {
        serve_stream(stdin, stdout, &cfg).map_err(|e| Failure::Data(e.to_string()))?;
        return Ok(());
    }
    let path = a.socket.as_ref().expect("clap enforces a transport");
    #[cfg(unix)]
    {
        crate::service::serve_unix(path, cfg).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    }
    #[cfg(not(unix))]
    {
        Err(Failure::Usage(format!("unix sockets are unavailable on this platform: {}", path.display())))
    }
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            TrainConfig::from_toml(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if let Some(s) = a.seed {
        cfg.hyperparams.seed = s;
    }
    if let Some(lr) = a.learning_rate {
        cfg.hyperparams.learning_rate = lr;
    }
    let outcome = train_demo(&cfg).map_err(|e| Failure::Data(e.to_string()))?;
    match &a.trace {
        Some(path) => write_trace_file(&outcome.trace, path).map_err(|e| Failure::Data(e.to_string()))?,
        None => write_trace(&outcome.trace, &mut *out).map_err(io_err)?,
    }
    if let (Some(first), Some(last)) = (outcome.trace.first(), outcome.trace.last()) {
        let _ = writeln!(
            err,
            "iterations {}: mean reward {:.3} -> {:.3}",
            outcome.trace.len(),
            first.mean_reward,
            last.mean_reward
        );
    }
    Ok(())
}

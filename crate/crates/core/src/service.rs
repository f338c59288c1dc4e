//! Newline-delimited JSON scoring service.
//!
//! Each request line is one JSON object with keys `id`, `op`, `prediction`,
//! `reference`, `mode` and `overrides`; each response line carries exactly
//! the keys `id`, `score`, `detail` and `error`. Scores are always in
//! `[0, 1]`.

use std::io::{BufRead, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{corpus_bleu_breakdown, BleuConfig, EvalPair};
use crate::le::{le_score, LeConfig, LeError, LeMode, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    LeScore,
    BleuPair,
    Shutdown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub threshold: Option<f64>,
    pub chunk_size: Option<usize>,
    pub max_atoms: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub op: Op,
    #[serde(default)]
    pub prediction: String,
    #[serde(default)]
    pub reference: String,
    #[serde(default)]
    pub mode: Option<LeMode>,
    #[serde(default)]
    pub overrides: Option<Overrides>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadRequest,
    CapExceeded,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    pub score: Option<f64>,
    pub detail: Option<Value>,
    pub error: Option<ErrorBody>,
}

impl ScoreResponse {
    fn ok(id: &str, score: f64, detail: Value) -> Self {
        ScoreResponse { id: id.to_string(), score: Some(score.clamp(0.0, 1.0)), detail: Some(detail), error: None }
    }

    fn err(id: &str, code: ErrorCode, message: impl Into<String>) -> Self {
        ScoreResponse { id: id.to_string(), score: None, detail: None, error: Some(ErrorBody { code, message: message.into() }) }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

/// Immutable configuration shared by every request.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServiceConfig {
    pub le: LeConfig,
    pub mode: LeMode,
    pub bleu: BleuConfig,
}

/// Scores one request. Never panics; internal failures become `INTERNAL`.
pub fn handle_request(req: &ScoreRequest, cfg: &ServiceConfig) -> ScoreResponse {
    if req.id.is_empty() {
        return ScoreResponse::err("?", ErrorCode::BadRequest, "id must be non-empty");
    }
    match catch_unwind(AssertUnwindSafe(|| dispatch(req, cfg))) {
        Ok(resp) => resp,
        Err(_) => ScoreResponse::err(&req.id, ErrorCode::Internal, "scoring panicked"),
    }
}

fn dispatch(req: &ScoreRequest, cfg: &ServiceConfig) -> ScoreResponse {
    match req.op {
        Op::LeScore => le_request(req, cfg),
        Op::BleuPair => {
            let pair = [EvalPair::new(req.id.clone(), req.prediction.clone(), req.reference.clone())];
            match corpus_bleu_breakdown(&pair, &cfg.bleu) {
                Ok(b) => {
                    let detail = serde_json::to_value(&b).expect("breakdown serializes");
                    ScoreResponse::ok(&req.id, b.bleu / 100.0, detail)
                }
                Err(e) => ScoreResponse::err(&req.id, ErrorCode::Internal, e.to_string()),
            }
        }
        Op::Shutdown => ScoreResponse::ok(&req.id, 0.0, json!({ "shutdown": true })),
    }
}

fn le_request(req: &ScoreRequest, cfg: &ServiceConfig) -> ScoreResponse {
    let mut le = cfg.le.clone();
    if let Some(o) = req.overrides {
        if let Some(t) = o.threshold {
            le.similarity.threshold = t;
        }
        if let Some(m) = o.chunk_size {
            le.chunk_size = Some(m);
        }
        if let Some(a) = o.max_atoms {
            le.limits.max_atoms = a;
        }
    }
    if let Err(e) = le.validate() {
        return ScoreResponse::err(&req.id, ErrorCode::BadRequest, e.to_string());
    }
    let mode = req.mode.unwrap_or(cfg.mode);
    let mut result = le_score(&req.prediction, &req.reference, mode, &le);
    let mut fallback = false;
    if matches!(result, Err(LeError::FactorialCapExceeded { .. })) {
        fallback = true;
        result = le_score(&req.prediction, &req.reference, LeMode::Optimized, &le);
    }
    match result {
        Ok(report) => {
            let mut detail = serde_json::to_value(&report).expect("report serializes");
            if fallback {
                detail["fallback"] = json!("optimized");
            }
            ScoreResponse::ok(&req.id, report.score, detail)
        }
        Err(e) if e.is_cap() => ScoreResponse::err(&req.id, ErrorCode::CapExceeded, e.to_string()),
        Err(LeError::Syntax { side: Side::Prediction, source }) => {
            ScoreResponse::ok(&req.id, 0.0, json!({ "warning": format!("prediction did not parse: {source}") }))
        }
        Err(e) => ScoreResponse::err(&req.id, ErrorCode::BadRequest, e.to_string()),
    }
}

/// What one input line asks of the transport loop.
pub enum LineOutcome {
    Respond(ScoreResponse),
    Shutdown,
    Skip,
}

pub fn handle_line(line: &str, cfg: &ServiceConfig) -> LineOutcome {
    if line.trim().is_empty() {
        return LineOutcome::Skip;
    }
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return LineOutcome::Respond(ScoreResponse::err("?", ErrorCode::BadRequest, format!("invalid JSON: {e}"))),
    };
    let id = value.get("id").and_then(Value::as_str).filter(|s| !s.is_empty()).unwrap_or("?").to_string();
    match serde_json::from_value::<ScoreRequest>(value) {
        Ok(req) if req.op == Op::Shutdown => LineOutcome::Shutdown,
        Ok(req) => LineOutcome::Respond(handle_request(&req, cfg)),
        Err(e) => LineOutcome::Respond(ScoreResponse::err(&id, ErrorCode::BadRequest, e.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamEnd {
    Eof,
    Shutdown,
}

/// Serves requests from `reader` until end of stream or a shutdown request.
/// Responses are written in request order and flushed per line.
pub fn serve_stream<R: BufRead, W: Write>(reader: R, mut writer: W, cfg: &ServiceConfig) -> std::io::Result<StreamEnd> {
    for line in reader.lines() {
        match handle_line(&line?, cfg) {
            LineOutcome::Respond(resp) => {
                writer.write_all(resp.to_line().as_bytes())?;
                writer.write_all(b"\n")?;
                writer.flush()?;
            }
            LineOutcome::Shutdown => return Ok(StreamEnd::Shutdown),
            LineOutcome::Skip => {}
        }
    }
    Ok(StreamEnd::Eof)
}

/// Listens on a unix socket, one thread per connection, until any client
/// sends a shutdown request. The socket file is removed on exit.
#[cfg(unix)]
pub fn serve_unix(path: &std::path::Path, cfg: ServiceConfig) -> std::io::Result<()> {
    use std::io::BufReader;
    use std::os::unix::net::{UnixListener, UnixStream};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::Arc;

    if path.exists() {
        std::fs::remove_file(path)?;
    }
    let listener = UnixListener::bind(path)?;
    let cfg = Arc::new(cfg);
    let stop = Arc::new(AtomicBool::new(false));
    let mut workers = Vec::new();
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let (cfg, stop, path) = (Arc::clone(&cfg), Arc::clone(&stop), path.to_path_buf());
        workers.push(std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(r) => BufReader::new(r),
                Err(_) => return,
            };
            if let Ok(StreamEnd::Shutdown) = serve_stream(reader, &stream, &cfg) {
                stop.store(true, Ordering::SeqCst);
                // wake the accept loop
                let _ = UnixStream::connect(&path);
            }
        }));
    }
    drop(listener);
    let _ = std::fs::remove_file(path);
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

//! Browser bindings for the scoring engine and the toy trainer.
//!
//! Each exported function takes plain values and returns a JSON string, so
//! the page needs no generated glue beyond `wasm-bindgen`'s own. The `_impl`
//! functions hold the logic and run natively in tests.

use folreward::le::{le_score, LeConfig, LeMode};
use folreward::sgrpo::{train_demo, TrainConfig};
use folreward::syntax::{alternative_parses, BracketOptions, Style};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest iteration count the page may request.
pub const MAX_DEMO_ITERATIONS: usize = 2000;

fn chunk(chunk_size: u32) -> Option<usize> {
    (chunk_size != 0).then_some(chunk_size as usize)
}

pub fn score_impl(prediction: &str, reference: &str, mode: &str, threshold: f64, chunk_size: u32) -> Result<String, String> {
    let mode: LeMode = mode.parse().map_err(|e: String| e)?;
    let mut cfg = LeConfig { chunk_size: chunk(chunk_size), ..LeConfig::default() };
    cfg.similarity.threshold = threshold;
    cfg.validate().map_err(|e| e.to_string())?;
    let report = le_score(prediction, reference, mode, &cfg).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Alternative readings of `formula`, unchunked and chunked, with at most
/// `show` rendered trees each.
pub fn bracketings_impl(formula: &str, chunk_size: u32, show: usize) -> Result<String, String> {
    let full = alternative_parses(formula, &BracketOptions::full()).map_err(|e| e.to_string())?;
    let opts = match chunk(chunk_size) {
        Some(m) => BracketOptions::chunked(m),
        None => BracketOptions::full(),
    };
    let chunked = alternative_parses(formula, &opts).map_err(|e| e.to_string())?;
    let render = |trees: &[folreward::syntax::FolExpr]| -> Vec<String> {
        trees.iter().take(show).map(|t| t.render(Style::Unicode)).collect()
    };
    Ok(json!({
        "full": { "count": full.trees.len(), "stats": full.stats, "trees": render(&full.trees) },
        "chunked": { "count": chunked.trees.len(), "stats": chunked.stats, "trees": render(&chunked.trees) },
    })
    .to_string())
}

pub fn train_impl(iterations: usize, seed: u64, learning_rate: f64) -> Result<String, String> {
    if iterations == 0 || iterations > MAX_DEMO_ITERATIONS {
        return Err(format!("iterations must be in 1..={MAX_DEMO_ITERATIONS}"));
    }
    let mut cfg = TrainConfig { iterations, ..TrainConfig::default() };
    cfg.hyperparams.seed = seed;
    cfg.hyperparams.learning_rate = learning_rate;
    let out = train_demo(&cfg).map_err(|e| e.to_string())?;
    serde_json::to_string(&out.trace).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn score(prediction: &str, reference: &str, mode: &str, threshold: f64, chunk_size: u32) -> Result<String, JsValue> {
    score_impl(prediction, reference, mode, threshold, chunk_size).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bracketings(formula: &str, chunk_size: u32) -> Result<String, JsValue> {
    bracketings_impl(formula, chunk_size, 50).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn train(iterations: u32, seed: u32, learning_rate: f64) -> Result<String, JsValue> {
    train_impl(iterations as usize, seed as u64, learning_rate).map_err(|e| JsValue::from_str(&e))
}

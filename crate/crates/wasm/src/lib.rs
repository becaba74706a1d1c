//! Browser bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings and uses the lexical scorer,
//! so the page runs with no server.

use attrib_core::attribution::{attribute as run_attribution, Method};
use attrib_core::dialogue::segment_sentences;
use attrib_core::evaluation::{evaluate, format_table, generate_synthetic, Noise, TABLE_NOTE};
use attrib_core::{Dialogue, LexicalScorer, TargetResponse};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Attribution of `target` over a dialogue in the JSON dialogue format.
pub fn attribute_json(dialogue_json: &str, target: &str, method: &str) -> Result<String, String> {
    let dialogue = Dialogue::from_json(dialogue_json).map_err(|e| e.to_string())?;
    let target = TargetResponse::new(target).map_err(|e| e.to_string())?;
    let method: Method = method.parse().map_err(|e: attrib_core::Error| e.to_string())?;
    let result = run_attribution(&dialogue, &target, &LexicalScorer, method).map_err(|e| e.to_string())?;
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

pub fn segment_json(text: &str) -> String {
    serde_json::to_string(&segment_sentences(1, text)).unwrap_or_else(|_| "[]".into())
}

#[derive(Serialize)]
struct SyntheticRun {
    note: &'static str,
    table: String,
    reports: Vec<attrib_core::evaluation::MetricsReport>,
}

/// Generates a synthetic corpus and scores every method on it.
pub fn evaluate_synthetic_json(cases: usize, turns: usize, seed: u64, hard: bool) -> Result<String, String> {
    let noise = if hard { Noise::Hard } else { Noise::Clean };
    let corpus = generate_synthetic(cases, turns, seed, noise).map_err(|e| e.to_string())?;
    let reports = Method::ALL
        .iter()
        .map(|&m| evaluate(&corpus, m, &LexicalScorer))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let run = SyntheticRun { note: TABLE_NOTE, table: format_table(&reports), reports };
    serde_json::to_string(&run).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn attribute(dialogue_json: &str, target: &str, method: &str) -> Result<String, JsError> {
    attribute_json(dialogue_json, target, method).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn segment(text: &str) -> String {
    segment_json(text)
}

#[wasm_bindgen]
pub fn evaluate_synthetic(cases: u32, turns: u32, seed: u32, hard: bool) -> Result<String, JsError> {
    evaluate_synthetic_json(cases as usize, turns as usize, u64::from(seed), hard).map_err(|e| JsError::new(&e))
}

//! Browser bindings for the split covariance intersection demo.
//!
//! Every entry point takes a problem in the same JSON layout the CLI reads
//! and returns a JSON string. Failures come back as an error object with
//! `error` and `message` fields.

use wasm_bindgen::prelude::*;

pub mod demo;

/// Ellipses for `C_A`, `C_B`, the CI and SCI bounds at `omega`, and `V*`.
#[wasm_bindgen]
pub fn scene(problem: &str, omega: f64, points: usize) -> Result<String, JsValue> {
    demo::scene(problem, omega, points).map_err(|e| JsValue::from_str(&e))
}

/// Optimal SCI parameter for the named cost.
#[wasm_bindgen]
pub fn optimize(problem: &str, cost: &str) -> Result<String, JsValue> {
    demo::optimize(problem, cost).map_err(|e| JsValue::from_str(&e))
}

/// Case, `ω0`, and worst-case cross covariance along the direction at `angle`.
#[wasm_bindgen]
pub fn analyze(problem: &str, angle: f64) -> Result<String, JsValue> {
    demo::analyze(problem, angle).map_err(|e| JsValue::from_str(&e))
}

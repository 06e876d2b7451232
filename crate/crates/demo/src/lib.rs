//! Browser bindings. Each export takes and returns plain strings or numbers;
//! the `*_json` functions are usable natively as well.

use std::time::Duration;

use medsched_core::constraints::CheckMode;
use medsched_core::facts::{emit_facts, parse_facts, ParseMode};
use medsched_core::generator::{generate, GenProfile};
use medsched_core::objective::ObjectiveWeights;
use medsched_core::preference::encode_time_of_day;
use medsched_core::solver::{solve_exact, solve_greedy_first_available, SolveOptions};
use medsched_core::validate::validate_instance;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const DEMO_BUDGET: Duration = Duration::from_secs(10);

/// Solves a fact-format instance. `weights` is a JSON object (possibly
/// empty) and `mode` is `faithful` or `strict`. The result holds the exact
/// solution with its per-appointment breakdown and the greedy baseline.
pub fn solve_facts_json(facts: &str, weights: &str, mode: &str) -> Result<Value, String> {
    let parsed = parse_facts(facts, ParseMode::Lenient).map_err(|e| e.to_string())?;
    let report = validate_instance(&parsed.instance);
    if !report.is_valid() {
        let first = report.errors().next().unwrap();
        return Err(format!("{}: {}", first.code, first.fact));
    }
    let weights: ObjectiveWeights = if weights.trim().is_empty() {
        ObjectiveWeights::default()
    } else {
        medsched_core::json::from_json_str(weights).map_err(|e| e.to_string())?
    };
    let mode: CheckMode = mode.parse()?;
    let opts = SolveOptions {
        weights,
        time_budget: DEMO_BUDGET,
        mode,
    };
    let exact = solve_exact(&parsed.instance, &opts).map_err(|e| e.to_string())?;
    let greedy = solve_greedy_first_available(&parsed.instance, &opts).map_err(|e| e.to_string())?;
    Ok(json!({
        "warnings": parsed.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "exact": exact,
        "greedy": greedy,
    }))
}

/// Generates an instance in fact format. `profile` is one of `default`,
/// `small`, `contention` or `minimal`.
pub fn generate_facts(
    seed: u64,
    patients: usize,
    clinics: usize,
    slots: usize,
    profile: &str,
) -> Result<String, String> {
    let profile = match profile {
        "default" => GenProfile::default(),
        "small" => GenProfile::small(),
        "contention" => GenProfile::contention(),
        "minimal" => GenProfile::minimal(),
        other => return Err(format!("unknown profile {other:?}")),
    };
    generate(seed, patients, clinics, slots, &profile)
        .map(|inst| emit_facts(&inst))
        .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn solve_facts(facts: &str, weights: &str, mode: &str) -> Result<String, JsError> {
    solve_facts_json(facts, weights, mode)
        .map(|v| v.to_string())
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn generate_instance(seed: u32, patients: u32, clinics: u32, slots: u32, profile: &str) -> Result<String, JsError> {
    generate_facts(
        u64::from(seed),
        patients as usize,
        clinics as usize,
        slots as usize,
        profile,
    )
    .map_err(|e| JsError::new(&e))
}

/// Time-of-day code of a Unix timestamp, as used by time-window preferences.
#[wasm_bindgen]
pub fn encode_time(unix_seconds: f64) -> i32 {
    encode_time_of_day(unix_seconds as i64) as i32
}

#[wasm_bindgen]
pub fn default_weights() -> String {
    serde_json::to_string(&ObjectiveWeights::default()).unwrap()
}

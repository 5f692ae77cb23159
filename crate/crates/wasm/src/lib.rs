//! Browser bindings for three interactive views: skew Brownian paths,
//! local-time estimator curves, and the scale function of a measure.
//!
//! Each export wraps a plain function returning `Result<_, String>`, so the
//! logic is testable natively, where JS values cannot be created.

use semilt::local_time::{estimate, EstimatorConfig, EstimatorTag};
use semilt::measure::{ScaleFunction, SignedMeasure};
use semilt::paths::{sample_brownian, SeedSpec, TimeGrid};
use semilt::sde::{local_time_drift_solver_with, Coefficient};
use wasm_bindgen::prelude::*;

const MAX_STEPS: usize = 1 << 16;
const MAX_PATHS: usize = 64;

fn grid(steps: usize) -> Result<TimeGrid, String> {
    if steps == 0 || steps > MAX_STEPS {
        return Err(format!("steps must lie in 1..={MAX_STEPS}"));
    }
    TimeGrid::new(1.0, steps).map_err(|e| e.to_string())
}

/// `paths` skew Brownian paths on [0, 1] from the scale-transform solver,
/// concatenated; each has `steps + 1` values.
pub fn skew_paths_native(beta: f64, steps: usize, paths: usize, seed: u64) -> Result<Vec<f64>, String> {
    if beta.is_nan() || beta.abs() >= 1.0 {
        return Err("|beta| must be below 1".into());
    }
    if paths == 0 || paths > MAX_PATHS {
        return Err(format!("paths must lie in 1..={MAX_PATHS}"));
    }
    let g = grid(steps)?;
    let m = SignedMeasure::atom(0.0, beta).map_err(|e| e.to_string())?;
    let scale = ScaleFunction::new(&m).map_err(|e| e.to_string())?;
    let one = Coefficient::constant(1.0);
    let mut out = Vec::with_capacity(paths * g.len());
    for i in 0..paths {
        let b = sample_brownian(g, SeedSpec::new(seed, i as u64)).map_err(|e| e.to_string())?;
        let x = local_time_drift_solver_with(&scale, &one, &b, 0.0).map_err(|e| e.to_string())?;
        out.extend_from_slice(x.state.values());
    }
    Ok(out)
}

/// One Brownian path followed by its occupation, upcrossing and symmetric
/// Tanaka local-time curves at `level`; four blocks of `steps + 1` values.
pub fn local_time_curves_native(level: f64, steps: usize, seed: u64) -> Result<Vec<f64>, String> {
    if !level.is_finite() {
        return Err("level must be finite".into());
    }
    let g = grid(steps)?;
    let b = sample_brownian(g, SeedSpec::new(seed, 0)).map_err(|e| e.to_string())?;
    let cfg = EstimatorConfig::default();
    let mut out = b.values().to_vec();
    for tag in [EstimatorTag::Occupation, EstimatorTag::Upcrossing, EstimatorTag::TanakaSymmetric] {
        out.extend(estimate(&b, level, tag, &cfg).map_err(|e| e.to_string())?.values);
    }
    Ok(out)
}

/// `F_ν` at `points` equally spaced x in `[lo, hi]`, for a measure literal
/// such as `atom(0, 0.5); gaussian(1, 1, 0.2) on [0, 2]`.
pub fn scale_function_native(measure: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || !(2..=4096).contains(&points) {
        return Err("need lo < hi and 2..=4096 points".into());
    }
    let m = SignedMeasure::parse(measure).map_err(|e| e.to_string())?;
    let f = ScaleFunction::new(&m).map_err(|e| e.to_string())?;
    Ok((0..points).map(|i| f.eval(lo + (hi - lo) * i as f64 / (points - 1) as f64)).collect())
}

#[wasm_bindgen]
pub fn skew_paths(beta: f64, steps: usize, paths: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    skew_paths_native(beta, steps, paths, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn local_time_curves(level: f64, steps: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    local_time_curves_native(level, steps, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn scale_function(measure: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    scale_function_native(measure, lo, hi, points).map_err(|e| JsError::new(&e))
}

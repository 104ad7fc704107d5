//! Browser bindings: bound curves, Rayleigh quotient curves and a coarse
//! finite-difference ground state, each returned as a JSON string.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use brokenline::spectral::{self, SolveOptions};
use brokenline::trial::{bound_constants, closed_r, lambda_upper};
use brokenline::variational::rayleigh;
use brokenline::{TrialParams, WedgeConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct BoundCurve {
    theta: Vec<f64>,
    capital_lambda: Vec<f64>,
    bound: Vec<f64>,
}

#[derive(Serialize)]
struct RayleighCurve {
    n: Vec<f64>,
    r_value: Vec<f64>,
    quotient: Vec<f64>,
    closed_r: f64,
    threshold: f64,
    bound: f64,
}

#[derive(Serialize)]
struct GroundState {
    eigenvalue: f64,
    threshold: f64,
    bound: Option<f64>,
    iterations: usize,
    nodes: usize,
    half_width: f64,
    /// `nodes × nodes` with `x1` fastest, normalized to a maximum of one.
    field: Vec<f32>,
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn err(e: brokenline::Error) -> String {
    e.to_string()
}

pub fn bound_curve_json(theta_min: f64, theta_max: f64, steps: usize, alpha: f64) -> Result<String, String> {
    if !(2..=10_000).contains(&steps) || !(theta_min < theta_max) {
        return Err("need 2..=10000 steps and theta_min < theta_max".into());
    }
    let theta: Vec<f64> = (0..steps)
        .map(|k| theta_min + (theta_max - theta_min) * k as f64 / (steps - 1) as f64)
        .collect();
    let capital_lambda = theta
        .iter()
        .map(|&t| lambda_upper(t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let bound = capital_lambda.iter().map(|l| -alpha * alpha * (0.25 + l)).collect();
    json(&BoundCurve {
        theta,
        capital_lambda,
        bound,
    })
}

/// Quotient of `h_n` at `rho` for `n` log-spaced over `[n_min, n_max]`.
pub fn rayleigh_curve_json(
    theta: f64,
    alpha: f64,
    rho: f64,
    n_min: f64,
    n_max: f64,
    steps: usize,
) -> Result<String, String> {
    if !(2..=400).contains(&steps) || !(n_min > 0.0 && n_min < n_max) {
        return Err("need 2..=400 steps and 0 < n_min < n_max".into());
    }
    let cfg = WedgeConfig::new(theta, alpha).map_err(err)?;
    let ratio = (n_max / n_min).ln();
    let mut curve = RayleighCurve {
        n: Vec::with_capacity(steps),
        r_value: Vec::with_capacity(steps),
        quotient: Vec::with_capacity(steps),
        closed_r: closed_r(&cfg, rho).map_err(err)?,
        threshold: -0.25 * alpha * alpha,
        bound: bound_constants(&cfg).map_err(err)?.lambda_upper_bound,
    };
    for k in 0..steps {
        let n = n_min * (ratio * k as f64 / (steps - 1) as f64).exp();
        let report = rayleigh(&cfg, &TrialParams::new(&cfg, rho, n).map_err(err)?).map_err(err)?;
        curve.n.push(n);
        curve.r_value.push(report.r_value);
        curve.quotient.push(report.quotient);
    }
    json(&curve)
}

/// Single-grid ground state; `cells` per half-width is capped to keep the
/// page responsive.
pub fn ground_state_json(theta: f64, alpha: f64, half_width: f64, cells: usize) -> Result<String, String> {
    if cells > 256 {
        return Err("at most 256 cells per half-width in the browser".into());
    }
    let cfg = WedgeConfig::new(theta, alpha).map_err(err)?;
    let opts = SolveOptions {
        extrapolate: false,
        enlarge_box: false,
        estimate_box_error: false,
        ..SolveOptions::default().with_box(half_width, cells)
    };
    let res = spectral::solve(&cfg, &opts).map_err(err)?;
    let peak = res.eigenvector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let field = res.eigenvector.iter().map(|v| (v / peak) as f32).collect();
    json(&GroundState {
        eigenvalue: res.eigenvalue,
        threshold: -0.25 * alpha * alpha,
        bound: bound_constants(&cfg).ok().map(|b| b.lambda_upper_bound),
        iterations: res.levels[0].iterations,
        nodes: res.grid.nodes_per_axis(),
        half_width: res.grid.half_width(),
        field,
    })
}

#[wasm_bindgen]
pub fn bound_curve(theta_min: f64, theta_max: f64, steps: usize, alpha: f64) -> Result<String, JsValue> {
    bound_curve_json(theta_min, theta_max, steps, alpha).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rayleigh_curve(
    theta: f64,
    alpha: f64,
    rho: f64,
    n_min: f64,
    n_max: f64,
    steps: usize,
) -> Result<String, JsValue> {
    rayleigh_curve_json(theta, alpha, rho, n_min, n_max, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn ground_state(theta: f64, alpha: f64, half_width: f64, cells: usize) -> Result<String, JsValue> {
    ground_state_json(theta, alpha, half_width, cells).map_err(|e| JsValue::from_str(&e))
}

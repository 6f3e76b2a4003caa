//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export takes the Φ-function as the JSON form of a `PhiSpec`, e.g.
//! `{"domain": {"kind": "rect", "x": [-1, 1], "y": [-1, 1]},
//!   "family": {"kind": "double_phase", "p": 2, "q": 2.2, "a": "abs(x1)"},
//!   "moduli": {"a": {"c": 1, "beta": 1}}}`.
//! The `*_rows` functions hold the logic and are what the native tests call.

use musielak::conditions::{check_matrix, closed_form_modulus, CheckOptions};
use musielak::geometry::Ball;
use musielak::numeric::logspace;
use musielak::phi::{Conjugate, Frozen, PhiFn, PhiSpec};
use musielak::regularize::{RegularizeOptions, RegularizedPhi};
use wasm_bindgen::prelude::*;

pub fn parse_spec(json: &str) -> Result<PhiSpec, String> {
    serde_json::from_str(json).map_err(|e| e.to_string())
}

/// Rows `(t, φ(x,t), φ'(x,t), φ*(x,t))` at `points` log-spaced `t`.
pub fn curve_rows(spec: &PhiSpec, x: &[f64], t_min: f64, t_max: f64, points: usize) -> Result<Vec<[f64; 4]>, String> {
    if x.len() != spec.domain().dim() {
        return Err(format!("x needs {} coordinates", spec.domain().dim()));
    }
    if !(t_min > 0.0 && t_min < t_max) || points < 2 {
        return Err("need 0 < t_min < t_max and at least 2 points".into());
    }
    let frozen = Frozen { base: spec, at: x.to_vec() };
    let star = Conjugate::new(&frozen);
    logspace(t_min, t_max, points)
        .into_iter()
        .map(|t| {
            let f = spec.eval(x, t)?;
            let d = spec.deriv(x, t)?;
            Ok([t, f, d, star.eval(x, t)?])
        })
        .collect::<musielak::Result<_>>()
        .map_err(|e| e.to_string())
}

/// Summaries of (A1), (VA1) and (wVA1) on `balls` balls per radius.
pub fn condition_lines(spec: &PhiSpec, radii: &[f64], eps: f64, balls: usize) -> Result<Vec<String>, String> {
    let opts = CheckOptions {
        balls: balls.max(1),
        ..Default::default()
    };
    let m = check_matrix(spec, spec.domain(), radii, eps, &opts).map_err(|e| e.to_string())?;
    let mut lines = vec![m.a1.summary(), m.va1.summary(), m.wva1.summary()];
    lines.push(if m.chain_violations.is_empty() {
        "implication chain consistent".into()
    } else {
        format!("implication chain violated: {}", m.chain_violations.join("; "))
    });
    Ok(lines)
}

/// Rows `(t, φ̃(t), φ(x₀,t))` of the regularized function on `B_r(x₀)`.
pub fn regularized_rows(spec: &PhiSpec, center: &[f64], r: f64, points: usize) -> Result<Vec<[f64; 3]>, String> {
    let fail = |e: musielak::Error| e.to_string();
    let ball = Ball::new(center.to_vec(), r).and_then(|b| b.clipped(spec.domain())).map_err(fail)?;
    let omega = closed_form_modulus(spec, 0.0).map_err(fail)?;
    let reg = RegularizedPhi::build(spec, &ball, &omega, &RegularizeOptions::default()).map_err(fail)?;
    let th = reg.thresholds();
    let lo = if th.t1 > 0.0 { th.t1 / 4.0 } else { th.t2 / 100.0 };
    logspace(lo, 4.0 * th.t2, points.max(2))
        .into_iter()
        .map(|t| Ok([t, reg.eval(center, t)?, spec.eval(center, t)?]))
        .collect::<musielak::Result<_>>()
        .map_err(fail)
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Flattened `curve_rows`.
#[wasm_bindgen]
pub fn phi_curve(spec: &str, x: Vec<f64>, t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let spec = parse_spec(spec).map_err(js)?;
    Ok(curve_rows(&spec, &x, t_min, t_max, points).map_err(js)?.concat())
}

/// `condition_lines` joined by newlines.
#[wasm_bindgen]
pub fn check_conditions(spec: &str, radii: Vec<f64>, eps: f64, balls: usize) -> Result<String, JsError> {
    let spec = parse_spec(spec).map_err(js)?;
    Ok(condition_lines(&spec, &radii, eps, balls).map_err(js)?.join("\n"))
}

/// Flattened `regularized_rows`.
#[wasm_bindgen]
pub fn regularize(spec: &str, center: Vec<f64>, r: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let spec = parse_spec(spec).map_err(js)?;
    Ok(regularized_rows(&spec, &center, r, points).map_err(js)?.concat())
}

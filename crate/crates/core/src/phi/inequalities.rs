//! Sampled checks of the standard inequalities relating `φ`, `φ'` and `φ*`.
//!
//! Every check returns realized ratios so callers can compare them with the
//! constants they expect; nothing here asserts a bound on its own.

use super::{Conjugate, Frozen, PhiFn};
use crate::error::Result;

/// Outcome of Young's inequality `ts ≤ φ(t) + φ*(s)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest `ts / (φ(t) + φ*(s))`; at most 1 when nothing is violated.
    pub max_ratio: f64,
}

/// Relative slack allowed for round-off in the conjugate.
const YOUNG_SLACK: f64 = 1e-9;

/// Young's inequality at `x` over all pairs of `ts × ss`.
pub fn young(phi: &dyn PhiFn, x: &[f64], ts: &[f64], ss: &[f64]) -> Result<YoungReport> {
    let frozen = Frozen { base: phi, at: x.to_vec() };
    let star = Conjugate::new(&frozen);
    let star_s = ss.iter().map(|&s| star.eval(x, s)).collect::<Result<Vec<_>>>()?;
    let mut report = YoungReport {
        checked: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    for &t in ts {
        let ft = phi.eval(x, t)?;
        for (&s, &fs) in ss.iter().zip(&star_s) {
            let rhs = ft + fs;
            report.checked += 1;
            if t * s > rhs * (1.0 + YOUNG_SLACK) {
                report.violations += 1;
            }
            if rhs > 0.0 {
                report.max_ratio = report.max_ratio.max(t * s / rhs);
            }
        }
    }
    Ok(report)
}

/// The two κ-refined Young inequalities for `φ` with (aInc)_p and (aDec)_q:
///
/// `ts ≤ φ(κ^{1/p} t) + φ*(κ^{-1/p} s) ≲ κφ(t) + κ^{-1/(p-1)} φ*(s)` and
/// `ts ≤ φ(κ^{-1/q'} t) + φ*(κ^{1/q'} s) ≲ κ^{-(q-1)} φ(t) + κφ*(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaYoungReport {
    pub checked: usize,
    /// Violations of the left (exact) inequalities.
    pub violations: usize,
    /// Realized constants of the two `≲` inequalities.
    pub first_constant: f64,
    pub second_constant: f64,
}

pub fn young_kappa(phi: &dyn PhiFn, x: &[f64], p: f64, q: f64, triples: &[(f64, f64, f64)]) -> Result<KappaYoungReport> {
    let frozen = Frozen { base: phi, at: x.to_vec() };
    let star = Conjugate::new(&frozen);
    let f = |t: f64| phi.eval(x, t);
    let g = |s: f64| star.eval(x, s);
    let q_dual = q / (q - 1.0);
    let mut report = KappaYoungReport {
        checked: 0,
        violations: 0,
        first_constant: 0.0,
        second_constant: 0.0,
    };
    for &(t, s, kappa) in triples {
        let (ft, gs) = (f(t)?, g(s)?);
        let mid1 = f(kappa.powf(1.0 / p) * t)? + g(kappa.powf(-1.0 / p) * s)?;
        let mid2 = f(kappa.powf(-1.0 / q_dual) * t)? + g(kappa.powf(1.0 / q_dual) * s)?;
        let rhs1 = kappa * ft + kappa.powf(-1.0 / (p - 1.0)) * gs;
        let rhs2 = kappa.powf(-(q - 1.0)) * ft + kappa * gs;
        report.checked += 1;
        for mid in [mid1, mid2] {
            if t * s > mid * (1.0 + YOUNG_SLACK) {
                report.violations += 1;
            }
        }
        if rhs1 > 0.0 {
            report.first_constant = report.first_constant.max(mid1 / rhs1);
        }
        if rhs2 > 0.0 {
            report.second_constant = report.second_constant.max(mid2 / rhs2);
        }
    }
    Ok(report)
}

/// Realized constants of `tφ'/(2^q L) ≤ φ ≤ tφ'` and `φ*(φ'(t)) ≤ tφ'(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBounds {
    pub checked: usize,
    /// Largest `φ / (tφ')`; the upper bound holds when this is ≤ 1.
    pub upper_ratio: f64,
    /// Largest `tφ' / φ`; the lower bound holds when this is ≤ `2^q L`.
    pub lower_ratio: f64,
    /// Largest `φ*(φ'(t)) / (tφ'(t))`.
    pub conjugate_ratio: f64,
}

pub fn derivative_bounds(phi: &dyn PhiFn, xs: &[Vec<f64>], ts: &[f64]) -> Result<DerivativeBounds> {
    let mut out = DerivativeBounds {
        checked: 0,
        upper_ratio: 0.0,
        lower_ratio: 0.0,
        conjugate_ratio: 0.0,
    };
    for x in xs {
        let frozen = Frozen { base: phi, at: x.clone() };
        let star = Conjugate::new(&frozen);
        for &t in ts {
            let f = phi.eval(x, t)?;
            let tf = t * phi.deriv(x, t)?;
            if f <= 0.0 || tf <= 0.0 {
                continue;
            }
            out.checked += 1;
            out.upper_ratio = out.upper_ratio.max(f / tf);
            out.lower_ratio = out.lower_ratio.max(tf / f);
            let c = star.eval(x, phi.deriv(x, t)?)?;
            out.conjugate_ratio = out.conjugate_ratio.max(c / tf);
        }
    }
    Ok(out)
}

/// (Inc)_γ read off the derivative: `γφ(x,t) ≤ tφ'(x,t)` on all samples.
pub fn inc_by_derivative(phi: &dyn PhiFn, xs: &[Vec<f64>], ts: &[f64], gamma: f64) -> Result<bool> {
    for x in xs {
        for &t in ts {
            if gamma * phi.eval(x, t)? > t * phi.deriv(x, t)? * (1.0 + 1e-9) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// (Dec)_γ read off the derivative: `tφ'(x,t) ≤ γφ(x,t)`.
pub fn dec_by_derivative(phi: &dyn PhiFn, xs: &[Vec<f64>], ts: &[f64], gamma: f64) -> Result<bool> {
    for x in xs {
        for &t in ts {
            if t * phi.deriv(x, t)? > gamma * phi.eval(x, t)? * (1.0 + 1e-9) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The three vector quantities compared for an autonomous `φ` at
/// `x, y ∈ Rⁿ`:
///
/// 1. `A = φ'(|x|+|y|)/(|x|+|y|) |x−y|²` against
///    `B = (φ'(|x|)/|x| x − φ'(|y|)/|y| y)·(x−y)`;
/// 2. `A` against `φ(|x|) − φ(|y|) − φ'(|y|)/|y| y·(x−y)`;
/// 3. `φ(|x−y|)` against `κ[φ(|x|)+φ(|y|)] + κ^{-1} A`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorRatios {
    pub checked: usize,
    /// Range of `A / B` over the samples.
    pub monotone_min: f64,
    pub monotone_max: f64,
    /// Largest `A / (Bregman difference)`.
    pub bregman_max: f64,
    /// Largest ratio in the third inequality.
    pub split_max: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub fn vector_ratios(phi: &dyn PhiFn, pairs: &[(Vec<f64>, Vec<f64>)], kappa: f64) -> Result<VectorRatios> {
    let at = vec![0.0; phi.dim()];
    let ratio = |t: f64| phi.deriv_ratio(&at, t);
    let mut out = VectorRatios {
        monotone_min: f64::INFINITY,
        ..Default::default()
    };
    for (x, y) in pairs {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let d2 = dot(&diff, &diff);
        let (nx, ny) = (norm(x), norm(y));
        if d2 == 0.0 || nx + ny == 0.0 {
            continue;
        }
        let a = ratio(nx + ny)? * d2;
        let (rx, ry) = (ratio(nx)?, ratio(ny)?);
        let field: Vec<f64> = x.iter().zip(y).map(|(u, v)| rx * u - ry * v).collect();
        let b = dot(&field, &diff);
        let bregman = phi.eval(&at, nx)? - phi.eval(&at, ny)? - ry * dot(y, &diff);
        let split_rhs = kappa * (phi.eval(&at, nx)? + phi.eval(&at, ny)?) + a / kappa;
        out.checked += 1;
        out.monotone_min = out.monotone_min.min(a / b);
        out.monotone_max = out.monotone_max.max(a / b);
        out.bregman_max = out.bregman_max.max(a / bregman);
        out.split_max = out.split_max.max(phi.eval(&at, norm(&diff))? / split_rhs);
    }
    Ok(out)
}

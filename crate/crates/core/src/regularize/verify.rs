//! Sampled verification of the approximation properties of `φ̃`.

use super::RegularizedPhi;
use crate::conditions::{check_rate_condition, CheckOptions, RateKind, Verdict};
use crate::error::{Error, Result};
use crate::numeric::logspace;
use crate::phi::{Derivative, PhiFn, PhiSpec};

/// Realized constants of the approximation checks. Hard checks that fail
/// make [`verify_approx`] return an error instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub samples: usize,
    pub continuity_residual: f64,
    /// `min φ̃/φ_B` (at least 1) and `max φ̃/((1+r)^q φ_B)` (at most 1).
    pub sandwich: (f64, f64),
    /// The same two ratios for `φ̃'` against `ψ_B`.
    pub derivative_sandwich: (f64, f64),
    /// `min (φ̃ − φ(x₀,·))/φ(x₀,·)` on `[t₁, t₂]`; nonnegative.
    pub closeness_floor: f64,
    /// Realized `C` in `φ̃ − φ(x₀,·) ≤ C(rφ⁻ + ω(2r))` on `[t₁, t₂]`.
    pub closeness_constant: f64,
    /// `max (φ_B − φ(x₀,·)) / ((q/p − 1)φ(x₀,t₁))` on `[t₁, t₂]`.
    pub offset_ratio: f64,
    /// `φ̃'(1)`, the (A0) value of the derivative.
    pub derivative_at_one: f64,
    /// Realized (Inc)_{p−1} and (Dec)_{q−1} constants of `φ̃'`.
    pub inc_constant: f64,
    pub dec_constant: f64,
    /// Range of `tφ̃''/φ̃'`, inside `[p−1, q−1]`.
    pub second_ratio: (f64, f64),
    /// `max φ̃(t)/(φ(x,t) + 1)` over `x ∈ B_{2r}`.
    pub growth_constant: f64,
}

const SLACK: f64 = 1e-9;

fn reject(check: &str, t: f64, value: f64) -> Error {
    Error::Construction(format!("{check} fails at t = {t:e} (value {value:e})"))
}

/// Runs the checks on `t_samples` log-spaced points over the table range
/// and `x_samples` points of `B_{2r}`.
pub fn verify_approx(reg: &RegularizedPhi, phi: &PhiSpec, t_samples: usize, x_samples: usize) -> Result<ApproxReport> {
    let psi = reg.psi_b();
    let (t1, t2) = psi.thresholds();
    let (p, q) = psi.exponents();
    let r = reg.radius();
    let x0 = psi.center().to_vec();
    let table = reg.table();
    let ts = logspace(table[0].t, table[table.len() - 1].t, t_samples.max(2));
    let grow = (1.0 + r).powf(q);

    let continuity_residual = psi.continuity_residual()?;
    if continuity_residual > 1e-12 {
        return Err(reject("continuity of psi_B", t1, continuity_residual));
    }

    let mut sandwich = (f64::INFINITY, 0.0f64);
    let mut derivative_sandwich = (f64::INFINITY, 0.0f64);
    let mut second_ratio = (f64::INFINITY, f64::NEG_INFINITY);
    for &t in &ts {
        let (v, d) = (reg.eval(&x0, t)?, reg.deriv(&x0, t)?);
        let (b, s) = (psi.phi_b(t)?, psi.psi(t)?);
        let (lo, hi) = (v / b, v / (grow * b));
        if lo < 1.0 - SLACK || hi > 1.0 + SLACK {
            return Err(reject("sandwich phi_B <= phi~ <= (1+r)^q phi_B", t, v / b));
        }
        sandwich = (sandwich.0.min(lo), sandwich.1.max(hi));
        let (lo, hi) = (d / s, d / (grow * s));
        if lo < 1.0 - SLACK || hi > 1.0 + SLACK {
            return Err(reject("derivative sandwich", t, d / s));
        }
        derivative_sandwich = (derivative_sandwich.0.min(lo), derivative_sandwich.1.max(hi));
        let ratio = t * reg.second_derivative(t)? / d;
        if ratio < (p - 1.0) * (1.0 - 1e-6) || ratio > (q - 1.0) * (1.0 + 1e-6) {
            return Err(reject("t phi~'' / phi~' within [p-1, q-1]", t, ratio));
        }
        second_ratio = (second_ratio.0.min(ratio), second_ratio.1.max(ratio));
    }

    // closeness on the middle range, through the infimum over B_{2r}
    let big = reg.ball().with_radius(2.0 * r)?;
    let env = phi.envelope(&big, &Default::default())?;
    let omega = reg.thresholds().omega_2r;
    let offset = (q / p - 1.0) * psi.phi_center(t1)?;
    let mut closeness_floor = f64::INFINITY;
    let mut closeness_constant = 0.0f64;
    let mut offset_ratio = 0.0f64;
    let lo = if t1 > 0.0 { t1 } else { ts[0] };
    for t in logspace(lo, t2, t_samples.max(2)) {
        let at = psi.phi_center(t)?;
        let gap = reg.eval(&x0, t)? - at;
        if gap < -SLACK * at {
            return Err(reject("closeness lower bound", t, gap));
        }
        closeness_floor = closeness_floor.min(gap / at);
        closeness_constant = closeness_constant.max(gap / (r * env.inf(t)?.value + omega));
        if offset > 0.0 {
            offset_ratio = offset_ratio.max((psi.phi_b(t)? - at) / offset);
        }
    }

    let opts = CheckOptions::default();
    let dphi = Derivative(reg);
    let xs = [x0.clone()];
    let inc = check_rate_condition(&dphi, RateKind::Inc, p - 1.0, &xs, &ts, &opts)?;
    if inc.verdict != Verdict::Holds {
        return Err(Error::Construction(format!("phi~' fails (Inc)_p-1: {}", inc.summary())));
    }
    let dec = check_rate_condition(&dphi, RateKind::Dec, q - 1.0, &xs, &ts, &opts)?;
    if dec.verdict != Verdict::Holds {
        return Err(Error::Construction(format!("phi~' fails (Dec)_q-1: {}", dec.summary())));
    }

    let mut growth_constant = 0.0f64;
    let xs = big.sample(x_samples, 0);
    for &t in &ts {
        let v = reg.eval(&x0, t)?;
        for x in &xs {
            growth_constant = growth_constant.max(v / (phi.eval(x, t)? + 1.0));
        }
    }

    Ok(ApproxReport {
        samples: ts.len(),
        continuity_residual,
        sandwich,
        derivative_sandwich,
        closeness_floor,
        closeness_constant,
        offset_ratio,
        derivative_at_one: reg.deriv(&x0, 1.0)?,
        inc_constant: inc.constant.unwrap_or(f64::NAN),
        dec_constant: dec.constant.unwrap_or(f64::NAN),
        second_ratio,
        growth_constant,
    })
}

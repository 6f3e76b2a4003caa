//! Sampled growth exponents: the largest `p` with (aInc)_p and the smallest
//! `q` with (aDec)_q, plus the (A0) bracket of `φ(x, 1)`.

use super::PhiFn;
use crate::error::{Error, Result};
use crate::numeric::logspace;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthOptions {
    /// Log-spaced `t` samples over the range.
    pub t_points: usize,
    /// Grid spacing of candidate exponents.
    pub step: f64,
    /// Largest admissible almost-monotonicity constant.
    pub l_cap: f64,
    /// Candidate exponents run over `(gamma_min, gamma_max]`.
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions {
            t_points: 97,
            step: 0.01,
            l_cap: 1.0 + 1e-9,
            gamma_min: 1.0,
            gamma_max: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEnvelope {
    pub p_hat: f64,
    pub q_hat: f64,
    /// Realized constant: the larger of the (aInc)_{p̂} and (aDec)_{q̂} ratios.
    pub l_hat: f64,
    pub a0_lo: f64,
    pub a0_hi: f64,
}

/// `ln φ(x, t_k) − γ ln t_k` tables, one row per sample point.
struct LogTable {
    log_t: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl LogTable {
    /// `sup_{t<s} (φ(t)/t^γ)/(φ(s)/s^γ)` when `increasing`, else the reverse ratio.
    fn ratio(&self, gamma: f64, increasing: bool) -> f64 {
        let mut worst = 1.0f64;
        for row in &self.rows {
            let mut extreme = f64::NAN;
            for (lp, lt) in row.iter().zip(&self.log_t) {
                if *lp == f64::NEG_INFINITY {
                    // φ(t) = 0: harmless before positive values only
                    if increasing && extreme.is_finite() {
                        return f64::INFINITY;
                    }
                    continue;
                }
                let v = lp - gamma * lt;
                if extreme.is_nan() {
                    extreme = v;
                    continue;
                }
                let r = if increasing { extreme - v } else { v - extreme };
                worst = worst.max(r.exp());
                extreme = if increasing { extreme.max(v) } else { extreme.min(v) };
            }
            if !increasing && row[0] == f64::NEG_INFINITY && row.iter().any(|v| v.is_finite()) {
                return f64::INFINITY;
            }
        }
        worst
    }
}

/// Estimates `(p̂, q̂, L̂)` and the (A0) bracket over sample points `xs` and
/// `t ∈ [t_lo, t_hi]`.
pub fn growth_constants(phi: &dyn PhiFn, xs: &[Vec<f64>], t_range: (f64, f64), opts: &GrowthOptions) -> Result<GrowthEnvelope> {
    let (t_lo, t_hi) = t_range;
    if !(t_lo > 0.0 && t_lo < t_hi && t_hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad t range [{t_lo}, {t_hi}]")));
    }
    if xs.is_empty() || opts.t_points < 2 {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    let ts = logspace(t_lo, t_hi, opts.t_points);
    let mut rows = Vec::with_capacity(xs.len());
    let (mut a0_lo, mut a0_hi) = (f64::INFINITY, 0.0f64);
    for x in xs {
        let row = ts.iter().map(|&t| phi.eval(x, t).map(f64::ln)).collect::<Result<Vec<_>>>()?;
        rows.push(row);
        let one = phi.eval(x, 1.0)?;
        a0_lo = a0_lo.min(one);
        a0_hi = a0_hi.max(one);
    }
    let table = LogTable {
        log_t: ts.iter().map(|t| t.ln()).collect(),
        rows,
    };

    let per_unit = (1.0 / opts.step).round();
    let k_min = (opts.gamma_min * per_unit).floor() as i64 + 1;
    let k_max = (opts.gamma_max * per_unit).floor() as i64;
    let gamma = |k: i64| k as f64 / per_unit;
    let inc_ok = |k: i64| table.ratio(gamma(k), true) <= opts.l_cap;
    let dec_ok = |k: i64| table.ratio(gamma(k), false) <= opts.l_cap;

    // the (aInc) ratio grows with γ and the (aDec) ratio shrinks, so both
    // thresholds are found by bisection on the exponent grid
    if !inc_ok(k_min) {
        return Err(Error::Precondition(format!(
            "no exponent above {} satisfies (aInc) with L ≤ {}",
            opts.gamma_min, opts.l_cap
        )));
    }
    let (mut lo, mut hi) = (k_min, k_max + 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if inc_ok(mid) {
            lo = mid
        } else {
            hi = mid
        }
    }
    let p_k = lo;
    if !dec_ok(k_max) {
        return Err(Error::Precondition(format!(
            "no exponent up to {} satisfies (aDec) with L ≤ {}",
            opts.gamma_max, opts.l_cap
        )));
    }
    let (mut lo, mut hi) = (k_min - 1, k_max);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if dec_ok(mid) {
            hi = mid
        } else {
            lo = mid
        }
    }
    let q_k = hi.max(p_k);
    let l_hat = table.ratio(gamma(p_k), true).max(table.ratio(gamma(q_k), false));
    Ok(GrowthEnvelope {
        p_hat: gamma(p_k),
        q_hat: gamma(q_k),
        l_hat,
        a0_lo,
        a0_hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{Conjugate, Derivative, LocalPhi, PhiSpec, Profile};

    fn origin() -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }

    #[test]
    fn power_law_exponents() {
        let phi = LocalPhi::new(&[(1.0, Profile::Power { p: 2.5 })]);
        let g = growth_constants(&phi, &origin(), (1e-3, 1e3), &GrowthOptions::default()).unwrap();
        assert_eq!((g.p_hat, g.q_hat), (2.5, 2.5));
        assert!(g.l_hat < 1.0 + 1e-12);
        assert_eq!((g.a0_lo, g.a0_hi), (1.0, 1.0));
    }

    #[test]
    fn double_phase_exponents() {
        let phi = PhiSpec::double_phase(2.0, 3.0, "abs(x1)", 2).unwrap();
        let xs: Vec<Vec<f64>> = (0..=10).map(|k| vec![k as f64 / 10.0, 0.0]).collect();
        let g = growth_constants(&phi, &xs, (1e-3, 1e3), &GrowthOptions::default()).unwrap();
        assert_eq!((g.p_hat, g.q_hat), (2.0, 3.0));
        assert_eq!((g.a0_lo, g.a0_hi), (1.0, 2.0));
    }

    #[test]
    fn min_integrand_envelopes() {
        let phi = LocalPhi::new(&[(1.0, Profile::MinPower { p: 2.0, q: 3.0 })]);
        let opts = GrowthOptions {
            gamma_min: 0.5,
            ..Default::default()
        };
        let d = growth_constants(&Derivative(phi), &origin(), (1e-3, 1e3), &opts).unwrap();
        assert_eq!((d.p_hat, d.q_hat), (1.0, 2.0));
        let g = growth_constants(&phi, &origin(), (1e-3, 1e3), &GrowthOptions::default()).unwrap();
        assert_eq!((g.p_hat, g.q_hat), (2.0, 3.0));
    }

    #[test]
    fn conjugate_swaps_exponents() {
        let phi = LocalPhi::new(&[(1.0, Profile::Power { p: 3.0 })]);
        let g = growth_constants(&Conjugate::new(phi), &origin(), (1e-3, 1e3), &GrowthOptions::default()).unwrap();
        assert_eq!((g.p_hat, g.q_hat), (1.5, 1.5));
    }

    #[test]
    fn linear_growth_is_rejected() {
        let phi = LocalPhi::new(&[(1.0, Profile::Power { p: 1.0 })]);
        assert!(matches!(
            growth_constants(&phi, &origin(), (1e-2, 1e2), &GrowthOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}

//! Sampled verification of the structural conditions: (A0), (aInc)/(aDec),
//! (Inc)/(Dec), (A1), (VA1) and (wVA1), plus the closed-form moduli of the
//! standard families.
//!
//! Every check is a ∀-statement tested on finite samples. A failure comes
//! with a witness that reproduces it; sampling that never stabilizes gives
//! an inconclusive verdict rather than a guess.

mod modulus;
mod scan;

use std::fmt;

pub use modulus::{classify_regularity, closed_form_modulus, ModulusOfContinuity, ModulusRepr, Regularity, RegularityClass};
pub use scan::{check_a1, check_matrix, check_wva1, estimate_va1_modulus, ConditionMatrix};

use crate::error::{Error, Result};
use crate::numeric::LineFit;
use crate::phi::{PhiFn, SamplingOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    A0,
    AInc(f64),
    ADec(f64),
    Inc(f64),
    Dec(f64),
    A1,
    VA1,
    WVA1(f64),
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::A0 => write!(f, "A0"),
            Condition::AInc(g) => write!(f, "aInc({g})"),
            Condition::ADec(g) => write!(f, "aDec({g})"),
            Condition::Inc(g) => write!(f, "Inc({g})"),
            Condition::Dec(g) => write!(f, "Dec({g})"),
            Condition::A1 => write!(f, "A1"),
            Condition::VA1 => write!(f, "VA1"),
            Condition::WVA1(e) => write!(f, "wVA1({e})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Which almost-monotonicity of `φ(x,t)/t^γ` to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    AInc,
    ADec,
    Inc,
    Dec,
}

impl RateKind {
    fn increasing(self) -> bool {
        matches!(self, RateKind::AInc | RateKind::Inc)
    }

    fn strict(self) -> bool {
        matches!(self, RateKind::Inc | RateKind::Dec)
    }

    fn condition(self, gamma: f64) -> Condition {
        match self {
            RateKind::AInc => Condition::AInc(gamma),
            RateKind::ADec => Condition::ADec(gamma),
            RateKind::Inc => Condition::Inc(gamma),
            RateKind::Dec => Condition::Dec(gamma),
        }
    }
}

/// Sampling parameters shared by all checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Balls per radius.
    pub balls: usize,
    /// Minimum log-spaced `t` points per ball scan.
    pub t_points: usize,
    /// Additional points per decade of `t` for long ranges.
    pub per_decade: usize,
    /// Lower end of the `φ⁻` range scanned for the vanishing conditions.
    pub omega_floor: f64,
    /// Largest admissible constant for the almost-monotone and (A0)/(A1) checks.
    pub l_cap: f64,
    /// Multiplicative slack on ratio comparisons.
    pub slack: f64,
    /// Bisection steps of the modulus fixed point.
    pub bisections: usize,
    /// Relative monotonicity slack of the modulus tables across radii.
    pub table_slack: f64,
    pub sampling: SamplingOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            balls: 64,
            t_points: 48,
            per_decade: 4,
            omega_floor: 1e-12,
            l_cap: 10.0,
            slack: 1e-9,
            bisections: 40,
            table_slack: 0.05,
            sampling: SamplingOptions::default(),
        }
    }
}

/// What a check looked at.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Budget {
    pub x_points: usize,
    pub t_points: usize,
    pub balls: usize,
    pub radii: Vec<f64>,
}

/// A configuration exhibiting an extremal or violating ratio.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `(φ(x,t)/t^γ) / (φ(x,s)/s^γ)` for `t < s` (reversed for the decreasing kinds).
    Rate {
        x: Vec<f64>,
        t: f64,
        s: f64,
        gamma: f64,
        increasing: bool,
        ratio: f64,
    },
    /// `φ(x, 1)`.
    Point { x: Vec<f64>, value: f64 },
    /// Two points `x, y` of a ball with `φ(x,t)` the sup and `φ(y,t)` the inf.
    /// `bound` is `L` for [`BallForm::Ratio`] and the modulus level `ω`
    /// otherwise.
    Ball {
        center: Vec<f64>,
        r: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        t: f64,
        ratio: f64,
        bound: f64,
        form: BallForm,
    },
}

/// How a ball witness compares `φ(x,t)` with `φ(y,t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallForm {
    /// `φ(x,t)/φ(y,t) > L`.
    Ratio,
    /// `φ(x,t)/φ(y,t) > 1 + ω` with `φ(y,t) ≥ ω`.
    Multiplicative,
    /// `(φ(x,t) − φ(y,t))/(φ(y,t) + 1) > ω` with `φ(y,t) ≥ ω`.
    Additive,
}

impl Witness {
    /// Re-evaluates the stored ratio from `phi`.
    pub fn reproduce(&self, phi: &dyn PhiFn) -> Result<f64> {
        match self {
            Witness::Rate {
                x,
                t,
                s,
                gamma,
                increasing,
                ..
            } => {
                let a = phi.eval(x, *t)? / t.powf(*gamma);
                let b = phi.eval(x, *s)? / s.powf(*gamma);
                Ok(if *increasing { a / b } else { b / a })
            }
            Witness::Point { x, .. } => phi.eval(x, 1.0),
            Witness::Ball { x, y, t, form, .. } => {
                let (sup, inf) = (phi.eval(x, *t)?, phi.eval(y, *t)?);
                Ok(match form {
                    BallForm::Additive => (sup - inf) / (inf + 1.0),
                    _ => sup / inf,
                })
            }
        }
    }

    /// The stored ratio.
    pub fn ratio(&self) -> f64 {
        match self {
            Witness::Rate { ratio, .. } | Witness::Ball { ratio, .. } => *ratio,
            Witness::Point { value, .. } => *value,
        }
    }

    /// Whether re-evaluation still exceeds the stored bound (ball witnesses)
    /// or the stored constant is reproduced (other witnesses).
    pub fn violates(&self, phi: &dyn PhiFn) -> Result<bool> {
        let v = self.reproduce(phi)?;
        Ok(match self {
            Witness::Ball { y, t, bound, form, .. } => match form {
                BallForm::Ratio => v > *bound,
                BallForm::Multiplicative => v > 1.0 + bound && phi.eval(y, *t)? >= *bound,
                BallForm::Additive => v > *bound && phi.eval(y, *t)? >= *bound,
            },
            w => (v - w.ratio()).abs() <= 1e-12 * w.ratio().abs().max(1.0),
        })
    }

    /// Flat CSV fields: `t, ratio, bound, x..., y...`.
    pub fn csv_fields(&self) -> (f64, f64, f64, Vec<f64>, Vec<f64>) {
        match self {
            Witness::Rate { x, t, s, ratio, gamma, .. } => (*t, *ratio, *gamma, x.clone(), vec![*s]),
            Witness::Point { x, value } => (1.0, *value, 0.0, x.clone(), vec![]),
            Witness::Ball {
                x, y, t, ratio, bound, ..
            } => (*t, *ratio, *bound, x.clone(), y.clone()),
        }
    }
}

/// One radius of a ball-based check.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusRow {
    pub r: f64,
    /// `L̂(r)` for (A1), `ω̂(r)` for the vanishing conditions; NaN when the
    /// sampling failed to stabilize.
    pub value: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    /// Realized constant `L̂`.
    pub constant: Option<f64>,
    /// Per-radius results in the order of the radius grid.
    pub rows: Vec<RadiusRow>,
    /// `(r, ω̂(r))` sorted by increasing `r`, nondecreasing in `r`.
    pub modulus_table: Vec<(f64, f64)>,
    /// Log-log fit of the modulus table, when it decays.
    pub holder_rate: Option<LineFit>,
    pub witness: Option<Witness>,
    pub budget: Budget,
    pub note: Option<String>,
}

impl ConditionReport {
    fn simple(condition: Condition, verdict: Verdict, constant: f64, witness: Option<Witness>, budget: Budget) -> Self {
        ConditionReport {
            condition,
            verdict,
            constant: Some(constant),
            rows: vec![],
            modulus_table: vec![],
            holder_rate: None,
            witness,
            budget,
            note: None,
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let mut s = format!("{} {}", self.condition, self.verdict);
        if let Some(l) = self.constant {
            s += &format!(", L = {l:.6}");
        }
        if matches!(self.condition, Condition::VA1 | Condition::WVA1(_)) {
            if !self.modulus_table.is_empty() && self.modulus_table.iter().all(|(_, w)| *w == 0.0) {
                s += ", omega ≡ 0";
            } else if let Some(fit) = self.holder_rate {
                s += &format!(", omega ~ r^{:.3}", fit.slope);
            }
        }
        if let Some(n) = &self.note {
            s += &format!(" ({n})");
        }
        s
    }
}

/// Tests (aInc)_γ, (aDec)_γ, (Inc)_γ or (Dec)_γ of `phi` over sample points
/// `xs` and increasing `ts`. `L̂` is the largest ratio over pairs `t < s`.
pub fn check_rate_condition(
    phi: &dyn PhiFn,
    kind: RateKind,
    gamma: f64,
    xs: &[Vec<f64>],
    ts: &[f64],
    opts: &CheckOptions,
) -> Result<ConditionReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if xs.is_empty() || ts.len() < 2 {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    if ts.windows(2).any(|w| !(w[0] < w[1])) || ts[0] <= 0.0 {
        return Err(Error::InvalidArgument("t samples must be positive and increasing".into()));
    }
    let inc = kind.increasing();
    let mut worst = (1.0f64, None);
    for x in xs {
        // index of the running extreme of φ(t)/t^γ
        let mut ext: Option<(usize, f64)> = None;
        for (k, &t) in ts.iter().enumerate() {
            let v = phi.eval(x, t)? / t.powf(gamma);
            if let Some((j, e)) = ext {
                let r = if inc { e / v } else { v / e };
                if r > worst.0 || (r.is_nan() && worst.0.is_finite()) {
                    let r = if r.is_nan() { f64::INFINITY } else { r };
                    worst = (
                        r,
                        Some(Witness::Rate {
                            x: x.clone(),
                            t: ts[j],
                            s: t,
                            gamma,
                            increasing: inc,
                            ratio: r,
                        }),
                    );
                }
                if (inc && v > e) || (!inc && v < e) {
                    ext = Some((k, v));
                }
            } else {
                ext = Some((k, v));
            }
        }
    }
    let cap = if kind.strict() { 1.0 + opts.slack } else { opts.l_cap * (1.0 + opts.slack) };
    let verdict = if worst.0 <= cap { Verdict::Holds } else { Verdict::Fails };
    Ok(ConditionReport::simple(
        kind.condition(gamma),
        verdict,
        worst.0,
        worst.1,
        Budget {
            x_points: xs.len(),
            t_points: ts.len(),
            ..Default::default()
        },
    ))
}

/// (A0): `1/L ≤ φ(x, 1) ≤ L` on the samples, with `L̂` the realized constant.
pub fn check_a0(phi: &dyn PhiFn, xs: &[Vec<f64>], opts: &CheckOptions) -> Result<ConditionReport> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    let mut worst = (0.0f64, None);
    for x in xs {
        let v = phi.eval(x, 1.0)?;
        let l = if v > 0.0 { v.max(1.0 / v) } else { f64::INFINITY };
        if worst.1.is_none() || l > worst.0 {
            worst = (l, Some(Witness::Point { x: x.clone(), value: v }));
        }
    }
    let verdict = if worst.0 <= opts.l_cap * (1.0 + opts.slack) { Verdict::Holds } else { Verdict::Fails };
    Ok(ConditionReport::simple(
        Condition::A0,
        verdict,
        worst.0,
        worst.1,
        Budget {
            x_points: xs.len(),
            t_points: 1,
            ..Default::default()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::logspace;
    use crate::phi::{Derivative, LocalPhi, Profile};

    fn origin() -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }

    #[test]
    fn quadratic_is_inc_two() {
        let phi = LocalPhi::new(&[(1.0, Profile::Power { p: 2.0 })]);
        let r = check_rate_condition(&phi, RateKind::Inc, 2.0, &origin(), &logspace(1e-2, 1e2, 41), &Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!((r.constant.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_fails_ainc_above_two() {
        let phi = LocalPhi::new(&[(1.0, Profile::Power { p: 2.0 })]);
        let r = check_rate_condition(&phi, RateKind::AInc, 2.5, &origin(), &logspace(1e-2, 1e2, 41), &Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!((r.constant.unwrap() - 100.0).abs() < 1e-9);
        let w = r.witness.unwrap();
        assert!(matches!(w, Witness::Rate { t, s, .. } if (t / 1e-2 - 1.0).abs() < 1e-12 && (s / 1e2 - 1.0).abs() < 1e-12));
        assert!((w.reproduce(&phi).unwrap() - 100.0).abs() < 1e-9);
        assert!(w.violates(&phi).unwrap());
    }

    #[test]
    fn min_integrand_derivative_rates() {
        let phi = LocalPhi::new(&[(1.0, Profile::MinPower { p: 2.0, q: 3.0 })]);
        let ts = logspace(1e-3, 1e3, 61);
        let opts = CheckOptions::default();
        let d = Derivative(phi);
        assert_eq!(check_rate_condition(&d, RateKind::Inc, 1.0, &origin(), &ts, &opts).unwrap().verdict, Verdict::Holds);
        assert_eq!(check_rate_condition(&d, RateKind::Dec, 2.0, &origin(), &ts, &opts).unwrap().verdict, Verdict::Holds);
        assert_eq!(check_rate_condition(&d, RateKind::Inc, 1.1, &origin(), &ts, &opts).unwrap().verdict, Verdict::Fails);
        assert_eq!(check_rate_condition(&phi, RateKind::Inc, 2.0, &origin(), &ts, &opts).unwrap().verdict, Verdict::Holds);
        assert_eq!(check_rate_condition(&phi, RateKind::Dec, 3.0, &origin(), &ts, &opts).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn a0_brackets_value_at_one() {
        let phi = LocalPhi::new(&[(4.0, Profile::Power { p: 2.0 })]);
        let r = check_a0(&phi, &origin(), &Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.constant, Some(4.0));
        let tiny = LocalPhi::new(&[(0.01, Profile::Power { p: 2.0 })]);
        assert_eq!(check_a0(&tiny, &origin(), &Default::default()).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn rejects_bad_samples() {
        let phi = LocalPhi::new(&[(1.0, Profile::Power { p: 2.0 })]);
        let opts = CheckOptions::default();
        assert!(check_rate_condition(&phi, RateKind::Inc, 2.0, &[], &[1.0, 2.0], &opts).is_err());
        assert!(check_rate_condition(&phi, RateKind::Inc, 2.0, &origin(), &[2.0, 1.0], &opts).is_err());
        assert!(check_rate_condition(&phi, RateKind::Inc, 0.0, &origin(), &[1.0, 2.0], &opts).is_err());
    }
}

//! Moduli of continuity: closed forms for the standard families, tables from
//! the numerical estimates, and the regularity class they predict.

use std::fmt;

use super::{Condition, ConditionReport, Verdict};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::numeric::{fit_loglog, monotone_inverse, InverseOptions};
use crate::phi::{Family, Holder, PhiSpec, Profile};

#[derive(Debug, Clone, PartialEq)]
pub enum ModulusRepr {
    /// `ω ≡ 0`.
    Zero,
    /// `c r^β`; bounded but not vanishing when `β = 0`, unbounded when `β < 0`.
    Power { c: f64, beta: f64 },
    /// `n e^{n ω_p(2r) ln(1/r)} ω_p(2r) ln(1/r)` for an exponent modulus `ω_p`.
    LogHolder { n: usize, omega: Holder },
    /// `ω_a(r) + ω_b(r) r^{n(1−ε)} ξ(ψ⁻¹(r^{−n(1−ε)}))`; absent moduli are zero.
    GeneralDoublePhase {
        a: Option<Holder>,
        b: Option<Holder>,
        psi: Profile,
        xi: Profile,
        n: usize,
        eps: f64,
    },
    Sum(Vec<ModulusRepr>),
    /// `(r, ω)` nodes, nondecreasing in `r`, interpolated linearly.
    Table(Vec<(f64, f64)>),
}

impl ModulusRepr {
    fn raw(&self, r: f64) -> f64 {
        match self {
            ModulusRepr::Zero => 0.0,
            ModulusRepr::Power { c, beta } => c * r.powf(*beta),
            ModulusRepr::LogHolder { n, omega } => {
                if r >= 1.0 {
                    return f64::INFINITY;
                }
                let w = omega.eval(2.0 * r) * (1.0 / r).ln();
                *n as f64 * (*n as f64 * w).exp() * w
            }
            ModulusRepr::GeneralDoublePhase { a, b, psi, xi, n, eps } => {
                let wa = a.map_or(0.0, |h| h.eval(r));
                let wb = match b {
                    Some(h) => {
                        let k = *n as f64 * (1.0 - eps);
                        let level = r.powf(-k);
                        h.eval(r) * r.powf(k) * xi.eval(profile_inverse(psi, level))
                    }
                    None => 0.0,
                };
                wa + wb
            }
            ModulusRepr::Sum(parts) => parts.iter().map(|p| p.raw(r)).sum(),
            ModulusRepr::Table(nodes) => table_eval(nodes, r),
        }
    }

    /// Exponent `γ` with `ω(r) ≤ c r^γ'` for every `γ' < γ` as `r → 0`;
    /// infinite for `ω ≡ 0`, `None` when `ω` does not decay like a power.
    fn rate(&self) -> Option<f64> {
        match self {
            ModulusRepr::Zero => Some(f64::INFINITY),
            ModulusRepr::Power { beta, .. } => (*beta > 0.0).then_some(*beta),
            ModulusRepr::LogHolder { omega, .. } => Some(omega.beta),
            ModulusRepr::GeneralDoublePhase { a, b, psi, xi, n, eps } => {
                let ra = a.map_or(f64::INFINITY, |h| h.beta);
                // ξ(ψ⁻¹(s)) ≲ s^{q_ξ/p_ψ} for large s
                let rb = b.map_or(f64::INFINITY, |h| {
                    h.beta - *n as f64 * (1.0 - eps) * (xi.exponents().1 / psi.exponents().0 - 1.0)
                });
                let g = ra.min(rb);
                (g > 0.0).then_some(g)
            }
            ModulusRepr::Sum(parts) => parts.iter().map(|p| p.rate()).try_fold(f64::INFINITY, |acc, r| r.map(|r| acc.min(r))),
            ModulusRepr::Table(nodes) => {
                let pts: Vec<(f64, f64)> = nodes.iter().copied().filter(|(_, w)| *w > 0.0).collect();
                if pts.len() < 3 {
                    return None;
                }
                let (rs, ws): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                fit_loglog(&rs, &ws).ok().map(|f| f.slope).filter(|s| *s > 0.0)
            }
        }
    }

    /// Whether `ω` stays bounded as `r → 0` without vanishing.
    fn bounded(&self) -> bool {
        match self {
            ModulusRepr::Power { beta, .. } => *beta >= 0.0,
            ModulusRepr::Sum(parts) => parts.iter().all(|p| p.bounded()),
            ModulusRepr::Table(_) => true,
            _ => self.rate().is_some(),
        }
    }
}

fn profile_inverse(p: &Profile, s: f64) -> f64 {
    p.inverse(s)
        .unwrap_or_else(|| monotone_inverse(|t| Ok(p.eval(t)), s, InverseOptions::default()).unwrap_or(f64::INFINITY))
}

fn table_eval(nodes: &[(f64, f64)], r: f64) -> f64 {
    let Some(&(r0, w0)) = nodes.first() else { return 0.0 };
    if r <= r0 {
        // toward ω(0) = 0
        return w0 * (r / r0).max(0.0);
    }
    for w in nodes.windows(2) {
        let ((ra, wa), (rb, wb)) = (w[0], w[1]);
        if r <= rb {
            return wa + (wb - wa) * (r - ra) / (rb - ra);
        }
    }
    nodes.last().map_or(0.0, |n| n.1)
}

/// A modulus `ω: [0, ∞) → [0, 1]` with its decay flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusOfContinuity {
    pub repr: ModulusRepr,
    /// `ω(r) → 0` as `r → 0`.
    pub vanishing: bool,
    /// See [`ModulusRepr`]: the power-law decay rate when certified.
    pub holder_rate: Option<f64>,
}

impl ModulusOfContinuity {
    pub fn new(repr: ModulusRepr) -> Self {
        let holder_rate = repr.rate();
        let vanishing = holder_rate.is_some();
        ModulusOfContinuity {
            repr,
            vanishing,
            holder_rate,
        }
    }

    /// A table from a numerical estimate; `vanishing` comes from the caller's
    /// verdict.
    pub fn from_table(mut nodes: Vec<(f64, f64)>, vanishing: bool) -> Self {
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut run = 0.0f64;
        for n in nodes.iter_mut() {
            run = run.max(n.1.clamp(0.0, 1.0));
            n.1 = run;
        }
        let repr = ModulusRepr::Table(nodes);
        let holder_rate = if vanishing { repr.rate() } else { None };
        ModulusOfContinuity {
            repr,
            vanishing,
            holder_rate,
        }
    }

    /// `ω(r)`, capped at 1.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return if self.vanishing { 0.0 } else { self.repr.raw(0.0).min(1.0) };
        }
        self.repr.raw(r).clamp(0.0, 1.0)
    }

    /// The regularity class this modulus predicts.
    pub fn predicted_class(&self) -> RegularityClass {
        match self.holder_rate {
            Some(_) => RegularityClass::C1Alpha,
            None if self.vanishing => RegularityClass::CAlphaAll,
            None if self.repr.bounded() => RegularityClass::A1Only,
            None => RegularityClass::None,
        }
    }
}

fn declared(name: &str, e: &Expr, h: Option<Holder>, family: &str) -> Result<Option<Holder>> {
    if e.is_constant() {
        return Ok(None);
    }
    h.map(Some)
        .ok_or_else(|| Error::InvalidArgument(format!("{family}: coefficient {name} needs a declared modulus")))
}

/// The modulus predicted for a recognized family from its declared
/// coefficient moduli. `eps` is the (wVA1) parameter; 0 gives (VA1).
pub fn closed_form_modulus(spec: &PhiSpec, eps: f64) -> Result<ModulusOfContinuity> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps must lie in [0, 1), got {eps}")));
    }
    let n = spec.domain().dim();
    let nf = n as f64;
    let m = spec.moduli();
    let name = spec.family().name();
    let repr = match spec.family() {
        Family::Power { .. } | Family::OrliczLog { .. } | Family::Autonomous { .. } => ModulusRepr::Zero,
        Family::Perturbed { a, .. } => match declared("a", a, m.a, name)? {
            None => ModulusRepr::Zero,
            Some(h) => ModulusRepr::Power {
                c: h.c * 2f64.powf(h.beta),
                beta: h.beta,
            },
        },
        Family::VariableExponent { p } => match declared("p", p, m.p, name)? {
            None => ModulusRepr::Zero,
            Some(h) => ModulusRepr::LogHolder { n, omega: h },
        },
        Family::DoublePhase { p, q, a } => match declared("a", a, m.a, name)? {
            None => ModulusRepr::Zero,
            Some(h) => ModulusRepr::Power {
                c: h.c,
                beta: h.beta - nf * (q - p) * (1.0 - eps) / p,
            },
        },
        Family::GeneralDoublePhase { a, psi, b, xi, .. } => {
            let (ha, hb) = (declared("a", a, m.a, name)?, declared("b", b, m.b, name)?);
            if ha.is_none() && hb.is_none() {
                ModulusRepr::Zero
            } else {
                ModulusRepr::GeneralDoublePhase {
                    a: ha,
                    b: hb,
                    psi: *psi,
                    xi: *xi,
                    n,
                    eps,
                }
            }
        }
        Family::Radulescu { p, q } => {
            let (hp, hq) = (declared("p", p, m.p, name)?, declared("q", q, m.q, name)?);
            match (hp, hq) {
                (None, None) => ModulusRepr::Zero,
                (Some(h), None) | (None, Some(h)) => ModulusRepr::LogHolder { n, omega: h },
                // one modulus dominating both on r ≤ 1
                (Some(a), Some(b)) => ModulusRepr::LogHolder {
                    n,
                    omega: Holder::new(a.c.max(b.c), a.beta.min(b.beta)),
                },
            }
        }
        Family::TriplePhase { p, q, s, a, b } => {
            let mut parts = vec![];
            for (e, h, top) in [(a, m.a, q), (b, m.b, s)] {
                if let Some(h) = declared(if top == q { "a" } else { "b" }, e, h, name)? {
                    parts.push(ModulusRepr::Power {
                        c: h.c,
                        beta: h.beta - nf * (top - p) * (1.0 - eps) / p,
                    });
                }
            }
            if parts.is_empty() {
                ModulusRepr::Zero
            } else {
                ModulusRepr::Sum(parts)
            }
        }
        Family::Custom { .. } => {
            if crate::phi::PhiFn::is_autonomous(spec) {
                ModulusRepr::Zero
            } else {
                return Err(Error::Unrecognized(format!("no closed-form modulus for family {name}")));
            }
        }
    };
    Ok(ModulusOfContinuity::new(repr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityClass {
    /// Hölder-rate modulus: `Du` locally Hölder.
    C1Alpha,
    /// Vanishing modulus: `u` Hölder for every exponent below 1.
    CAlphaAll,
    /// Bounded jump only.
    A1Only,
    None,
}

impl fmt::Display for RegularityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularityClass::C1Alpha => "C^1alpha",
            RegularityClass::CAlphaAll => "C^alpha_all",
            RegularityClass::A1Only => "A1_only",
            RegularityClass::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularity {
    pub class: RegularityClass,
    /// Fitted modulus decay rate behind a `C1Alpha` prediction.
    pub rate: Option<f64>,
}

/// Minimum log-log slope for a table to count as a power law.
const MIN_RATE: f64 = 0.05;

/// Whether a decaying table decays like a power: positive slope that does
/// not collapse toward small `r` (the small-`r` half keeps at least half
/// the slope of the large-`r` half).
fn table_rate(table: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = table.iter().copied().filter(|(_, w)| *w > 0.0).collect();
    if pts.len() < 3 {
        return None;
    }
    let slope = |p: &[(f64, f64)]| {
        let (rs, ws): (Vec<f64>, Vec<f64>) = p.iter().copied().unzip();
        fit_loglog(&rs, &ws).ok().map(|f| f.slope)
    };
    let all = slope(&pts)?;
    let half = pts.len().div_ceil(2);
    // pts is sorted by increasing r: the first half holds the small radii
    let tail = slope(&pts[..half.max(2)])?;
    let head = slope(&pts[pts.len() - half.max(2)..])?;
    (all > MIN_RATE && tail > MIN_RATE && tail >= 0.5 * head).then_some(all)
}

/// Predicted regularity from condition reports. Needs a (VA1) or (wVA1)
/// report; an (A1) report, when present, must be consistent with them.
pub fn classify_regularity(reports: &[ConditionReport]) -> Result<Regularity> {
    let find = |f: &dyn Fn(&Condition) -> bool| reports.iter().find(|r| f(&r.condition));
    let va1 = find(&|c| matches!(c, Condition::VA1));
    let wva1 = find(&|c| matches!(c, Condition::WVA1(_)));
    let a1 = find(&|c| matches!(c, Condition::A1));
    if va1.is_none() && wva1.is_none() {
        return Err(Error::InvalidArgument("classification needs a VA1 or wVA1 report".into()));
    }
    let holds = |r: Option<&ConditionReport>| r.is_some_and(|r| r.verdict == Verdict::Holds);
    if let Some(a) = a1 {
        if a.verdict == Verdict::Fails && (holds(va1) || holds(wva1)) {
            return Err(Error::Inconsistent(format!(
                "{} holds but A1 fails",
                if holds(va1) { "VA1" } else { "wVA1" }
            )));
        }
    }
    let vanishing = if holds(va1) { va1 } else if holds(wva1) { wva1 } else { None };
    if let Some(rep) = vanishing {
        if rep.modulus_table.iter().all(|(_, w)| *w == 0.0) {
            return Ok(Regularity {
                class: RegularityClass::C1Alpha,
                rate: None,
            });
        }
        return Ok(match table_rate(&rep.modulus_table) {
            Some(rate) => Regularity {
                class: RegularityClass::C1Alpha,
                rate: Some(rate),
            },
            None => Regularity {
                class: RegularityClass::CAlphaAll,
                rate: None,
            },
        });
    }
    Ok(Regularity {
        class: if holds(a1) { RegularityClass::A1Only } else { RegularityClass::None },
        rate: None,
    })
}

use serde::{Deserialize, Serialize};

use super::envelope::{CoefficientEnvelope, PointEnvelope, SampledEnvelope, SamplingOptions};
use super::{check_t, finite, right_difference, BallEnvelope, LocalPhi, PhiFn, Profile};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{domain_samples, Ball, Domain};

/// The structural family of `φ(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `t^p`
    Power { p: f64 },
    /// `t^p ln(e + t)`
    OrliczLog { p: f64 },
    /// Any x-independent profile.
    Autonomous { profile: Profile },
    /// `a(x) ψ₀(t)`
    Perturbed {
        a: Expr,
        profile: Profile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    /// `t^{p(x)}`
    VariableExponent { p: Expr },
    /// `t^p + a(x) t^q`
    DoublePhase { p: f64, q: f64, a: Expr },
    /// `a(x) ψ(t) + b(x) ξ(t)`
    GeneralDoublePhase {
        a: Expr,
        psi: Profile,
        b: Expr,
        xi: Profile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    /// `t^{p(x)} + t^{q(x)}`
    Radulescu { p: Expr, q: Expr },
    /// `t^p + a(x) t^q + b(x) t^s`
    TriplePhase { p: f64, q: f64, s: f64, a: Expr, b: Expr },
    /// An arbitrary expression in `x1..xn` and `t`, with declared growth
    /// exponents and an optional closed-form derivative.
    Custom {
        phi: Expr,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dphi: Option<Expr>,
        p: f64,
        q: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Power { .. } => "power",
            Family::OrliczLog { .. } => "orlicz_log",
            Family::Autonomous { .. } => "autonomous",
            Family::Perturbed { .. } => "perturbed",
            Family::VariableExponent { .. } => "variable_exponent",
            Family::DoublePhase { .. } => "double_phase",
            Family::GeneralDoublePhase { .. } => "general_double_phase",
            Family::Radulescu { .. } => "radulescu",
            Family::TriplePhase { .. } => "triple_phase",
            Family::Custom { .. } => "custom",
        }
    }

    fn coefficients(&self) -> Vec<(&'static str, &Expr)> {
        match self {
            Family::Perturbed { a, .. } => vec![("a", a)],
            Family::VariableExponent { p } => vec![("p", p)],
            Family::DoublePhase { a, .. } => vec![("a", a)],
            Family::GeneralDoublePhase { a, b, .. } => vec![("a", a), ("b", b)],
            Family::Radulescu { p, q } => vec![("p", p), ("q", q)],
            Family::TriplePhase { a, b, .. } => vec![("a", a), ("b", b)],
            _ => vec![],
        }
    }
}

/// Modulus of continuity `ω(r) = c r^β` declared for a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Holder {
    #[serde(default = "one")]
    pub c: f64,
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

impl Holder {
    pub fn new(c: f64, beta: f64) -> Self {
        Holder { c, beta }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.c * r.powf(self.beta)
    }
}

/// Declared coefficient moduli, keyed by coefficient name.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Moduli {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Holder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Holder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Holder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Holder>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: Family,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    moduli: Moduli,
    domain: Domain,
}

/// A validated Φ-function `scale · φ(x, t)` on a domain. Immutable once
/// built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct PhiSpec {
    family: Family,
    scale: f64,
    moduli: Moduli,
    domain: Domain,
    exponents: (f64, f64),
}

impl From<PhiSpec> for RawSpec {
    fn from(s: PhiSpec) -> Self {
        RawSpec {
            family: s.family,
            scale: s.scale,
            moduli: s.moduli,
            domain: s.domain,
        }
    }
}

impl TryFrom<RawSpec> for PhiSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        PhiSpec::with_scale(r.family, r.domain, r.scale)?.with_moduli(r.moduli)
    }
}

const VALIDATION_POINTS: usize = 256;

impl PhiSpec {
    pub fn new(family: Family, domain: Domain) -> Result<Self> {
        Self::with_scale(family, domain, 1.0)
    }

    pub fn with_scale(family: Family, domain: Domain, scale: f64) -> Result<Self> {
        domain.validate()?;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        let mut spec = PhiSpec {
            family,
            scale,
            moduli: Moduli::default(),
            domain,
            exponents: (0.0, 0.0),
        };
        spec.exponents = spec.validate()?;
        Ok(spec)
    }

    pub fn with_moduli(mut self, moduli: Moduli) -> Result<Self> {
        for h in [moduli.a, moduli.b, moduli.p, moduli.q].into_iter().flatten() {
            if !(h.c > 0.0) || !(h.beta > 0.0) || !h.c.is_finite() || !h.beta.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid modulus {h:?}")));
            }
        }
        self.moduli = moduli;
        Ok(self)
    }

    /// Shorthand for a `t^p` family on `[-1, 1]ⁿ`.
    pub fn power(p: f64, dim: usize) -> Result<Self> {
        PhiSpec::new(Family::Power { p }, Domain::unit_box(dim))
    }

    /// `t^p + a(x) t^q` on `[-1, 1]ⁿ`.
    pub fn double_phase(p: f64, q: f64, a: &str, dim: usize) -> Result<Self> {
        PhiSpec::new(
            Family::DoublePhase {
                p,
                q,
                a: Expr::parse(a)?,
            },
            Domain::unit_box(dim),
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn moduli(&self) -> &Moduli {
        &self.moduli
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// `c · φ` with the same structure.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        PhiSpec::with_scale(self.family.clone(), self.domain.clone(), self.scale * c)?.with_moduli(self.moduli)
    }

    /// Checks parameters, coefficient ranges and monotonicity on samples;
    /// returns the declared `(p, q)`.
    fn validate(&self) -> Result<(f64, f64)> {
        let n = self.domain.dim();
        fn bad<T>(msg: String) -> Result<T> {
            Err(Error::InvalidArgument(msg))
        }
        for (name, e) in self.family.coefficients() {
            if e.uses_t() {
                return bad(format!("coefficient {name} must not depend on t"));
            }
            if e.min_dim() > n {
                return bad(format!("coefficient {name} uses x{} in dimension {n}", e.min_dim()));
            }
        }
        let pts = domain_samples(&self.domain, VALIDATION_POINTS, 0);
        let range = |e: &Expr, name: &str| -> Result<(f64, f64)> {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for x in &pts {
                let v = e.eval_at(x);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::BadCoefficient {
                        name: name.into(),
                        value: v,
                        point: x.clone(),
                    });
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
            Ok((lo, hi))
        };
        let check_pq = |p: f64, q: f64| -> Result<()> {
            if !(p > 1.0) || !(q >= p) || !q.is_finite() {
                return bad(format!("exponents must satisfy 1 < p <= q, got p={p}, q={q}"));
            }
            Ok(())
        };
        let check_sum = |a: &Expr, b: Option<&Expr>, nu: Option<f64>, lambda: Option<f64>| -> Result<()> {
            for x in &pts {
                let s = a.eval_at(x) + b.map_or(0.0, |b| b.eval_at(x));
                if nu.is_some_and(|nu| s < nu) || lambda.is_some_and(|l| s > l) {
                    return bad(format!("coefficient sum {s} at {x:?} outside [nu, lambda]"));
                }
            }
            Ok(())
        };
        let pq = match &self.family {
            Family::Power { p } => {
                check_pq(*p, *p)?;
                (*p, *p)
            }
            Family::OrliczLog { p } => {
                let prof = Profile::PowerLog { p: *p };
                prof.validate()?;
                prof.exponents()
            }
            Family::Autonomous { profile } => {
                profile.validate()?;
                profile.exponents()
            }
            Family::Perturbed { a, profile, nu, lambda } => {
                profile.validate()?;
                range(a, "a")?;
                check_sum(a, None, *nu, *lambda)?;
                profile.exponents()
            }
            Family::VariableExponent { p } => {
                let (lo, hi) = range(p, "p")?;
                check_pq(lo, hi)?;
                (lo, hi)
            }
            Family::DoublePhase { p, q, a } => {
                check_pq(*p, *q)?;
                range(a, "a")?;
                (*p, *q)
            }
            Family::GeneralDoublePhase { a, psi, b, xi, nu, lambda } => {
                psi.validate()?;
                xi.validate()?;
                range(a, "a")?;
                range(b, "b")?;
                check_sum(a, Some(b), *nu, *lambda)?;
                let (p1, q1) = psi.exponents();
                let (p2, q2) = xi.exponents();
                (p1.min(p2), q1.max(q2))
            }
            Family::Radulescu { p, q } => {
                let (p1, p2) = range(p, "p")?;
                let (q1, q2) = range(q, "q")?;
                check_pq(p1.min(q1), p2.max(q2))?;
                (p1.min(q1), p2.max(q2))
            }
            Family::TriplePhase { p, q, s, a, b } => {
                check_pq(*p, *q)?;
                check_pq(*q, *s)?;
                range(a, "a")?;
                range(b, "b")?;
                (*p, *s)
            }
            Family::Custom { phi, dphi, p, q } => {
                check_pq(*p, *q)?;
                for e in std::iter::once(phi).chain(dphi.as_ref()) {
                    if e.min_dim() > n {
                        return bad(format!("custom expression uses x{} in dimension {n}", e.min_dim()));
                    }
                }
                (*p, *q)
            }
        };
        // prefunction check on a subsample
        let ts = crate::numeric::logspace(1e-4, 1e4, 33);
        for x in pts.iter().step_by(16) {
            let zero = self.eval(x, 0.0)?;
            if zero != 0.0 {
                return bad(format!("φ(x, 0) = {zero} at {x:?}"));
            }
            let mut prev = 0.0;
            for &t in &ts {
                let v = self.eval(x, t)?;
                if v < prev * (1.0 - 1e-12) {
                    return Err(Error::NonMonotone { t, deriv: v - prev });
                }
                prev = v;
            }
        }
        Ok(pq)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.domain.dim() || !self.domain.contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(())
    }

    fn coefficient(&self, e: &Expr, name: &str, x: &[f64]) -> Result<f64> {
        let v = e.eval_at(x);
        if !v.is_finite() || v < 0.0 {
            return Err(Error::BadCoefficient {
                name: name.into(),
                value: v,
                point: x.to_vec(),
            });
        }
        Ok(v)
    }

    fn local(&self, x: &[f64]) -> Result<Option<LocalPhi>> {
        let pw = |p: f64| Profile::Power { p };
        let s = self.scale;
        Ok(Some(match &self.family {
            Family::Power { p } => LocalPhi::new(&[(s, pw(*p))]),
            Family::OrliczLog { p } => LocalPhi::new(&[(s, Profile::PowerLog { p: *p })]),
            Family::Autonomous { profile } => LocalPhi::new(&[(s, *profile)]),
            Family::Perturbed { a, profile, .. } => LocalPhi::new(&[(s * self.coefficient(a, "a", x)?, *profile)]),
            Family::VariableExponent { p } => LocalPhi::new(&[(s, pw(self.coefficient(p, "p", x)?))]),
            Family::DoublePhase { p, q, a } => {
                LocalPhi::new(&[(s, pw(*p)), (s * self.coefficient(a, "a", x)?, pw(*q))])
            }
            Family::GeneralDoublePhase { a, psi, b, xi, .. } => LocalPhi::new(&[
                (s * self.coefficient(a, "a", x)?, *psi),
                (s * self.coefficient(b, "b", x)?, *xi),
            ]),
            Family::Radulescu { p, q } => LocalPhi::new(&[
                (s, pw(self.coefficient(p, "p", x)?)),
                (s, pw(self.coefficient(q, "q", x)?)),
            ]),
            Family::TriplePhase { p, q, s: e3, a, b } => LocalPhi::new(&[
                (s, pw(*p)),
                (s * self.coefficient(a, "a", x)?, pw(*q)),
                (s * self.coefficient(b, "b", x)?, pw(*e3)),
            ]),
            Family::Custom { .. } => return Ok(None),
        }))
    }

    /// The single x-dependent coefficient, when `φ` is monotone in it.
    fn driver(&self) -> Option<&Expr> {
        match &self.family {
            Family::Perturbed { a, .. } | Family::DoublePhase { a, .. } => Some(a),
            Family::VariableExponent { p } => Some(p),
            _ => None,
        }
    }

    /// Exponents `(p, q)` such that φ satisfies (Inc)_p / (Dec)_q (up to the
    /// sampled coefficient range for variable exponents).
    pub fn declared_exponents(&self) -> (f64, f64) {
        self.exponents
    }
}

impl PhiFn for PhiSpec {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        check_t(t)?;
        self.check_point(x)?;
        match self.local(x)? {
            Some(l) => finite(l.eval(t), t),
            None => {
                let Family::Custom { phi, .. } = &self.family else { unreachable!() };
                let v = self.scale * phi.eval(x, t);
                if v.is_nan() || v < 0.0 {
                    return Err(Error::BadCoefficient {
                        name: "phi".into(),
                        value: v,
                        point: x.to_vec(),
                    });
                }
                finite(v, t)
            }
        }
    }

    fn deriv(&self, x: &[f64], t: f64) -> Result<f64> {
        check_t(t)?;
        self.check_point(x)?;
        match self.local(x)? {
            Some(l) => finite(l.deriv(t), t),
            None => {
                let Family::Custom { dphi, .. } = &self.family else { unreachable!() };
                match dphi {
                    Some(d) => {
                        let v = self.scale * d.eval(x, t);
                        if v.is_nan() || v < -1e-12 {
                            return Err(Error::NonMonotone { t, deriv: v });
                        }
                        finite(v.max(0.0), t)
                    }
                    None => right_difference(|s| self.eval(x, s), t),
                }
            }
        }
    }

    fn deriv_ratio(&self, x: &[f64], t: f64) -> Result<f64> {
        match self.local(x)? {
            Some(l) => Ok(l.deriv_ratio(t)),
            None => Ok(self.deriv(x, t)? / t),
        }
    }

    fn is_autonomous(&self) -> bool {
        match &self.family {
            Family::Power { .. } | Family::OrliczLog { .. } | Family::Autonomous { .. } => true,
            Family::Custom { phi, .. } => phi.min_dim() == 0,
            f => f.coefficients().iter().all(|(_, e)| e.is_constant()),
        }
    }

    fn localize(&self, x: &[f64]) -> Option<LocalPhi> {
        self.local(x).ok().flatten()
    }

    fn power_law(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Power { p } => Some((self.scale, p)),
            _ => None,
        }
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        Some(self.exponents)
    }

    fn envelope<'a>(&'a self, ball: &Ball, opts: &SamplingOptions) -> Result<Box<dyn BallEnvelope + 'a>> {
        let ball = match &ball.clip {
            Some(_) => ball.clone(),
            None => ball.clone().clipped(&self.domain)?,
        };
        if self.is_autonomous() {
            return Ok(Box::new(PointEnvelope::new(self, &ball)?));
        }
        match self.driver() {
            Some(e) => Ok(Box::new(CoefficientEnvelope::new(self, &ball, |x| Ok(e.eval_at(x)), opts)?)),
            None => Ok(Box::new(SampledEnvelope::new(self, &ball, opts.clone()))),
        }
    }

    fn inverse(&self, x: &[f64], s: f64) -> Result<f64> {
        if let Some(l) = self.localize(x) {
            if let Some((c, p)) = l.as_power() {
                if c > 0.0 {
                    return Ok((s / c).powf(1.0 / p));
                }
            }
        }
        crate::numeric::monotone_inverse(|t| self.eval(x, t), s, Default::default())
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An autonomous growth profile `ψ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `t^p`
    Power { p: f64 },
    /// `t^p ln(e + t)`
    PowerLog { p: f64 },
    /// `∫₀ᵗ min{s^{p-1}, s^{q-1}} ds`, so `q`-growth below 1 and `p`-growth above.
    MinPower { p: f64, q: f64 },
}

/// Upper bound of `t / ((e+t) ln(e+t))`, the excess of `tψ'/ψ` over `p` for
/// [`Profile::PowerLog`] (the true supremum is about 0.318).
const POWER_LOG_EXCESS: f64 = 1.0 / 3.0;

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let (p, q) = self.exponents();
        if !(p > 1.0) || !(q >= p) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "profile {self:?} needs 1 < p <= q"
            )));
        }
        Ok(())
    }

    /// Exponents `(p, q)` with `ψ` satisfying (Inc)_p and (Dec)_q.
    pub fn exponents(&self) -> (f64, f64) {
        match *self {
            Profile::Power { p } => (p, p),
            Profile::PowerLog { p } => (p, p + POWER_LOG_EXCESS),
            Profile::MinPower { p, q } => (p, q),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Power { p } => t.powf(p),
            Profile::PowerLog { p } => t.powf(p) * (std::f64::consts::E + t).ln(),
            Profile::MinPower { p, q } => {
                if t <= 1.0 {
                    t.powf(q) / q
                } else {
                    1.0 / q + (t.powf(p) - 1.0) / p
                }
            }
        }
    }

    /// Right derivative `ψ'(t)`.
    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            Profile::Power { p } => p * t.powf(p - 1.0),
            Profile::PowerLog { p } => {
                let e_t = std::f64::consts::E + t;
                p * t.powf(p - 1.0) * e_t.ln() + t.powf(p) / e_t
            }
            Profile::MinPower { p, q } => {
                if t < 1.0 {
                    t.powf(q - 1.0)
                } else {
                    t.powf(p - 1.0)
                }
            }
        }
    }

    /// `ψ'(t)/t`, finite at `t = 0` only when `ψ` grows at least quadratically.
    #[inline]
    pub fn deriv_ratio(&self, t: f64) -> f64 {
        match *self {
            Profile::Power { p } => p * t.powf(p - 2.0),
            _ => self.deriv(t) / t,
        }
    }

    /// Closed-form inverse where one exists.
    pub fn inverse(&self, s: f64) -> Option<f64> {
        match *self {
            Profile::Power { p } => Some(s.powf(1.0 / p)),
            Profile::MinPower { p, q } => Some(if s <= 1.0 / q {
                (q * s).powf(1.0 / q)
            } else {
                (1.0 + p * (s - 1.0 / q)).powf(1.0 / p)
            }),
            Profile::PowerLog { .. } => None,
        }
    }
}

/// A weighted sum `Σ cᵢ ψᵢ(t)` with at most three terms: the value of an
/// x-dependent family frozen at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPhi {
    terms: [(f64, Profile); 3],
    len: usize,
}

impl LocalPhi {
    pub fn new(terms: &[(f64, Profile)]) -> Self {
        assert!(!terms.is_empty() && terms.len() <= 3, "1 to 3 terms");
        let mut out = [terms[0]; 3];
        out[..terms.len()].copy_from_slice(terms);
        LocalPhi {
            terms: out,
            len: terms.len(),
        }
    }

    pub fn terms(&self) -> &[(f64, Profile)] {
        &self.terms[..self.len]
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for term in &mut self.terms[..self.len] {
            term.0 *= c;
        }
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.terms().iter().map(|(c, f)| if *c == 0.0 { 0.0 } else { c * f.eval(t) }).sum()
    }

    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        self.terms().iter().map(|(c, f)| if *c == 0.0 { 0.0 } else { c * f.deriv(t) }).sum()
    }

    #[inline]
    pub fn deriv_ratio(&self, t: f64) -> f64 {
        self.terms()
            .iter()
            .map(|(c, f)| if *c == 0.0 { 0.0 } else { c * f.deriv_ratio(t) })
            .sum()
    }

    /// `(c, p)` when this is a single power `c t^p`.
    pub fn as_power(&self) -> Option<(f64, f64)> {
        match self.terms() {
            [(c, Profile::Power { p })] => Some((*c, *p)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_power_matches_integral_of_min() {
        let f = Profile::MinPower { p: 2.0, q: 3.0 };
        assert_eq!(f.deriv(0.5), 0.25);
        assert_eq!(f.deriv(2.0), 2.0);
        let v = crate::numeric::integrate(|s: f64| s.min(s * s), 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((f.eval(2.0) - v).abs() < 1e-13);
        for s in [0.01, 0.2, 1.0 / 3.0, 1.0, 7.0] {
            assert!((f.eval(f.inverse(s).unwrap()) - s).abs() < 1e-13 * s.max(1.0));
        }
    }

    #[test]
    fn power_log_derivative() {
        let f = Profile::PowerLog { p: 2.0 };
        for t in [0.1, 1.0, 5.0, 40.0] {
            let h = 1e-6 * t;
            let fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
            assert!((fd - f.deriv(t)).abs() < 1e-7 * f.deriv(t));
        }
    }

    #[test]
    fn power_log_excess_bound() {
        let sup = crate::numeric::logspace(1e-3, 1e6, 2000)
            .into_iter()
            .map(|t| {
                let e_t = std::f64::consts::E + t;
                t / (e_t * e_t.ln())
            })
            .fold(0.0, f64::max);
        assert!(sup < POWER_LOG_EXCESS && sup > 0.3);
    }

    #[test]
    fn local_sum() {
        let l = LocalPhi::new(&[(1.0, Profile::Power { p: 2.0 }), (0.5, Profile::Power { p: 3.0 })]);
        assert_eq!(l.eval(2.0), 8.0);
        assert_eq!(l.deriv(2.0), 10.0);
        assert_eq!(l.as_power(), None);
        assert_eq!(LocalPhi::new(&[(2.0, Profile::Power { p: 3.0 })]).as_power(), Some((2.0, 3.0)));
    }
}

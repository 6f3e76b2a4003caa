//! Generalized Φ-functions `φ(x, t)` and the objects derived from them.

mod conjugate;
mod envelope;
mod epsilon;
mod growth;
pub mod inequalities;
mod profile;
mod spec;

pub use conjugate::{conjugate, legendre_sup, tau_grid, Conjugate};
pub use envelope::{ball_envelope, extremize, BallEnvelope, CoefficientEnvelope, Extremum, PointEnvelope, SampledEnvelope, SamplingOptions};
pub use epsilon::EpsRegularized;
pub use growth::{growth_constants, GrowthEnvelope, GrowthOptions};
pub use profile::{LocalPhi, Profile};
pub use spec::{Family, Holder, Moduli, PhiSpec};

use crate::error::{Error, Result};
use crate::geometry::Ball;

/// Anything that evaluates like a Φ-prefunction.
///
/// Implementations must be nondecreasing in `t` with `φ(x, 0) = 0`.
pub trait PhiFn: AsDynPhi + Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], t: f64) -> Result<f64>;

    /// Right derivative in `t`. The default is a one-sided second-order
    /// difference of [`PhiFn::eval`].
    fn deriv(&self, x: &[f64], t: f64) -> Result<f64> {
        right_difference(|s| self.eval(x, s), t)
    }

    /// `φ'(x,t)/t`, which the solver uses instead of second derivatives.
    fn deriv_ratio(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.deriv(x, t)? / t)
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    /// `φ(x, ·)` frozen at `x` as a sum of profiles, when available.
    fn localize(&self, _x: &[f64]) -> Option<LocalPhi> {
        None
    }

    /// `(c, p)` when `φ = c t^p`.
    fn power_law(&self) -> Option<(f64, f64)> {
        None
    }

    /// Declared `(p, q)` such that `φ` satisfies (aInc)_p and (aDec)_q.
    fn exponents(&self) -> Option<(f64, f64)> {
        None
    }

    /// Sup/inf of `φ(·, t)` over a ball. The default samples `φ` directly.
    fn envelope<'a>(&'a self, ball: &Ball, opts: &SamplingOptions) -> Result<Box<dyn BallEnvelope + 'a>> {
        if self.is_autonomous() {
            return Ok(Box::new(PointEnvelope::new(self.as_dyn(), ball)?));
        }
        Ok(Box::new(SampledEnvelope::new(self.as_dyn(), ball, opts.clone())))
    }

    /// Left-continuous inverse `inf{τ ≥ 0 : φ(x, τ) ≥ s}`.
    fn inverse(&self, x: &[f64], s: f64) -> Result<f64> {
        crate::numeric::monotone_inverse(|t| self.eval(x, t), s, Default::default())
    }
}

/// Upcast helper so default trait methods can hand out `&dyn PhiFn`.
pub trait AsDynPhi {
    fn as_dyn(&self) -> &dyn PhiFn;
}

impl<T: PhiFn> AsDynPhi for T {
    fn as_dyn(&self) -> &dyn PhiFn {
        self
    }
}

macro_rules! forward_phi {
    ($($ty:ty),*) => {$(
        impl<P: PhiFn + ?Sized> PhiFn for $ty {
            fn dim(&self) -> usize { (**self).dim() }
            fn eval(&self, x: &[f64], t: f64) -> Result<f64> { (**self).eval(x, t) }
            fn deriv(&self, x: &[f64], t: f64) -> Result<f64> { (**self).deriv(x, t) }
            fn deriv_ratio(&self, x: &[f64], t: f64) -> Result<f64> { (**self).deriv_ratio(x, t) }
            fn is_autonomous(&self) -> bool { (**self).is_autonomous() }
            fn localize(&self, x: &[f64]) -> Option<LocalPhi> { (**self).localize(x) }
            fn power_law(&self) -> Option<(f64, f64)> { (**self).power_law() }
            fn exponents(&self) -> Option<(f64, f64)> { (**self).exponents() }
            fn envelope<'a>(&'a self, ball: &Ball, opts: &SamplingOptions) -> Result<Box<dyn BallEnvelope + 'a>> {
                (**self).envelope(ball, opts)
            }
            fn inverse(&self, x: &[f64], s: f64) -> Result<f64> { (**self).inverse(x, s) }
        }
    )*};
}

forward_phi!(&P, Box<P>, std::sync::Arc<P>);

const DIFF_ABS: f64 = 1e-7;
const DIFF_REL: f64 = 1e-6;

/// One-sided second-order difference `(-3f(t) + 4f(t+h) - f(t+2h)) / 2h`
/// with `h = max(1e-7, 1e-6 t)`.
pub fn right_difference(mut f: impl FnMut(f64) -> Result<f64>, t: f64) -> Result<f64> {
    let h = DIFF_ABS.max(DIFF_REL * t);
    let (f0, f1, f2) = (f(t)?, f(t + h)?, f(t + 2.0 * h)?);
    let d = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
    if d < -1e-6 * (1.0 + f2.abs() / (t + 2.0 * h)) {
        return Err(Error::NonMonotone { t, deriv: d });
    }
    Ok(d.max(0.0))
}

/// The right derivative `φ'` viewed as a function of `(x, t)`.
pub struct Derivative<P>(pub P);

impl<P: PhiFn> PhiFn for Derivative<P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        self.0.deriv(x, t)
    }

    fn is_autonomous(&self) -> bool {
        self.0.is_autonomous()
    }

    fn power_law(&self) -> Option<(f64, f64)> {
        self.0.power_law().map(|(c, p)| (c * p, p - 1.0))
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        self.0.exponents().map(|(p, q)| (p - 1.0, q - 1.0))
    }
}

/// `φ` frozen at a point: an autonomous function of `t`.
pub struct Frozen<P> {
    pub base: P,
    pub at: Vec<f64>,
}

impl<P: PhiFn> PhiFn for Frozen<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, _x: &[f64], t: f64) -> Result<f64> {
        self.base.eval(&self.at, t)
    }

    fn deriv(&self, _x: &[f64], t: f64) -> Result<f64> {
        self.base.deriv(&self.at, t)
    }

    fn deriv_ratio(&self, _x: &[f64], t: f64) -> Result<f64> {
        self.base.deriv_ratio(&self.at, t)
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn localize(&self, _x: &[f64]) -> Option<LocalPhi> {
        self.base.localize(&self.at)
    }

    fn power_law(&self) -> Option<(f64, f64)> {
        self.localize(&self.at).and_then(|l| l.as_power())
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        self.base.exponents()
    }
}

impl PhiFn for LocalPhi {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, _x: &[f64], t: f64) -> Result<f64> {
        check_t(t)?;
        finite(LocalPhi::eval(self, t), t)
    }

    fn deriv(&self, _x: &[f64], t: f64) -> Result<f64> {
        check_t(t)?;
        finite(LocalPhi::deriv(self, t), t)
    }

    fn deriv_ratio(&self, _x: &[f64], t: f64) -> Result<f64> {
        Ok(LocalPhi::deriv_ratio(self, t))
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn localize(&self, _x: &[f64]) -> Option<LocalPhi> {
        Some(*self)
    }

    fn power_law(&self) -> Option<(f64, f64)> {
        self.as_power()
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        let mut pq = (f64::INFINITY, 0.0f64);
        for (c, f) in self.terms() {
            if *c > 0.0 {
                let (p, q) = f.exponents();
                pq = (pq.0.min(p), pq.1.max(q));
            }
        }
        (pq.0.is_finite()).then_some(pq)
    }
}

pub(crate) fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t must be finite and nonnegative, got {t}")))
    }
}

pub(crate) fn finite(v: f64, t: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_difference_is_second_order() {
        let d = right_difference(|t| Ok(t * t * t), 2.0).unwrap();
        assert!((d - 12.0).abs() < 1e-8);
        assert!(matches!(right_difference(|t| Ok(-t), 1.0), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn derivative_wrapper_shifts_exponents() {
        let l = LocalPhi::new(&[(1.0, Profile::Power { p: 3.0 })]);
        let d = Derivative(l);
        assert_eq!(d.eval(&[0.0], 2.0).unwrap(), 12.0);
        assert_eq!(d.power_law(), Some((3.0, 2.0)));
        assert_eq!(d.exponents(), Some((2.0, 2.0)));
    }
}

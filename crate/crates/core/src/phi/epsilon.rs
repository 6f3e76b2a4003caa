//! The non-degenerate regularization `φ_ε(t) = ∫₀ᵗ φ'(ε+s) s / (ε+s) ds`.

use std::sync::OnceLock;

use super::{check_t, PhiFn};
use crate::error::{Error, Result};
use crate::numeric::integrate;

const NODES_LO: f64 = 1e-8;
const NODES_PER_DECADE: usize = 16;
const NODE_DECADES: usize = 16;
const QUAD_REL: f64 = 1e-12;

/// `φ_ε` for an autonomous `φ`, with `φ_ε'(t)/t = φ'(ε+t)/(ε+t)`.
///
/// Values come from adaptive quadrature; cumulative integrals at log-spaced
/// nodes are computed once and shared.
pub struct EpsRegularized<P> {
    base: P,
    eps: f64,
    at: Vec<f64>,
    table: OnceLock<Result<Vec<(f64, f64)>>>,
}

impl<P: PhiFn> EpsRegularized<P> {
    pub fn new(base: P, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        if !base.is_autonomous() {
            return Err(Error::Precondition("ε-regularization needs an autonomous φ".into()));
        }
        let at = vec![0.0; base.dim()];
        Ok(EpsRegularized {
            base,
            eps,
            at,
            table: OnceLock::new(),
        })
    }

    /// Evaluates at the given point of the base domain instead of the origin.
    pub fn at_point(mut self, x: Vec<f64>) -> Self {
        self.at = x;
        self
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `φ'(ε+t)/(ε+t)`.
    pub fn ratio(&self, t: f64) -> Result<f64> {
        let s = self.eps + t;
        Ok(self.base.deriv(&self.at, s)? / s)
    }

    fn density(&self, s: f64) -> f64 {
        self.ratio(s).map(|r| r * s).unwrap_or(f64::NAN)
    }

    fn piece(&self, a: f64, b: f64) -> Result<f64> {
        let v = integrate(|s| self.density(s), a, b, 0.0, QUAD_REL)?;
        if v.is_nan() {
            return Err(Error::Quadrature { estimate: f64::NAN });
        }
        Ok(v)
    }

    fn table(&self) -> Result<&[(f64, f64)]> {
        let t = self.table.get_or_init(|| {
            let n = NODES_PER_DECADE * NODE_DECADES;
            let mut out = Vec::with_capacity(n + 1);
            let mut prev = 0.0;
            let mut acc = 0.0;
            for k in 0..=n {
                let node = NODES_LO * 10f64.powf(k as f64 / NODES_PER_DECADE as f64);
                acc += self.piece(prev, node)?;
                out.push((node, acc));
                prev = node;
            }
            Ok(out)
        });
        match t {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }
}

impl<P: PhiFn> PhiFn for EpsRegularized<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, _x: &[f64], t: f64) -> Result<f64> {
        check_t(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let table = self.table()?;
        let k = table.partition_point(|(node, _)| *node <= t);
        if k == 0 {
            return self.piece(0.0, t);
        }
        let (node, acc) = table[k - 1];
        Ok(acc + self.piece(node, t)?)
    }

    fn deriv(&self, _x: &[f64], t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.ratio(t)? * t)
    }

    fn deriv_ratio(&self, _x: &[f64], t: f64) -> Result<f64> {
        self.ratio(t)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{LocalPhi, Profile};

    fn power(p: f64) -> LocalPhi {
        LocalPhi::new(&[(1.0, Profile::Power { p })])
    }

    #[test]
    fn quadratic_is_a_fixed_point() {
        let e = EpsRegularized::new(power(2.0), 0.1).unwrap();
        for t in [1e-9, 0.3, 2.0, 50.0] {
            let v = e.eval(&[0.0], t).unwrap();
            assert!((v - t * t).abs() < 1e-11 * t * t, "t={t}: {v}");
        }
    }

    #[test]
    fn cubic_derivative_formula() {
        let e = EpsRegularized::new(power(3.0), 1.0).unwrap();
        assert!((e.deriv(&[0.0], 1.0).unwrap() - 6.0).abs() < 1e-14);
        // nondegenerate at the origin: φ_ε'(t)/t → φ'(ε)/ε
        assert!((e.deriv_ratio(&[0.0], 0.0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_cached_integral() {
        let e = EpsRegularized::new(LocalPhi::new(&[(1.0, Profile::PowerLog { p: 2.5 })]), 0.05).unwrap();
        for t in [0.01, 0.7, 12.0] {
            let h = 1e-5 * t;
            let fd = (e.eval(&[0.0], t + h).unwrap() - e.eval(&[0.0], t - h).unwrap()) / (2.0 * h);
            let d = e.deriv(&[0.0], t).unwrap();
            assert!((fd - d).abs() < 1e-7 * d, "t={t}");
        }
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(EpsRegularized::new(power(2.0), 0.0).is_err());
        assert!(EpsRegularized::new(power(2.0), -1.0).is_err());
    }
}

//! Legendre–Fenchel conjugation `φ*(x, s) = sup_{τ≥0} (sτ − φ(x, τ))`.

use std::sync::OnceLock;

use super::PhiFn;
use crate::error::{Error, Result};
use crate::numeric::golden_max;

const PER_DECADE: usize = 64;
const TAU_LO_EXP: i32 = -8;
const TAU_HI_EXP: i32 = 8;

/// The search grid: 64 log-spaced points per decade on `[1e-8, 1e8]`.
pub fn tau_grid() -> &'static [f64] {
    static GRID: OnceLock<Vec<f64>> = OnceLock::new();
    GRID.get_or_init(|| {
        let decades = (TAU_HI_EXP - TAU_LO_EXP) as usize;
        let n = decades * PER_DECADE;
        (0..=n)
            .map(|k| 10f64.powf(TAU_LO_EXP as f64 + k as f64 / PER_DECADE as f64))
            .collect()
    })
}

/// `sup_{τ≥0} (sτ − f(τ))` over [`tau_grid`] refined by golden section.
/// `grid_values`, when given, must hold `f` at the grid points.
///
/// Returns `(value, argmax)`.
pub fn legendre_sup(f: &dyn Fn(f64) -> Result<f64>, s: f64, grid_values: Option<&[f64]>) -> Result<(f64, f64)> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("conjugate argument must be nonnegative, got {s}")));
    }
    if s == 0.0 {
        return Ok((0.0, 0.0));
    }
    let grid = tau_grid();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, &tau) in grid.iter().enumerate() {
        let fv = match grid_values {
            Some(v) => v[k],
            None => unbounded_as_infinite(f(tau))?,
        };
        let g = s * tau - fv;
        if g > best.1 {
            best = (k, g);
        }
    }
    let k = best.0;
    if k == grid.len() - 1 {
        return Err(Error::ConjugateBracket(s));
    }
    let lo = if k == 0 { 0.0 } else { grid[k - 1] };
    let hi = grid[k + 1];
    let mut failure = None;
    let (arg, val) = golden_max(
        |tau| match f(tau) {
            Ok(v) => s * tau - v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        1e-12,
        0.0,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    // the grid point may beat the refined one when the bracket is flat
    let (val, arg) = if val >= best.1 { (val, arg) } else { (best.1, grid[k]) };
    // τ = 0 is always admissible and gives 0
    Ok(if val > 0.0 { (val, arg) } else { (0.0, 0.0) })
}

// Values too large to represent (or conjugates without a bracket) can never
// be the maximizer of `sτ − f(τ)`.
fn unbounded_as_infinite(v: Result<f64>) -> Result<f64> {
    match v {
        Err(Error::Overflow { .. }) | Err(Error::ConjugateBracket(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

/// `φ*(x, s)`; exact for power laws `c t^p`.
pub fn conjugate(phi: &dyn PhiFn, x: &[f64], s: f64) -> Result<f64> {
    if let Some((c, p)) = phi.power_law() {
        return Ok(power_conjugate(c, p, s).0);
    }
    legendre_sup(&|t| phi.eval(x, t), s, None).map(|r| r.0)
}

/// `(φ*(s), argmax)` for `φ = c t^p`: `τ* = (s/(cp))^{1/(p−1)}`, `φ* = sτ*(1 − 1/p)`.
fn power_conjugate(c: f64, p: f64, s: f64) -> (f64, f64) {
    let tau = (s / (c * p)).powf(1.0 / (p - 1.0));
    (s * tau * (1.0 - 1.0 / p), tau)
}

/// The conjugate `φ*` as a Φ-function. Its right derivative is the
/// maximizing `τ`. For autonomous bases the grid values of `φ` are cached.
pub struct Conjugate<P> {
    base: P,
    cache: OnceLock<Result<Vec<f64>>>,
}

impl<P: PhiFn> Conjugate<P> {
    pub fn new(base: P) -> Self {
        Conjugate {
            base,
            cache: OnceLock::new(),
        }
    }

    pub fn base(&self) -> &P {
        &self.base
    }

    fn grid_values(&self, x: &[f64]) -> Result<Option<&[f64]>> {
        if !self.base.is_autonomous() {
            return Ok(None);
        }
        let cached = self
            .cache
            .get_or_init(|| tau_grid().iter().map(|&t| unbounded_as_infinite(self.base.eval(x, t))).collect());
        match cached {
            Ok(v) => Ok(Some(v)),
            Err(e) => Err(e.clone()),
        }
    }

    fn sup(&self, x: &[f64], s: f64) -> Result<(f64, f64)> {
        if let Some((c, p)) = self.base.power_law() {
            return Ok(power_conjugate(c, p, s));
        }
        let values = self.grid_values(x)?;
        legendre_sup(&|t| self.base.eval(x, t), s, values)
    }
}

impl<P: PhiFn> PhiFn for Conjugate<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &[f64], s: f64) -> Result<f64> {
        self.sup(x, s).map(|r| r.0)
    }

    fn deriv(&self, x: &[f64], s: f64) -> Result<f64> {
        self.sup(x, s).map(|r| r.1)
    }

    fn is_autonomous(&self) -> bool {
        self.base.is_autonomous()
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        self.base.exponents().map(|(p, q)| (q / (q - 1.0), p / (p - 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{LocalPhi, PhiSpec, Profile};

    #[test]
    fn quadratic_is_self_conjugate() {
        let half = LocalPhi::new(&[(0.5, Profile::Power { p: 2.0 })]);
        assert!((conjugate(&half, &[0.0], 3.0).unwrap() - 4.5).abs() < 1e-14);
        let numeric = legendre_sup(&|t| Ok(0.5 * t * t), 3.0, None).unwrap();
        assert!((numeric.0 - 4.5).abs() < 1e-12);
        assert!((numeric.1 - 3.0).abs() < 1e-5);
    }

    #[test]
    fn cubic_conjugate_matches_closed_form() {
        let expect = 2.0 / 3.0 * 2f64.powf(1.5);
        let numeric = legendre_sup(&|t| Ok(t * t * t / 3.0), 2.0, None).unwrap().0;
        assert!((numeric - expect).abs() < 1e-12);
        let spec = PhiSpec::new(crate::phi::Family::Power { p: 3.0 }, crate::geometry::Domain::unit_box(1))
            .unwrap()
            .rescaled(1.0 / 3.0)
            .unwrap();
        assert!((conjugate(&spec, &[0.0], 2.0).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn linear_growth_has_no_bracket() {
        assert_eq!(legendre_sup(&|t| Ok(t), 2.0, None), Err(Error::ConjugateBracket(2.0)));
    }

    #[test]
    fn derivative_of_conjugate_is_argmax() {
        let phi = LocalPhi::new(&[(1.0, Profile::PowerLog { p: 2.0 })]);
        let c = Conjugate::new(phi);
        let s = 5.0;
        let tau = c.deriv(&[0.0], s).unwrap();
        // first-order condition s = φ'(τ)
        assert!((phi.deriv(tau) - s).abs() < 1e-4);
    }
}

//! The regularized autonomous function `φ̃` attached to a ball `B_r(x₀)`.
//!
//! With `B = B_{2r}(x₀)` and `φ⁻ = φ⁻_B`, the thresholds are
//! `t₁ = (φ⁻)⁻¹(ω(2r))` and `t₂ = (φ⁻)⁻¹(|B|⁻¹)`. The derivative `ψ_B`
//! follows `φ'(x₀, ·)` on `[t₁, t₂]` and continues as `t^{p−1}` on both
//! sides; `φ_B = ∫ψ_B`, and `φ̃(t) = ∫ φ_B(tσ) η_r(σ−1) dσ`.

mod table;
mod theta;
mod verify;

pub use table::TabulatedPhi;
pub use theta::{check_theta, Theta, ThetaChecks, ThetaOptions};
pub use verify::{verify_approx, ApproxReport};

use std::cell::Cell;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::conditions::ModulusOfContinuity;
use crate::error::{Error, Result};
use crate::geometry::Ball;
use crate::numeric::{integrate, integrate_split, logspace, monotone_inverse};
use crate::phi::{BallEnvelope, LocalPhi, PhiFn, PhiSpec, SamplingOptions};

/// The bump `η(s) ∝ exp(−1/(1−(2s−1)²))` on `(0, 1)` with unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    norm: f64,
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * s - 1.0;
    (-1.0 / (1.0 - u * u)).exp()
}

impl Mollifier {
    pub fn standard() -> Self {
        static NORM: OnceLock<f64> = OnceLock::new();
        let norm = *NORM.get_or_init(|| integrate(bump, 0.0, 1.0, 0.0, 1e-14).expect("bump quadrature"));
        Mollifier { norm }
    }

    pub fn eval(&self, s: f64) -> f64 {
        bump(s) / self.norm
    }

    pub fn deriv(&self, s: f64) -> f64 {
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let u = 2.0 * s - 1.0;
        let w = 1.0 - u * u;
        self.eval(s) * (-4.0 * u / (w * w))
    }

    /// `∫ σ^k η_r(σ−1) dσ`, between 1 and `(1+r)^k` for `k ≥ 0`.
    pub fn moment(&self, k: f64, r: f64) -> Result<f64> {
        integrate(|s| (1.0 + r * s).powf(k) * self.eval(s), 0.0, 1.0, 0.0, 1e-14)
    }
}

/// The thresholds of the construction on `B = B_{2r}(x₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub t1: f64,
    pub t2: f64,
    pub omega_2r: f64,
    /// `|B_{2r}|`.
    pub volume: f64,
}

/// `t₁ = (φ⁻)⁻¹(ω(2r))` and `t₂ = (φ⁻)⁻¹(|B|⁻¹)` from an infimum envelope.
pub fn thresholds_from(env: &dyn BallEnvelope, omega_2r: f64, volume: f64) -> Result<Thresholds> {
    if !(0.0..1.0).contains(&omega_2r) {
        return Err(Error::Precondition(format!(
            "ω(2r) = {omega_2r} is not below 1: the radius is too large"
        )));
    }
    if !(volume > 0.0 && volume < 1.0) {
        return Err(Error::Precondition(format!("|B_2r| = {volume} is not below 1: the radius is too large")));
    }
    let t1 = env.inf_inverse(omega_2r)?;
    let t2 = env.inf_inverse(1.0 / volume)?;
    if !(t1 <= 1.0 && 1.0 <= t2) {
        return Err(Error::Precondition(format!(
            "thresholds t1 = {t1}, t2 = {t2} do not bracket 1: the radius is too large"
        )));
    }
    Ok(Thresholds {
        t1,
        t2,
        omega_2r,
        volume,
    })
}

/// Thresholds for the ball `B_r(x₀)`; the envelope is taken over `B_{2r}`.
pub fn thresholds(phi: &dyn PhiFn, ball: &Ball, omega: &ModulusOfContinuity, sampling: &SamplingOptions) -> Result<Thresholds> {
    let big = ball.with_radius(2.0 * ball.radius)?;
    let env = phi.envelope(&big, sampling)?;
    thresholds_from(env.as_ref(), omega.eval(2.0 * ball.radius), big.volume())
}

/// `φ(x₀, ·)`, through the local profile sum when the family has one.
#[derive(Debug, Clone)]
struct Center {
    base: PhiSpec,
    x0: Vec<f64>,
    local: Option<LocalPhi>,
}

impl Center {
    fn eval(&self, t: f64) -> Result<f64> {
        match &self.local {
            Some(l) => Ok(l.eval(t)),
            None => self.base.eval(&self.x0, t),
        }
    }

    fn deriv(&self, t: f64) -> Result<f64> {
        match &self.local {
            Some(l) => Ok(l.deriv(t)),
            None => self.base.deriv(&self.x0, t),
        }
    }
}

/// The piecewise derivative `ψ_B` and its primitive `φ_B`.
#[derive(Debug, Clone)]
pub struct PsiB {
    center: Center,
    t1: f64,
    t2: f64,
    p: f64,
    q: f64,
    a1: f64,
    a2: f64,
    phi_t1: f64,
    phib_t1: f64,
    phib_t2: f64,
}

impl PsiB {
    /// `p` and `q` are the declared growth exponents of `phi`.
    pub fn new(phi: &PhiSpec, x0: &[f64], t1: f64, t2: f64) -> Result<Self> {
        let (p, q) = phi
            .exponents()
            .ok_or_else(|| Error::Precondition("the construction needs declared growth exponents".into()))?;
        if !(p > 1.0) {
            return Err(Error::Precondition(format!("lower exponent {p} must exceed 1")));
        }
        if !(0.0 <= t1 && t1 <= t2 && t2 > 0.0 && t2.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad thresholds t1 = {t1}, t2 = {t2}")));
        }
        let center = Center {
            base: phi.clone(),
            x0: x0.to_vec(),
            local: phi.localize(x0),
        };
        let a1 = if t1 > 0.0 { center.deriv(t1)? } else { 0.0 };
        let a2 = center.deriv(t2)?;
        let phi_t1 = if t1 > 0.0 { center.eval(t1)? } else { 0.0 };
        let phib_t1 = if t1 > 0.0 { a1 * t1 / p } else { 0.0 };
        let phib_t2 = phib_t1 + center.eval(t2)? - phi_t1;
        Ok(PsiB {
            center,
            t1,
            t2,
            p,
            q,
            a1,
            a2,
            phi_t1,
            phib_t1,
            phib_t2,
        })
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.t1, self.t2)
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.p, self.q)
    }

    /// `(a₁, a₂) = (φ'(x₀,t₁), φ'(x₀,t₂))`.
    pub fn constants(&self) -> (f64, f64) {
        (self.a1, self.a2)
    }

    pub fn center(&self) -> &[f64] {
        &self.center.x0
    }

    pub fn base(&self) -> &PhiSpec {
        &self.center.base
    }

    /// `φ(x₀, t)`.
    pub fn phi_center(&self, t: f64) -> Result<f64> {
        self.center.eval(t)
    }

    fn lower_psi(&self, t: f64) -> f64 {
        self.a1 * (t / self.t1).powf(self.p - 1.0)
    }

    fn upper_psi(&self, t: f64) -> f64 {
        self.a2 * (t / self.t2).powf(self.p - 1.0)
    }

    fn lower_phi(&self, t: f64) -> f64 {
        self.a1 * self.t1 / self.p * (t / self.t1).powf(self.p)
    }

    fn middle_phi(&self, t: f64) -> Result<f64> {
        Ok(self.phib_t1 + self.center.eval(t)? - self.phi_t1)
    }

    fn upper_phi(&self, t: f64) -> f64 {
        self.phib_t2 + self.a2 * self.t2 / self.p * ((t / self.t2).powf(self.p) - 1.0)
    }

    pub fn psi(&self, t: f64) -> Result<f64> {
        if t < self.t1 {
            Ok(self.lower_psi(t))
        } else if t <= self.t2 {
            self.center.deriv(t)
        } else {
            Ok(self.upper_psi(t))
        }
    }

    pub fn phi_b(&self, t: f64) -> Result<f64> {
        if t < self.t1 {
            Ok(self.lower_phi(t))
        } else if t <= self.t2 {
            self.middle_phi(t)
        } else {
            Ok(self.upper_phi(t))
        }
    }

    /// Largest relative jump of `ψ_B` and `φ_B` across `t₁` and `t₂`.
    pub fn continuity_residual(&self) -> Result<f64> {
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        let mut worst = rel(self.upper_psi(self.t2), self.center.deriv(self.t2)?);
        worst = worst.max(rel(self.upper_phi(self.t2), self.middle_phi(self.t2)?));
        if self.t1 > 0.0 {
            worst = worst.max(rel(self.lower_psi(self.t1), self.center.deriv(self.t1)?));
            worst = worst.max(rel(self.lower_phi(self.t1), self.middle_phi(self.t1)?));
        }
        Ok(worst)
    }
}

/// Tabulated `(t, φ̃, φ̃', φ̃'')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub value: f64,
    pub deriv: f64,
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizeOptions {
    pub table_nodes: usize,
    /// The table spans `[t₁/span, span·t₂]`.
    pub table_span: f64,
    pub sampling: SamplingOptions,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        RegularizeOptions {
            table_nodes: 512,
            table_span: 100.0,
            sampling: SamplingOptions::default(),
        }
    }
}

/// Relative tolerance of the mollifier quadratures.
const QUAD_TOL: f64 = 1e-12;
/// Relative tolerance of the inverse.
const INVERSE_TOL: f64 = 1e-10;

/// The autonomous `φ̃` on one ball.
#[derive(Debug, Clone)]
pub struct RegularizedPhi {
    psi: PsiB,
    ball: Ball,
    thresholds: Thresholds,
    r: f64,
    eta: Mollifier,
    /// `∫ σ^p η_r(σ−1) dσ`: the tails are exact powers scaled by it.
    moment_p: f64,
    table: Vec<Node>,
}

impl RegularizedPhi {
    /// Thresholds, `ψ_B` and mollification for `B_r(x₀)` = `ball`.
    pub fn build(phi: &PhiSpec, ball: &Ball, omega: &ModulusOfContinuity, opts: &RegularizeOptions) -> Result<Self> {
        let th = thresholds(phi, ball, omega, &opts.sampling)?;
        let psi = PsiB::new(phi, &ball.center, th.t1, th.t2)?;
        Self::mollify(psi, ball, th, Mollifier::standard(), opts)
    }

    /// Mollifies `ψ_B` at scale `r` = the radius of `ball`.
    pub fn mollify(psi: PsiB, ball: &Ball, thresholds: Thresholds, eta: Mollifier, opts: &RegularizeOptions) -> Result<Self> {
        let r = ball.radius;
        if opts.table_nodes < 2 || !(opts.table_span > 1.0) {
            return Err(Error::InvalidArgument("table needs at least two nodes and a span above 1".into()));
        }
        let moment_p = eta.moment(psi.p, r)?;
        let mut reg = RegularizedPhi {
            psi,
            ball: ball.clone(),
            thresholds,
            r,
            eta,
            moment_p,
            table: vec![],
        };
        let (t1, t2) = reg.psi.thresholds();
        let lo = if t1 > 0.0 { t1 } else { t2 * 1e-6 } / opts.table_span;
        let hi = t2 * opts.table_span;
        let mut table = Vec::with_capacity(opts.table_nodes);
        for t in logspace(lo, hi, opts.table_nodes) {
            table.push(Node {
                t,
                value: reg.value(t)?,
                deriv: reg.slope(t)?,
                second: reg.second(t)?,
            });
        }
        if let Some(w) = table.windows(2).find(|w| !(w[1].value > w[0].value)) {
            return Err(Error::Construction(format!(
                "regularized table is not increasing near t = {}: inverse ill-conditioned",
                w[0].t
            )));
        }
        reg.table = table;
        Ok(reg)
    }

    pub fn psi_b(&self) -> &PsiB {
        &self.psi
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn table(&self) -> &[Node] {
        &self.table
    }

    pub fn mollifier(&self) -> Mollifier {
        self.eta
    }

    /// The interpolated form used by solvers.
    pub fn tabulated(&self) -> TabulatedPhi {
        TabulatedPhi::new(self)
    }

    /// Below this `φ̃` is the exact lower power tail.
    fn lower_edge(&self) -> f64 {
        self.psi.t1 / (1.0 + self.r)
    }

    /// `∫_0^1 f(1 + r s) η(s) ds`, split where `tσ` crosses a threshold.
    fn average(&self, t: f64, f: impl Fn(f64) -> Result<f64>, weight: impl Fn(f64) -> f64, abs_tol: f64) -> Result<f64> {
        let r = self.r;
        let breaks = [(self.psi.t1 / t - 1.0) / r, (self.psi.t2 / t - 1.0) / r];
        let failure = Cell::new(None);
        let v = integrate_split(
            |s| match f(1.0 + r * s) {
                Ok(v) => v * weight(s),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            },
            0.0,
            1.0,
            &breaks,
            abs_tol,
            QUAD_TOL,
        )?;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    fn value(&self, t: f64) -> Result<f64> {
        let (p, t1, t2) = (self.psi.p, self.psi.t1, self.psi.t2);
        if t == 0.0 {
            return Ok(0.0);
        }
        if t1 > 0.0 && t <= self.lower_edge() {
            return Ok(self.psi.a1 * t1 / p * (t / t1).powf(p) * self.moment_p);
        }
        if t >= t2 {
            let k = self.psi.a2 * t2 / p;
            return Ok(self.psi.phib_t2 - k + k * (t / t2).powf(p) * self.moment_p);
        }
        self.average(t, |sig| self.psi.phi_b(t * sig), |s| self.eta.eval(s), 0.0)
    }

    fn slope(&self, t: f64) -> Result<f64> {
        let (p, t1, t2) = (self.psi.p, self.psi.t1, self.psi.t2);
        if t1 > 0.0 && t <= self.lower_edge() {
            return Ok(self.psi.a1 * (t / t1).powf(p - 1.0) * self.moment_p);
        }
        if t >= t2 {
            return Ok(self.psi.a2 * (t / t2).powf(p - 1.0) * self.moment_p);
        }
        if t == 0.0 {
            return self.psi.psi(0.0);
        }
        self.average(t, |sig| Ok(sig * self.psi.psi(t * sig)?), |s| self.eta.eval(s), 0.0)
    }

    /// `φ̃''(t) = t⁻¹ ∫ σψ_B(tσ) [−2η_r(σ−1) − σ η_r'(σ−1)] dσ`, which needs
    /// no derivative of `ψ_B`.
    fn second(&self, t: f64) -> Result<f64> {
        let (p, t1, t2) = (self.psi.p, self.psi.t1, self.psi.t2);
        if t1 > 0.0 && t <= self.lower_edge() {
            return Ok(self.psi.a1 * (p - 1.0) * t.powf(p - 2.0) / t1.powf(p - 1.0) * self.moment_p);
        }
        if t >= t2 {
            return Ok(self.psi.a2 * (p - 1.0) * t.powf(p - 2.0) / t2.powf(p - 1.0) * self.moment_p);
        }
        let r = self.r;
        // the two terms cancel to O(r); the absolute tolerance is set by
        // the size of the larger one
        let scale = self.psi.psi(t)? * (1.0 + 1.0 / r);
        let v = self.average(
            t,
            |sig| Ok(sig * self.psi.psi(t * sig)?),
            |s| -2.0 * self.eta.eval(s) - (1.0 + r * s) * self.eta.deriv(s) / r,
            1e-13 * scale,
        )?;
        Ok(v / t)
    }

    /// `t φ̃''(t)`, read off the differentiated quadrature.
    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        self.second(t)
    }

    /// `φ̃⁻¹(v)`: exact on the power tails, Newton from the log-log
    /// interpolant of the table elsewhere.
    pub fn inverse_value(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("cannot invert at {v}")));
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        let (p, t1, t2) = (self.psi.p, self.psi.t1, self.psi.t2);
        let first = self.table[0];
        let last = self.table[self.table.len() - 1];
        if t1 > 0.0 && v <= first.value {
            return Ok(t1 * (v * p / (self.psi.a1 * t1 * self.moment_p)).powf(1.0 / p));
        }
        if v >= last.value {
            let k = self.psi.a2 * t2 / p;
            return Ok(t2 * ((v - self.psi.phib_t2 + k) / (k * self.moment_p)).powf(1.0 / p));
        }
        if v < first.value {
            return monotone_inverse(|t| self.value(t), v, Default::default());
        }
        let k = self.table.partition_point(|n| n.value < v).clamp(1, self.table.len() - 1);
        let (a, b) = (self.table[k - 1], self.table[k]);
        if v == b.value {
            return Ok(b.t);
        }
        let w = (v.ln() - a.value.ln()) / (b.value.ln() - a.value.ln());
        let (mut lo, mut hi) = (a.t, b.t);
        let mut t = (a.t.ln() + w * (b.t.ln() - a.t.ln())).exp();
        for _ in 0..100 {
            let f = self.value(t)? - v;
            if f == 0.0 {
                return Ok(t);
            }
            if f > 0.0 {
                hi = t
            } else {
                lo = t
            }
            let d = self.slope(t)?;
            let mut next = t - f / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= INVERSE_TOL * t || hi - lo <= INVERSE_TOL * t {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }
}

impl PhiFn for RegularizedPhi {
    fn dim(&self) -> usize {
        self.ball.dim()
    }

    fn eval(&self, _x: &[f64], t: f64) -> Result<f64> {
        crate::phi::check_t(t)?;
        self.value(t)
    }

    fn deriv(&self, _x: &[f64], t: f64) -> Result<f64> {
        crate::phi::check_t(t)?;
        self.slope(t)
    }

    fn deriv_ratio(&self, _x: &[f64], t: f64) -> Result<f64> {
        let (p, t1) = (self.psi.p, self.psi.t1);
        if t1 > 0.0 && t <= self.lower_edge() {
            return Ok(self.psi.a1 * t.powf(p - 2.0) / t1.powf(p - 1.0) * self.moment_p);
        }
        Ok(self.slope(t)? / t)
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        Some(self.psi.exponents())
    }

    fn inverse(&self, _x: &[f64], s: f64) -> Result<f64> {
        self.inverse_value(s)
    }
}

/// Builds `φ̃` for several balls in parallel.
pub fn build_many(phi: &PhiSpec, balls: &[Ball], omega: &ModulusOfContinuity, opts: &RegularizeOptions) -> Vec<Result<RegularizedPhi>> {
    balls.par_iter().map(|b| RegularizedPhi::build(phi, b, omega, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::ModulusRepr;
    use crate::geometry::{unit_ball_volume, Domain};
    use crate::phi::{Holder, Moduli, PointEnvelope};
    use proptest::prelude::*;

    fn constant_omega(w: f64) -> ModulusOfContinuity {
        ModulusOfContinuity::new(ModulusRepr::Power { c: w, beta: 0.0 })
    }

    fn double_phase() -> PhiSpec {
        PhiSpec::double_phase(2.0, 2.2, "abs(x1)", 2)
            .unwrap()
            .with_moduli(Moduli {
                a: Some(Holder::new(1.0, 1.0)),
                ..Default::default()
            })
            .unwrap()
    }

    fn dp_reg(r: f64) -> (PhiSpec, RegularizedPhi) {
        let phi = double_phase();
        let omega = crate::conditions::closed_form_modulus(&phi, 0.0).unwrap();
        let ball = Ball::new(vec![0.5, 0.0], r).unwrap().clipped(phi.domain()).unwrap();
        let reg = RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()).unwrap();
        (phi, reg)
    }

    #[test]
    fn mollifier_has_unit_mass() {
        let eta = Mollifier::standard();
        let mass = integrate(|s| eta.eval(s), 0.0, 1.0, 0.0, 1e-13).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
        let m1 = eta.moment(1.0, 0.1).unwrap();
        // η is symmetric about 1/2
        assert!((m1 - 1.05).abs() < 1e-12);
    }

    #[test]
    fn power_thresholds() {
        let phi = PhiSpec::power(2.0, 2).unwrap();
        let big = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let env = PointEnvelope::new(&phi, &big).unwrap();
        let th = thresholds_from(&env, 0.01, 0.01).unwrap();
        assert!((th.t1 - 0.1).abs() < 1e-12 && (th.t2 - 10.0).abs() < 1e-12);
        assert!(matches!(thresholds_from(&env, 1.0, 0.01), Err(Error::Precondition(_))));
        assert!(matches!(thresholds_from(&env, 0.01, 1.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn double_phase_thresholds_round_trip() {
        let phi = double_phase();
        let omega = crate::conditions::closed_form_modulus(&phi, 0.0).unwrap();
        let ball = Ball::new(vec![0.5, 0.0], 0.1).unwrap();
        let th = thresholds(&phi, &ball, &omega, &SamplingOptions::default()).unwrap();
        // φ⁻ on B_{0.2}((0.5, 0)) is t² + 0.3 t^{2.2}
        let inf = |t: f64| t * t + 0.3 * t.powf(2.2);
        assert!((inf(th.t1) / omega.eval(0.2) - 1.0).abs() < 1e-9);
        let vol = unit_ball_volume(2) * 0.04;
        assert!((inf(th.t2) * vol - 1.0).abs() < 1e-9);
        assert!(th.t1 <= 1.0 && 1.0 <= th.t2);
    }

    #[test]
    fn power_collapses() {
        let phi = PhiSpec::power(2.5, 2).unwrap();
        let ball = Ball::new(vec![0.0, 0.0], 0.1).unwrap();
        let reg = RegularizedPhi::build(&phi, &ball, &constant_omega(0.01), &RegularizeOptions::default()).unwrap();
        let psi = reg.psi_b();
        for t in logspace(1e-3, 1e3, 25) {
            let exact = t.powf(2.5);
            assert!((psi.phi_b(t).unwrap() / exact - 1.0).abs() < 1e-12);
            assert!((psi.psi(t).unwrap() / (2.5 * t.powf(1.5)) - 1.0).abs() < 1e-12);
            let ratio = reg.eval(&[0.0, 0.0], t).unwrap() / exact;
            assert!(ratio >= 1.0 && ratio <= 1.1f64.powf(2.5));
        }
    }

    #[test]
    fn linear_stub_picks_up_first_moment() {
        // with φ_B(t) = t, φ̃(t) = t ∫σ η_r(σ−1)dσ
        let eta = Mollifier::standard();
        let r = 0.2;
        let m = eta.moment(1.0, r).unwrap() - 1.0;
        let direct = integrate(|s| (1.0 + r * s) * eta.eval(s), 0.0, 1.0, 0.0, 1e-13).unwrap();
        assert!((direct - 1.0 - m).abs() < 1e-13);
        assert!(m > 0.0 && m < r);
    }

    #[test]
    fn double_phase_pieces_are_continuous() {
        let (_, reg) = dp_reg(0.1);
        let psi = reg.psi_b();
        assert!(psi.continuity_residual().unwrap() <= 1e-12);
        let (t1, t2) = psi.thresholds();
        let (p, q) = psi.exponents();
        let offset = (q / p - 1.0) * psi.phi_center(t1).unwrap();
        for t in logspace(t1, t2, 30) {
            let gap = psi.phi_b(t).unwrap() - psi.phi_center(t).unwrap();
            assert!(gap >= -1e-12 * psi.phi_center(t).unwrap() && gap <= offset * (1.0 + 1e-12));
        }
    }

    #[test]
    fn table_derivatives_are_consistent() {
        let (_, reg) = dp_reg(0.1);
        let x = [0.5, 0.0];
        for n in reg.table().iter().step_by(37) {
            let h = 1e-5 * n.t;
            let fd = (reg.eval(&x, n.t + h).unwrap() - reg.eval(&x, n.t - h).unwrap()) / (2.0 * h);
            assert!((fd / n.deriv - 1.0).abs() < 1e-6, "t = {}", n.t);
            let fd2 = (reg.deriv(&x, n.t + h).unwrap() - reg.deriv(&x, n.t - h).unwrap()) / (2.0 * h);
            assert!((fd2 / n.second - 1.0).abs() < 1e-5, "t = {}: {fd2} vs {}", n.t, n.second);
            let ratio = n.t * n.second / n.deriv;
            assert!((1.0 - 1e-6..=1.2 + 1e-6).contains(&ratio));
        }
    }

    #[test]
    fn inverse_round_trip() {
        let (_, reg) = dp_reg(0.05);
        let x = [0.5, 0.0];
        for t in logspace(1e-6, 1e6, 61) {
            let v = reg.eval(&x, t).unwrap();
            let back = reg.inverse_value(v).unwrap();
            assert!((back / t - 1.0).abs() < 1e-9, "{t} -> {back}");
        }
    }

    #[test]
    fn oversized_radius_is_rejected() {
        let phi = double_phase();
        let omega = crate::conditions::closed_form_modulus(&phi, 0.0).unwrap();
        let ball = Ball::new(vec![0.0, 0.0], 0.7).unwrap().clipped(&Domain::unit_box(2)).unwrap();
        assert!(matches!(
            RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn sandwich_holds_for_powers(p in 1.2f64..4.0, r in 0.01f64..0.2, lt in -4.0f64..4.0) {
            let phi = PhiSpec::power(p, 1).unwrap();
            let ball = Ball::new(vec![0.0], r).unwrap();
            let reg = RegularizedPhi::build(&phi, &ball, &constant_omega(0.05), &RegularizeOptions {
                table_nodes: 64,
                ..Default::default()
            }).unwrap();
            let t = 10f64.powf(lt);
            let lower = reg.psi_b().phi_b(t).unwrap();
            let v = reg.eval(&[0.0], t).unwrap();
            prop_assert!(v >= lower * (1.0 - 1e-12));
            prop_assert!(v <= (1.0 + r).powf(p) * lower * (1.0 + 1e-12));
        }
    }
}

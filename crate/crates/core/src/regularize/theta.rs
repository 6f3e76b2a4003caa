//! The transfer function `θ(x, t) = φ(x, φ̃⁻¹(t))^{1+σ}` on `B_r(x₀)`.

use super::RegularizedPhi;
use crate::conditions::{check_a0, check_a1, check_rate_condition, CheckOptions, ConditionReport, RateKind};
use crate::error::{Error, Result};
use crate::geometry::{Ball, Domain};
use crate::numeric::logspace;
use crate::phi::{BallEnvelope, Extremum, PhiFn, PhiSpec, SamplingOptions};

pub struct Theta<'a> {
    phi: &'a PhiSpec,
    reg: &'a RegularizedPhi,
    sigma: f64,
}

impl<'a> Theta<'a> {
    pub fn new(phi: &'a PhiSpec, reg: &'a RegularizedPhi, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::InvalidArgument(format!("sigma must lie in (0, 1), got {sigma}")));
        }
        Ok(Theta { phi, reg, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl PhiFn for Theta<'_> {
    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        crate::phi::check_t(t)?;
        let s = self.reg.inverse_value(t)?;
        Ok(self.phi.eval(x, s)?.powf(1.0 + self.sigma))
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        let (p, q) = self.phi.exponents()?;
        Some((1.0 + self.sigma, q * (1.0 + self.sigma) / p))
    }

    /// `θ±` are `(φ±(φ̃⁻¹(t)))^{1+σ}`, so one inverse serves the whole ball.
    fn envelope<'b>(&'b self, ball: &Ball, opts: &SamplingOptions) -> Result<Box<dyn BallEnvelope + 'b>> {
        Ok(Box::new(ThetaEnvelope {
            inner: self.phi.envelope(ball, opts)?,
            reg: self.reg,
            power: 1.0 + self.sigma,
        }))
    }
}

struct ThetaEnvelope<'a> {
    inner: Box<dyn BallEnvelope + 'a>,
    reg: &'a RegularizedPhi,
    power: f64,
}

impl ThetaEnvelope<'_> {
    fn lift(&self, e: Extremum) -> Extremum {
        Extremum {
            value: e.value.powf(self.power),
            point: e.point,
        }
    }
}

impl BallEnvelope for ThetaEnvelope<'_> {
    fn ball(&self) -> &Ball {
        self.inner.ball()
    }

    fn sup(&self, t: f64) -> Result<Extremum> {
        Ok(self.lift(self.inner.sup(self.reg.inverse_value(t)?)?))
    }

    fn inf(&self, t: f64) -> Result<Extremum> {
        Ok(self.lift(self.inner.inf(self.reg.inverse_value(t)?)?))
    }

    fn inf_inverse(&self, s: f64) -> Result<f64> {
        let tau = self.inner.inf_inverse(s.powf(1.0 / self.power))?;
        self.reg.eval(&[], tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaOptions {
    pub x_points: usize,
    pub t_points: usize,
    /// (A1) radii as fractions of `r`.
    pub radius_fractions: Vec<f64>,
    pub checks: CheckOptions,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions {
            x_points: 64,
            t_points: 97,
            radius_fractions: vec![0.5, 0.25, 0.125],
            checks: CheckOptions {
                balls: 16,
                ..Default::default()
            },
        }
    }
}

/// The four checks on `θ`, plus (A1) of `φ` on the same ball family for
/// comparison (`L̂_θ ≤ L̂_φ²` is expected).
#[derive(Debug, Clone)]
pub struct ThetaChecks {
    pub a0: ConditionReport,
    pub ainc: ConditionReport,
    pub adec: ConditionReport,
    pub a1: ConditionReport,
    pub a1_phi: ConditionReport,
}

impl ThetaChecks {
    pub fn reports(&self) -> [&ConditionReport; 4] {
        [&self.a0, &self.ainc, &self.adec, &self.a1]
    }
}

fn ball_domain(ball: &Ball) -> Result<Domain> {
    let c = &ball.center;
    match c.len() {
        1 => Ok(Domain::Interval {
            a: c[0] - ball.radius,
            b: c[0] + ball.radius,
        }),
        2 => Ok(Domain::Disc {
            center: [c[0], c[1]],
            radius: ball.radius,
        }),
        n => Err(Error::InvalidArgument(format!("unsupported dimension {n}"))),
    }
}

/// (A0), (aInc)_{1+σ}, (aDec)_{q(1+σ)/p} and (A1) of `θ` on `B_r(x₀)`.
pub fn check_theta(theta: &Theta, opts: &ThetaOptions) -> Result<ThetaChecks> {
    let ball = theta.reg.ball();
    let xs = ball.sample(opts.x_points, opts.checks.sampling.offset);
    let table = theta.reg.table();
    let (lo, hi) = (table[0].value, table[table.len() - 1].value);
    let ts = logspace(lo, hi, opts.t_points.max(2));
    let (p, q) = theta
        .phi
        .exponents()
        .ok_or_else(|| Error::Precondition("theta checks need declared exponents".into()))?;
    let s1 = 1.0 + theta.sigma;
    let a0 = check_a0(theta, &xs, &opts.checks)?;
    let ainc = check_rate_condition(theta, RateKind::AInc, s1, &xs, &ts, &opts.checks)?;
    let adec = check_rate_condition(theta, RateKind::ADec, q * s1 / p, &xs, &ts, &opts.checks)?;
    let domain = ball_domain(ball)?;
    let radii: Vec<f64> = opts.radius_fractions.iter().map(|f| f * ball.radius).collect();
    let a1 = check_a1(theta, &domain, &radii, &opts.checks)?;
    let a1_phi = check_a1(theta.phi, &domain, &radii, &opts.checks)?;
    Ok(ThetaChecks {
        a0,
        ainc,
        adec,
        a1,
        a1_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{closed_form_modulus, ModulusOfContinuity, ModulusRepr, Verdict};
    use crate::phi::{Holder, Moduli};
    use crate::regularize::RegularizeOptions;

    #[test]
    fn power_theta_is_a_power() {
        let phi = PhiSpec::power(3.0, 2).unwrap();
        let ball = Ball::new(vec![0.0, 0.0], 0.1).unwrap();
        let omega = ModulusOfContinuity::new(ModulusRepr::Zero);
        let reg = RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()).unwrap();
        let theta = Theta::new(&phi, &reg, 0.25).unwrap();
        let checks = check_theta(&theta, &ThetaOptions::default()).unwrap();
        for rep in checks.reports() {
            assert_eq!(rep.verdict, Verdict::Holds, "{}", rep.summary());
        }
        // θ = (φ ∘ φ̃⁻¹)^{5/4} and φ̃ is within (1.1)^3 of φ
        assert!(checks.ainc.constant.unwrap() < 1.1f64.powf(3.75));
        assert!((checks.a1.constant.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_double_phase_checks() {
        let phi = PhiSpec::double_phase(2.0, 2.2, "abs(x1)", 2)
            .unwrap()
            .with_moduli(Moduli {
                a: Some(Holder::new(1.0, 1.0)),
                ..Default::default()
            })
            .unwrap();
        let omega = closed_form_modulus(&phi, 0.0).unwrap();
        let ball = Ball::new(vec![0.5, 0.0], 0.1).unwrap().clipped(phi.domain()).unwrap();
        let reg = RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()).unwrap();
        let theta = Theta::new(&phi, &reg, 0.25).unwrap();
        for x in [[0.5, 0.0], [0.45, 0.05]] {
            for t in logspace(1e-2, 1e2, 9) {
                let v = theta.eval(&x, reg.eval(&x, t).unwrap()).unwrap();
                let expect = phi.eval(&x, t).unwrap().powf(1.25);
                assert!((v / expect - 1.0).abs() < 1e-8);
            }
        }
        let checks = check_theta(&theta, &ThetaOptions::default()).unwrap();
        for rep in checks.reports() {
            assert_eq!(rep.verdict, Verdict::Holds, "{}", rep.summary());
        }
        let (lt, lp) = (checks.a1.constant.unwrap(), checks.a1_phi.constant.unwrap());
        assert!(lt <= lp * lp * (1.0 + 1e-9));
        assert!(Theta::new(&phi, &reg, 1.0).is_err());
    }
}

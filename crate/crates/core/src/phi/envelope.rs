//! Sup and inf of `φ(·, t)` over balls.

use super::PhiFn;
use crate::error::{Error, Result};
use crate::geometry::Ball;
use crate::numeric::{monotone_inverse, InverseOptions};

/// A sampled extremal value and the point attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub point: Vec<f64>,
}

/// Budget for sampled extremization over a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOptions {
    /// Initial number of quasi-random points; doubled each round.
    pub initial: usize,
    /// Largest point count before giving up.
    pub max: usize,
    /// Successive rounds must agree to this relative tolerance.
    pub rel_tol: f64,
    /// Halton index offset, derived from the run seed.
    pub offset: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            initial: 64,
            max: 1 << 16,
            rel_tol: 1e-6,
            offset: 0,
        }
    }
}

/// Envelope functions `φ⁺_B(t) = sup_{x∈B} φ(x,t)` and `φ⁻_B(t)`.
pub trait BallEnvelope: Send + Sync {
    fn ball(&self) -> &Ball;

    fn sup(&self, t: f64) -> Result<Extremum>;

    fn inf(&self, t: f64) -> Result<Extremum>;

    /// `(φ⁻_B)⁻¹(s)`, the left-continuous inverse of the infimum.
    fn inf_inverse(&self, s: f64) -> Result<f64> {
        monotone_inverse(|t| self.inf(t).map(|e| e.value), s, InverseOptions::default())
    }
}

/// Builds the envelope of `phi` on `ball`, using closed forms when the
/// family allows.
pub fn ball_envelope<'a>(phi: &'a dyn PhiFn, ball: &Ball, opts: &SamplingOptions) -> Result<Box<dyn BallEnvelope + 'a>> {
    phi.envelope(ball, opts)
}

/// Maximizes (or minimizes) `f` over the ball: quasi-random points plus a
/// projected compass search from the best one, doubling the point count
/// until two rounds agree.
pub fn extremize(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    ball: &Ball,
    maximize: bool,
    opts: &SamplingOptions,
) -> Result<Extremum> {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let mut count = opts.initial.max(1);
    let mut prev: Option<Extremum> = None;
    loop {
        let pts = ball.sample(count, opts.offset);
        let mut best: Option<Extremum> = None;
        let mut scale = 0.0f64;
        for p in pts {
            let v = f(&p)?;
            scale = scale.max(v.abs());
            if best.as_ref().map_or(true, |b| better(v, b.value)) {
                best = Some(Extremum { value: v, point: p });
            }
        }
        let best = best.ok_or_else(|| Error::InvalidArgument("ball contains no sample points".into()))?;
        let refined = compass(f, ball, best, maximize)?;
        if let Some(p) = prev {
            let change = (refined.value - p.value).abs();
            let tol = opts.rel_tol * refined.value.abs().max(p.value.abs()) + 1e-14 * scale;
            if change <= tol {
                return Ok(if better(p.value, refined.value) { p } else { refined });
            }
            if count >= opts.max {
                return Err(Error::Unstable { budget: count, change });
            }
        }
        prev = Some(refined);
        count *= 2;
    }
}

fn compass(f: &dyn Fn(&[f64]) -> Result<f64>, ball: &Ball, start: Extremum, maximize: bool) -> Result<Extremum> {
    let mut cur = start;
    let mut step = 0.25 * ball.radius;
    let floor = 1e-15 * ball.radius.max(1.0);
    let n = ball.dim();
    let mut evals = 0;
    while step > floor && evals < 4000 {
        let mut moved = false;
        for i in 0..2 * n {
            let mut cand = cur.point.clone();
            cand[i / 2] += if i % 2 == 0 { step } else { -step };
            ball.project(&mut cand);
            if !ball.contains(&cand) {
                continue;
            }
            let v = f(&cand)?;
            evals += 1;
            if (maximize && v > cur.value) || (!maximize && v < cur.value) {
                cur = Extremum { value: v, point: cand };
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(cur)
}

/// Envelope of an autonomous function: both sides are `φ(t)` at one point.
pub struct PointEnvelope<'a> {
    phi: &'a dyn PhiFn,
    ball: Ball,
    point: Vec<f64>,
}

impl<'a> PointEnvelope<'a> {
    pub fn new(phi: &'a dyn PhiFn, ball: &Ball) -> Result<Self> {
        let point = if ball.contains(&ball.center) {
            ball.center.clone()
        } else {
            ball.sample(1, 0)
                .into_iter()
                .next()
                .ok_or_else(|| Error::InvalidArgument("ball contains no sample points".into()))?
        };
        Ok(PointEnvelope {
            phi,
            ball: ball.clone(),
            point,
        })
    }
}

impl BallEnvelope for PointEnvelope<'_> {
    fn ball(&self) -> &Ball {
        &self.ball
    }

    fn sup(&self, t: f64) -> Result<Extremum> {
        Ok(Extremum {
            value: self.phi.eval(&self.point, t)?,
            point: self.point.clone(),
        })
    }

    fn inf(&self, t: f64) -> Result<Extremum> {
        self.sup(t)
    }

    fn inf_inverse(&self, s: f64) -> Result<f64> {
        self.phi.inverse(&self.point, s)
    }
}

/// Envelope of a family that is monotone in one scalar coefficient: the
/// extremes sit at the coefficient's argmin or argmax over the ball.
pub struct CoefficientEnvelope<'a> {
    phi: &'a dyn PhiFn,
    ball: Ball,
    lo: Extremum,
    hi: Extremum,
}

impl<'a> CoefficientEnvelope<'a> {
    pub fn new(
        phi: &'a dyn PhiFn,
        ball: &Ball,
        coefficient: impl Fn(&[f64]) -> Result<f64>,
        opts: &SamplingOptions,
    ) -> Result<Self> {
        let lo = extremize(&coefficient, ball, false, opts)?;
        let hi = extremize(&coefficient, ball, true, opts)?;
        Ok(CoefficientEnvelope {
            phi,
            ball: ball.clone(),
            lo,
            hi,
        })
    }

    /// Coefficient extremes `(min, max)` over the ball.
    pub fn coefficient_range(&self) -> (&Extremum, &Extremum) {
        (&self.lo, &self.hi)
    }

    fn pair(&self, t: f64) -> Result<(Extremum, Extremum)> {
        let a = Extremum {
            value: self.phi.eval(&self.lo.point, t)?,
            point: self.lo.point.clone(),
        };
        let b = Extremum {
            value: self.phi.eval(&self.hi.point, t)?,
            point: self.hi.point.clone(),
        };
        Ok(if a.value <= b.value { (a, b) } else { (b, a) })
    }
}

impl BallEnvelope for CoefficientEnvelope<'_> {
    fn ball(&self) -> &Ball {
        &self.ball
    }

    fn sup(&self, t: f64) -> Result<Extremum> {
        Ok(self.pair(t)?.1)
    }

    fn inf(&self, t: f64) -> Result<Extremum> {
        Ok(self.pair(t)?.0)
    }
}

/// Envelope by direct sampled extremization of `φ(·, t)` for every `t`.
pub struct SampledEnvelope<'a> {
    phi: &'a dyn PhiFn,
    ball: Ball,
    opts: SamplingOptions,
}

impl<'a> SampledEnvelope<'a> {
    pub fn new(phi: &'a dyn PhiFn, ball: &Ball, opts: SamplingOptions) -> Self {
        SampledEnvelope {
            phi,
            ball: ball.clone(),
            opts,
        }
    }
}

impl BallEnvelope for SampledEnvelope<'_> {
    fn ball(&self) -> &Ball {
        &self.ball
    }

    fn sup(&self, t: f64) -> Result<Extremum> {
        extremize(&|x| self.phi.eval(x, t), &self.ball, true, &self.opts)
    }

    fn inf(&self, t: f64) -> Result<Extremum> {
        extremize(&|x| self.phi.eval(x, t), &self.ball, false, &self.opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::PhiSpec;

    #[test]
    fn autonomous_envelope_is_the_function() {
        let phi = PhiSpec::power(2.5, 2).unwrap();
        let ball = Ball::new(vec![0.2, 0.1], 0.3).unwrap();
        let env = ball_envelope(&phi, &ball, &SamplingOptions::default()).unwrap();
        for t in [0.1f64, 1.0, 7.0] {
            let v = t.powf(2.5);
            assert_eq!(env.sup(t).unwrap().value, v);
            assert_eq!(env.inf(t).unwrap().value, v);
        }
    }

    #[test]
    fn double_phase_envelope_closed_form() {
        let phi = PhiSpec::double_phase(2.0, 3.0, "abs(x1)", 2).unwrap();
        let ball = Ball::new(vec![0.5, 0.0], 0.1).unwrap();
        let env = ball_envelope(&phi, &ball, &SamplingOptions::default()).unwrap();
        assert!((env.sup(1.0).unwrap().value - 1.6).abs() < 1e-12);
        assert!((env.inf(1.0).unwrap().value - 1.4).abs() < 1e-12);
        let w = env.sup(2.0).unwrap();
        assert_eq!(phi.eval(&w.point, 2.0).unwrap(), w.value);
    }

    #[test]
    fn extremize_finds_boundary_maximum() {
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let e = extremize(&|x| Ok(x[0] + 2.0 * x[1]), &ball, true, &SamplingOptions::default()).unwrap();
        assert!((e.value - 5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn extremize_reports_instability() {
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        // poles on a dense family of lines: larger point sets keep finding
        // larger values
        let f = |x: &[f64]| Ok(1.0 / (1e5 * (x[0] + 2f64.sqrt() * x[1])).rem_euclid(1.0));
        let opts = SamplingOptions {
            max: 256,
            ..Default::default()
        };
        let r = extremize(&f, &ball, true, &opts);
        assert!(matches!(r, Err(Error::Unstable { .. })), "{r:?}");
    }
}

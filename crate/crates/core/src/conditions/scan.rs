//! Ball scans for (A1), (VA1) and (wVA1).

use rayon::prelude::*;

use super::{BallForm, Budget, CheckOptions, Condition, ConditionReport, RadiusRow, Verdict, Witness};
use crate::error::{Error, Result};
use crate::geometry::{ball_centers, Ball, Domain};
use crate::numeric::{fit_loglog, golden_max, logspace};
use crate::phi::{BallEnvelope, Extremum, PhiFn};

/// `φ⁺` and `φ⁻` at one `t`.
#[derive(Debug, Clone)]
struct Sample {
    t: f64,
    inf: Extremum,
    sup: Extremum,
}

/// Which quantity a scan maximizes over `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Quantity {
    /// `φ⁺/φ⁻`
    Ratio,
    /// `φ⁺/φ⁻ − 1` clamped to `[0, 1]`
    Excess,
    /// `(φ⁺ − φ⁻)/(φ⁻ + 1)` clamped to `[0, 1]`
    Slack,
}

impl Quantity {
    fn value(self, s: &Sample) -> f64 {
        let (sup, inf) = (s.sup.value, s.inf.value);
        match self {
            Quantity::Ratio => sup / inf,
            Quantity::Excess => {
                if inf > 0.0 {
                    (sup / inf - 1.0).clamp(0.0, 1.0)
                } else if sup > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Quantity::Slack => ((sup - inf) / (inf + 1.0)).clamp(0.0, 1.0),
        }
    }

    fn form(self) -> BallForm {
        match self {
            Quantity::Ratio => BallForm::Ratio,
            Quantity::Excess => BallForm::Multiplicative,
            Quantity::Slack => BallForm::Additive,
        }
    }

    /// The ratio a witness stores (unclamped).
    fn witness_ratio(self, s: &Sample) -> f64 {
        match self {
            Quantity::Slack => (s.sup.value - s.inf.value) / (s.inf.value + 1.0),
            _ => s.sup.value / s.inf.value,
        }
    }
}

/// One ball with its envelope and a log-spaced scan of `t`.
struct BallScan<'a> {
    ball: Ball,
    env: Box<dyn BallEnvelope + 'a>,
    grid: Vec<Sample>,
    t_floor: f64,
    t_top: f64,
}

fn sample(env: &dyn BallEnvelope, t: f64) -> Result<Sample> {
    Ok(Sample {
        t,
        inf: env.inf(t)?,
        sup: env.sup(t)?,
    })
}

fn grid_points(lo: f64, hi: f64, opts: &CheckOptions) -> usize {
    let decades = (hi / lo).log10().max(0.0);
    opts.t_points.max((decades * opts.per_decade as f64).ceil() as usize + 1)
}

impl<'a> BallScan<'a> {
    /// Scans `t` over `φ⁻(t) ∈ [floor, top]`.
    fn new(phi: &'a dyn PhiFn, ball: Ball, floor: f64, top: f64, opts: &CheckOptions) -> Result<Self> {
        let env = phi.envelope(&ball, &opts.sampling)?;
        let t_top = env.inf_inverse(top)?;
        let t_floor = env.inf_inverse(floor)?.min(t_top);
        let grid = if t_floor > 0.0 && t_floor < t_top {
            logspace(t_floor, t_top, grid_points(t_floor, t_top, opts))
                .into_iter()
                .map(|t| sample(env.as_ref(), t))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![sample(env.as_ref(), t_top)?]
        };
        Ok(BallScan {
            ball,
            env,
            grid,
            t_floor,
            t_top,
        })
    }

    /// `sup q(t)` over `φ⁻(t) ∈ [level, top]`: the grid points in range, the
    /// exact lower end, and a golden-section refinement in `ln t` around the
    /// best of them.
    fn sup(&self, q: Quantity, level: f64) -> Result<Option<(f64, Sample)>> {
        let t_lo = if level <= 0.0 {
            self.t_floor
        } else {
            self.env.inf_inverse(level)?.max(self.t_floor)
        };
        if t_lo > self.t_top {
            return Ok(None);
        }
        let first = self.grid.partition_point(|s| s.t < t_lo);
        let mut cands: Vec<Sample> = Vec::with_capacity(self.grid.len() - first + 1);
        if first == self.grid.len() || self.grid[first].t > t_lo {
            cands.push(sample(self.env.as_ref(), t_lo)?);
        }
        cands.extend_from_slice(&self.grid[first..]);
        let (k, best) = cands
            .iter()
            .enumerate()
            .map(|(k, s)| (k, q.value(s)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let mut best_sample = cands[k].clone();
        let mut best_value = best;
        if cands.len() > 1 {
            let a = cands[k.saturating_sub(1)].t.ln();
            let b = cands[(k + 1).min(cands.len() - 1)].t.ln();
            let mut failure = None;
            let (u, v) = golden_max(
                |u| match sample(self.env.as_ref(), u.exp()) {
                    Ok(s) => q.value(&s),
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NEG_INFINITY
                    }
                },
                a,
                b,
                0.0,
                1e-7,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            if v > best_value {
                best_sample = sample(self.env.as_ref(), u.exp())?;
                best_value = q.value(&best_sample);
            }
        }
        Ok(Some((best_value, best_sample)))
    }

    fn witness(&self, q: Quantity, s: &Sample, bound: f64) -> Witness {
        Witness::Ball {
            center: self.ball.center.clone(),
            r: self.ball.radius,
            x: s.sup.point.clone(),
            y: s.inf.point.clone(),
            t: s.t,
            ratio: q.witness_ratio(s),
            bound,
            form: q.form(),
        }
    }

    /// Smallest `ω` with `g(ω) ≤ ω`, where `g(ω)` is the sup of `q` over
    /// `φ⁻ ∈ [ω, top]`. `g` is nonincreasing, so the set of such `ω` is an
    /// interval `[ω*, 1]` found by bisection. The witness sits just below
    /// `ω*`, where the inequality still fails.
    fn fixed_point(&self, q: Quantity, bisections: usize) -> Result<(f64, Option<Witness>)> {
        let g = |w: f64| self.sup(q, w);
        let at_zero = g(0.0)?;
        let Some((v0, s0)) = at_zero else { return Ok((0.0, None)) };
        if v0 <= 0.0 {
            return Ok((0.0, None));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut wit = s0;
        for _ in 0..bisections {
            let mid = 0.5 * (lo + hi);
            match g(mid)? {
                Some((v, s)) if v > mid => {
                    lo = mid;
                    wit = s;
                }
                _ => hi = mid,
            }
        }
        Ok((hi, Some(self.witness(q, &wit, lo))))
    }

    /// Whether `g(ω) ≤ ω` already, so this ball's fixed point is at most `ω`.
    fn settled_at(&self, q: Quantity, w: f64) -> Result<bool> {
        Ok(match self.sup(q, w)? {
            Some((v, _)) => v <= w,
            None => true,
        })
    }
}

fn balls(domain: &Domain, r: f64, opts: &CheckOptions) -> Result<Vec<Ball>> {
    let centers = ball_centers(domain, r, opts.balls, opts.sampling.offset);
    if centers.is_empty() {
        return Err(Error::InvalidArgument(format!("no ball of radius {r} fits in the domain")));
    }
    centers
        .into_iter()
        .map(|c| Ball::new(c, r)?.clipped(domain))
        .collect()
}

fn check_radii(domain: &Domain, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("empty radius grid".into()));
    }
    for &r in radii {
        let b = Ball::new(domain.center(), r)?;
        if b.volume() >= 1.0 {
            return Err(Error::Precondition(format!("|B_r| = {} is not below 1 for r = {r}", b.volume())));
        }
    }
    Ok(())
}

fn is_unstable(e: &Error) -> bool {
    matches!(e, Error::Unstable { .. })
}

/// Per-radius outcome; `Err` only for instabilities, which become
/// inconclusive rows.
type RowResult = std::result::Result<RadiusRow, Error>;

fn a1_row(phi: &dyn PhiFn, domain: &Domain, r: f64, opts: &CheckOptions) -> Result<RowResult> {
    let run = || -> Result<RadiusRow> {
        let family = balls(domain, r, opts)?;
        let results: Vec<Result<Option<(f64, Witness)>>> = family
            .into_par_iter()
            .map(|b| {
                let top = 1.0 / b.volume();
                let scan = BallScan::new(phi, b, 1.0, top, opts)?;
                Ok(scan
                    .sup(Quantity::Ratio, 1.0)?
                    .map(|(v, s)| (v, scan.witness(Quantity::Ratio, &s, opts.l_cap))))
            })
            .collect();
        let mut best = RadiusRow {
            r,
            value: 1.0,
            witness: None,
        };
        for res in results {
            if let Some((v, w)) = res? {
                if best.witness.is_none() || v > best.value {
                    best = RadiusRow {
                        r,
                        value: v,
                        witness: Some(w),
                    };
                }
            }
        }
        Ok(best)
    };
    match run() {
        Ok(row) => Ok(Ok(row)),
        Err(e) if is_unstable(&e) => Ok(Err(e)),
        Err(e) => Err(e),
    }
}

fn modulus_row(phi: &dyn PhiFn, domain: &Domain, r: f64, q: Quantity, top_exp: f64, opts: &CheckOptions) -> Result<RowResult> {
    let run = || -> Result<RadiusRow> {
        let family = balls(domain, r, opts)?;
        let scan = |b: Ball| {
            let top = b.volume().powf(-top_exp);
            BallScan::new(phi, b, opts.omega_floor, top, opts)
        };
        let mut it = family.into_iter();
        let first = scan(it.next().expect("non-empty ball family"))?;
        let (w0, wit0) = first.fixed_point(q, opts.bisections)?;
        drop(first);
        // the fixed point over all balls is the largest per-ball one; balls
        // already settled at the running value cannot raise it
        let rest: Vec<Result<Option<(f64, Option<Witness>)>>> = it
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|b| {
                let s = scan(b)?;
                if s.settled_at(q, w0)? {
                    return Ok(None);
                }
                s.fixed_point(q, opts.bisections).map(Some)
            })
            .collect();
        let mut row = RadiusRow {
            r,
            value: w0,
            witness: wit0,
        };
        for res in rest {
            if let Some((w, wit)) = res? {
                if w > row.value {
                    row = RadiusRow { r, value: w, witness: wit };
                }
            }
        }
        Ok(row)
    };
    match run() {
        Ok(row) => Ok(Ok(row)),
        Err(e) if is_unstable(&e) => Ok(Err(e)),
        Err(e) => Err(e),
    }
}

fn budget(radii: &[f64], opts: &CheckOptions) -> Budget {
    Budget {
        x_points: opts.sampling.initial,
        t_points: opts.t_points,
        balls: opts.balls,
        radii: radii.to_vec(),
    }
}

fn collect_rows(rows: Vec<RowResult>, radii: &[f64]) -> (Vec<RadiusRow>, Option<String>) {
    let mut note = None;
    let rows = rows
        .into_iter()
        .zip(radii)
        .map(|(res, &r)| match res {
            Ok(row) => row,
            Err(e) => {
                note.get_or_insert_with(|| format!("r = {r}: {e}"));
                RadiusRow {
                    r,
                    value: f64::NAN,
                    witness: None,
                }
            }
        })
        .collect();
    (rows, note)
}

/// (A1) over balls of each radius: `sup φ⁺/φ⁻` over `φ⁻ ∈ [1, |B_r|⁻¹]`.
/// Holds when the realized `L̂` stays within `opts.l_cap`.
pub fn check_a1(phi: &dyn PhiFn, domain: &Domain, radii: &[f64], opts: &CheckOptions) -> Result<ConditionReport> {
    check_radii(domain, radii)?;
    let rows = radii
        .iter()
        .map(|&r| a1_row(phi, domain, r, opts))
        .collect::<Result<Vec<_>>>()?;
    let (rows, note) = collect_rows(rows, radii);
    let finite: Vec<&RadiusRow> = rows.iter().filter(|r| r.value.is_finite()).collect();
    let l_hat = finite.iter().map(|r| r.value).fold(1.0, f64::max);
    let worst = finite.iter().filter(|r| r.value == l_hat).find_map(|r| r.witness.clone());
    let verdict = if l_hat > opts.l_cap * (1.0 + opts.slack) {
        Verdict::Fails
    } else if note.is_some() {
        Verdict::Inconclusive
    } else {
        Verdict::Holds
    };
    Ok(ConditionReport {
        condition: Condition::A1,
        verdict,
        constant: Some(l_hat),
        rows,
        modulus_table: vec![],
        holder_rate: None,
        witness: worst,
        budget: budget(radii, opts),
        note,
    })
}

/// Verdict of a modulus table given in radius-grid order (decreasing `r`).
fn modulus_verdict(rows: &[RadiusRow], opts: &CheckOptions) -> Verdict {
    let mut by_r: Vec<&RadiusRow> = rows.iter().collect();
    by_r.sort_by(|a, b| b.r.total_cmp(&a.r));
    let vals: Vec<f64> = by_r.iter().map(|r| r.value).collect();
    let n = vals.len();
    if n >= 3 && vals[n - 3..].iter().all(|v| *v >= 0.5) {
        return Verdict::Fails;
    }
    if vals.iter().any(|v| v.is_nan()) {
        return Verdict::Inconclusive;
    }
    if vals.iter().all(|v| *v == 0.0) {
        return Verdict::Holds;
    }
    let decays = vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + opts.table_slack) + 1e-15);
    let last = vals[n - 1];
    if n >= 2 && decays && last < 0.5 && last < vals[0] {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    }
}

fn modulus_report(condition: Condition, rows: Vec<RadiusRow>, note: Option<String>, radii: &[f64], opts: &CheckOptions) -> ConditionReport {
    let verdict = if note.is_some() && modulus_verdict(&rows, opts) != Verdict::Fails {
        Verdict::Inconclusive
    } else {
        modulus_verdict(&rows, opts)
    };
    // running max from small r upwards makes the table nondecreasing in r
    let mut table: Vec<(f64, f64)> = rows.iter().filter(|r| r.value.is_finite()).map(|r| (r.r, r.value)).collect();
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut run = 0.0f64;
    for e in table.iter_mut() {
        run = run.max(e.1);
        e.1 = run;
    }
    let fit_pts: Vec<(f64, f64)> = table.iter().copied().filter(|(_, w)| *w > 0.0 && *w < 1.0).collect();
    let holder_rate = if fit_pts.len() >= 3 {
        let (rs, ws): (Vec<f64>, Vec<f64>) = fit_pts.into_iter().unzip();
        fit_loglog(&rs, &ws).ok()
    } else {
        None
    };
    let witness = match verdict {
        // the violation at the smallest radius
        Verdict::Fails => rows
            .iter()
            .filter(|r| r.value.is_finite())
            .min_by(|a, b| a.r.total_cmp(&b.r))
            .and_then(|r| r.witness.clone()),
        _ => rows
            .iter()
            .filter(|r| r.value.is_finite())
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .and_then(|r| r.witness.clone()),
    };
    ConditionReport {
        condition,
        verdict,
        constant: None,
        rows,
        modulus_table: table,
        holder_rate,
        witness,
        budget: budget(radii, opts),
        note,
    }
}

/// Fixed-point estimate of the (VA1) modulus: for each radius, the smallest
/// `ω ∈ [0, 1]` with `φ⁺ ≤ (1 + ω)φ⁻` whenever `φ⁻ ∈ [ω, |B_r|⁻¹]`, over
/// every ball of the family. Radii should be decreasing.
pub fn estimate_va1_modulus(phi: &dyn PhiFn, domain: &Domain, radii: &[f64], opts: &CheckOptions) -> Result<ConditionReport> {
    check_radii(domain, radii)?;
    let rows = radii
        .iter()
        .map(|&r| modulus_row(phi, domain, r, Quantity::Excess, 1.0, opts))
        .collect::<Result<Vec<_>>>()?;
    let (rows, note) = collect_rows(rows, radii);
    Ok(modulus_report(Condition::VA1, rows, note, radii, opts))
}

/// (wVA1) with parameter `eps`: the smallest `ω` with
/// `φ⁺ ≤ (1 + ω)φ⁻ + ω` whenever `φ⁻ ∈ [ω, |B_r|^{-1+ε}]`.
pub fn check_wva1(phi: &dyn PhiFn, domain: &Domain, radii: &[f64], eps: f64, opts: &CheckOptions) -> Result<ConditionReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    check_radii(domain, radii)?;
    let rows = radii
        .iter()
        .map(|&r| modulus_row(phi, domain, r, Quantity::Slack, 1.0 - eps, opts))
        .collect::<Result<Vec<_>>>()?;
    let (rows, note) = collect_rows(rows, radii);
    Ok(modulus_report(Condition::WVA1(eps), rows, note, radii, opts))
}

/// (A1), (VA1) and (wVA1) on the same balls, with the implication chain
/// checked at verdict level and per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMatrix {
    pub a1: ConditionReport,
    pub va1: ConditionReport,
    pub wva1: ConditionReport,
    /// Broken implications; empty for a consistent matrix.
    pub chain_violations: Vec<String>,
}

pub fn check_matrix(phi: &dyn PhiFn, domain: &Domain, radii: &[f64], eps: f64, opts: &CheckOptions) -> Result<ConditionMatrix> {
    let a1 = check_a1(phi, domain, radii, opts)?;
    let va1 = estimate_va1_modulus(phi, domain, radii, opts)?;
    let wva1 = check_wva1(phi, domain, radii, eps, opts)?;
    let mut chain = vec![];
    if va1.verdict == Verdict::Holds && wva1.verdict != Verdict::Holds {
        chain.push(format!("VA1 holds but wVA1 {}", wva1.verdict));
    }
    if wva1.verdict == Verdict::Holds && a1.verdict == Verdict::Fails {
        chain.push("wVA1 holds but A1 fails".to_string());
    }
    for ((v, w), a) in va1.rows.iter().zip(&wva1.rows).zip(&a1.rows) {
        if w.value > v.value * (1.0 + 1e-9) + 1e-12 {
            chain.push(format!("r = {}: wVA1 modulus {} exceeds VA1 modulus {}", v.r, w.value, v.value));
        }
        // VA1 with ω ≤ 1 covers the (A1) range, so L̂(r) ≤ 1 + ω̂(r)
        if v.value < 1.0 && a.value > (1.0 + v.value) * (1.0 + 1e-6) {
            chain.push(format!("r = {}: A1 constant {} exceeds 1 + VA1 modulus {}", v.r, a.value, v.value));
        }
    }
    Ok(ConditionMatrix {
        a1,
        va1,
        wva1,
        chain_violations: chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::PhiSpec;

    fn square() -> Domain {
        Domain::Rect {
            x: [-1.0, 1.0],
            y: [-1.0, 1.0],
        }
    }

    fn few() -> CheckOptions {
        CheckOptions {
            balls: 8,
            ..Default::default()
        }
    }

    #[test]
    fn autonomous_modulus_vanishes() {
        let phi = PhiSpec::power(2.5, 2).unwrap();
        let radii = [0.2, 0.1, 0.05];
        let va1 = estimate_va1_modulus(&phi, &square(), &radii, &few()).unwrap();
        assert_eq!(va1.verdict, Verdict::Holds);
        assert!(va1.modulus_table.iter().all(|(_, w)| *w == 0.0));
        let a1 = check_a1(&phi, &square(), &radii, &few()).unwrap();
        assert_eq!(a1.verdict, Verdict::Holds);
        assert!((a1.constant.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_phase_center_ball_modulus() {
        // a = |x1| on the ball at the origin ranges over [0, r]; the excess
        // r t^{0.2} peaks where t² = 1/|B_r|
        let phi = PhiSpec::double_phase(2.0, 2.2, "abs(x1)", 2).unwrap();
        let r = 1e-3;
        let center = CheckOptions {
            balls: 1,
            ..Default::default()
        };
        let row = modulus_row(&phi, &square(), r, Quantity::Excess, 1.0, &center).unwrap().unwrap();
        let expect = std::f64::consts::PI.powf(-0.1) * r.powf(0.8);
        assert!((row.value - expect).abs() < 1e-6 * expect, "{} vs {expect}", row.value);
        let w = row.witness.unwrap();
        assert!(w.violates(&phi).unwrap());
        assert!((w.reproduce(&phi).unwrap() - w.ratio()).abs() < 1e-12 * w.ratio());
    }

    #[test]
    fn radii_must_give_small_balls() {
        let phi = PhiSpec::power(2.0, 2).unwrap();
        assert!(matches!(check_a1(&phi, &square(), &[0.7], &few()), Err(Error::Precondition(_))));
    }

    #[test]
    fn verdict_rules() {
        let rows = |v: &[f64]| -> Vec<RadiusRow> {
            v.iter()
                .enumerate()
                .map(|(k, &value)| RadiusRow {
                    r: 0.5f64.powi(k as i32),
                    value,
                    witness: None,
                })
                .collect()
        };
        let o = CheckOptions::default();
        assert_eq!(modulus_verdict(&rows(&[0.4, 0.2, 0.1]), &o), Verdict::Holds);
        assert_eq!(modulus_verdict(&rows(&[0.9, 0.6, 0.55, 0.5]), &o), Verdict::Fails);
        assert_eq!(modulus_verdict(&rows(&[0.2, 0.3, 0.1]), &o), Verdict::Inconclusive);
        assert_eq!(modulus_verdict(&rows(&[0.0, 0.0]), &o), Verdict::Holds);
    }
}

//! Double-phase parameter sweeps across the regularity threshold
//! `q/p = 1 + β/n`.

use rayon::prelude::*;

use super::{campanato_fit, dyadic_radii, Field, Mode};
use crate::csv::fmt_f64;
use crate::conditions::{check_matrix, CheckOptions, Verdict};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::Domain;
use crate::phi::{Family, Holder, Moduli, PhiSpec};
use crate::solver::{minimize, DiscreteProblem, Grid, SolveOptions};

/// `t^p + a(x) t^q` with `a = |x1|^β`, or `a ≡ 1` when `beta` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p: f64,
    pub q: f64,
    pub beta: Option<f64>,
}

impl SweepPoint {
    pub fn phi(&self, domain: &Domain) -> Result<PhiSpec> {
        let a = match self.beta {
            Some(b) => Expr::parse(&format!("abs(x1)^{b}"))?,
            None => Expr::constant(1.0),
        };
        let spec = PhiSpec::new(Family::DoublePhase { p: self.p, q: self.q, a }, domain.clone())?;
        match self.beta {
            Some(b) => spec.with_moduli(Moduli {
                a: Some(Holder::new(1.0, b)),
                ..Default::default()
            }),
            None => Ok(spec),
        }
    }

    /// `γ₀ = β − n(q − p)/p`; `None` for the autonomous column.
    pub fn predicted_rate(&self, n: usize) -> Option<f64> {
        self.beta.map(|b| b - n as f64 * (self.q - self.p) / self.p)
    }

    pub fn below_threshold(&self, n: usize) -> bool {
        self.beta.map_or(true, |b| self.q / self.p < 1.0 + b / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub domain: Domain,
    pub cells: usize,
    pub boundary: Expr,
    /// Radii of the condition checks.
    pub radii: Vec<f64>,
    /// `ε` of the (wVA1) check.
    pub eps: f64,
    pub checks: CheckOptions,
    pub solve: SolveOptions,
    /// Center of the gradient-Hölder fit.
    pub center: Vec<f64>,
    /// Largest radius of that fit.
    pub fit_radius: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            domain: Domain::unit_box(2),
            cells: 64,
            boundary: Expr::parse("x1 + 0.5*x2").expect("valid expression"),
            radii: vec![0.1, 0.05, 0.025, 0.0125, 0.00625],
            eps: 0.1,
            checks: CheckOptions {
                balls: 16,
                ..Default::default()
            },
            solve: SolveOptions::default(),
            center: vec![0.0, 0.0],
            fit_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub below_threshold: bool,
    pub predicted_rate: Option<f64>,
    pub a1: Option<Verdict>,
    pub va1: Option<Verdict>,
    pub wva1: Option<Verdict>,
    /// Fitted Hölder rate of the VA1 modulus.
    pub rate: Option<f64>,
    /// Campanato exponent of `∇_h u` at the fit center.
    pub alpha_hat: Option<f64>,
    pub max_gradient: Option<f64>,
    pub converged: Option<bool>,
    /// No broken implication in VA1 ⇒ wVA1 ⇒ A1.
    pub chain_ok: Option<bool>,
    /// Failures of this row; the sweep continues past them.
    pub errors: Vec<String>,
}

impl SweepRow {
    /// Columns of [`SweepRow::record`].
    pub const HEADER: [&'static str; 14] = [
        "p",
        "q",
        "beta",
        "below_threshold",
        "predicted_rate",
        "a1",
        "va1",
        "wva1",
        "rate",
        "alpha_hat",
        "max_gradient",
        "converged",
        "chain_ok",
        "error",
    ];

    /// The row as CSV fields; missing values are empty.
    pub fn record(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let flag = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
        let verdict = |v: Option<Verdict>| v.map(|v| v.to_string()).unwrap_or_default();
        vec![
            fmt_f64(self.point.p),
            fmt_f64(self.point.q),
            num(self.point.beta),
            self.below_threshold.to_string(),
            num(self.predicted_rate),
            verdict(self.a1),
            verdict(self.va1),
            verdict(self.wva1),
            num(self.rate),
            num(self.alpha_hat),
            num(self.max_gradient),
            flag(self.converged),
            flag(self.chain_ok),
            self.errors.join("; "),
        ]
    }
}

fn run_point(point: SweepPoint, opts: &SweepOptions) -> SweepRow {
    let n = opts.domain.dim();
    let mut row = SweepRow {
        point,
        below_threshold: point.below_threshold(n),
        predicted_rate: point.predicted_rate(n),
        a1: None,
        va1: None,
        wva1: None,
        rate: None,
        alpha_hat: None,
        max_gradient: None,
        converged: None,
        chain_ok: None,
        errors: vec![],
    };
    let phi = match point.phi(&opts.domain) {
        Ok(p) => p,
        Err(e) => {
            row.errors.push(e.to_string());
            return row;
        }
    };
    match check_matrix(&phi, &opts.domain, &opts.radii, opts.eps, &opts.checks) {
        Ok(m) => {
            row.a1 = Some(m.a1.verdict);
            row.va1 = Some(m.va1.verdict);
            row.wva1 = Some(m.wva1.verdict);
            row.rate = m.va1.holder_rate.map(|f| f.slope);
            row.chain_ok = Some(m.chain_violations.is_empty());
            if !m.chain_violations.is_empty() {
                row.errors.push(m.chain_violations.join("; "));
            }
        }
        Err(e) => row.errors.push(format!("conditions: {e}")),
    }
    let solved = Grid::new(&opts.domain, opts.cells).and_then(|g| {
        let data = &opts.boundary;
        let problem = DiscreteProblem::new(g.clone(), |x| data.eval_at(x), 0.0)?;
        let sol = minimize(&phi, &problem, &opts.solve)?;
        Ok((g, sol))
    });
    match solved {
        Ok((g, sol)) => {
            row.converged = Some(sol.converged);
            let field = Field { grid: &g, values: &sol.u };
            row.max_gradient = Some(g.active_cells().map(|c| field.gradient_norm(c)).fold(0.0, f64::max));
            let radii = dyadic_radii(opts.fit_radius, g.h());
            match campanato_fit(&field, &opts.center, &radii, Mode::Gradient) {
                Ok(est) => row.alpha_hat = Some(est.alpha_hat),
                Err(e) => row.errors.push(format!("fit: {e}")),
            }
        }
        Err(e) => row.errors.push(format!("solve: {e}")),
    }
    row
}

/// One row per point, in input order.
pub fn threshold_sweep(points: &[SweepPoint], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty sweep".into()));
    }
    if opts.center.len() != opts.domain.dim() {
        return Err(Error::InvalidArgument("fit center has the wrong dimension".into()));
    }
    Ok(points.par_iter().map(|p| run_point(*p, opts)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_side_and_rate() {
        let below = SweepPoint {
            p: 2.0,
            q: 2.2,
            beta: Some(1.0),
        };
        assert!(below.below_threshold(2));
        assert!((below.predicted_rate(2).unwrap() - 0.8).abs() < 1e-12);
        let above = SweepPoint { q: 4.0, ..below };
        assert!(!above.below_threshold(2));
        let flat = SweepPoint { beta: None, ..above };
        assert!(flat.below_threshold(2) && flat.predicted_rate(2).is_none());
    }

    #[test]
    fn small_sweep_rows() {
        let opts = SweepOptions {
            cells: 64,
            checks: CheckOptions {
                balls: 4,
                ..Default::default()
            },
            ..Default::default()
        };
        let pts = [
            SweepPoint {
                p: 2.0,
                q: 2.2,
                beta: Some(1.0),
            },
            SweepPoint {
                p: 2.0,
                q: 4.0,
                beta: None,
            },
        ];
        let rows = threshold_sweep(&pts, &opts).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].va1, Some(Verdict::Holds));
        assert_eq!(rows[1].va1, Some(Verdict::Holds));
        assert!(rows.iter().all(|r| r.converged == Some(true) && r.errors.is_empty()), "{rows:?}");
    }
}

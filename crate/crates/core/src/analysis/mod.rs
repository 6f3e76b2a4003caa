//! Decay fits on discrete fields: Campanato and Morrey exponents, gradient
//! proxies, higher integrability and threshold sweeps.
//!
//! Ball quantities are cell averages over the active cells whose centers lie
//! in the ball, with volume `count · hⁿ`.

mod integrability;
mod sweep;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::fit_loglog;
use crate::solver::Grid;

pub use integrability::{higher_integrability_ratio, HigherIntegrability};
pub use sweep::{threshold_sweep, SweepOptions, SweepPoint, SweepRow};

/// Smallest usable radius in cells.
pub const MIN_RADIUS_CELLS: f64 = 4.0;

/// Nodal values on a grid.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub grid: &'a Grid,
    pub values: &'a [f64],
}

impl<'a> Field<'a> {
    pub fn new(grid: &'a Grid, values: &'a [f64]) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(Field { grid, values })
    }

    /// Active cells with centers in `B_ρ(x₀)`, or `None` when the ball
    /// leaves the active region.
    pub fn ball_cells(&self, x0: &[f64], rho: f64) -> Option<Vec<usize>> {
        let g = self.grid;
        let (lo, hi) = g.bounds();
        let (nx, ny) = g.shape();
        let h = g.h();
        let dim = g.dim();
        for k in 0..dim {
            if x0[k] - rho < lo[k] - 1e-12 || x0[k] + rho > hi[k] + 1e-12 {
                return None;
            }
        }
        let span = |k: usize, n: usize| {
            let a = ((x0[k] - rho - lo[k]) / h).floor().max(0.0) as usize;
            let b = (((x0[k] + rho - lo[k]) / h).ceil() as usize).min(n);
            a..b
        };
        let rows = if dim == 1 { 0..1 } else { span(1, ny) };
        let mut out = vec![];
        for j in rows {
            for i in span(0, nx) {
                let c = j * nx + i;
                let x = g.cell_center(c);
                let d2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < rho * rho {
                    if !g.is_active(c) {
                        return None;
                    }
                    out.push(c);
                }
            }
        }
        (!out.is_empty()).then_some(out)
    }

    pub fn gradient_norm(&self, c: usize) -> f64 {
        self.grid.cell_gradient(self.values, c).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `⨍_{B_ρ} |f − (f)_ρ|` for the cell values or the cell gradients.
    fn oscillation(&self, cells: &[usize], mode: Mode) -> f64 {
        let n = cells.len() as f64;
        match mode {
            Mode::Function => {
                let vals: Vec<f64> = cells.iter().map(|&c| self.grid.cell_value(self.values, c)).collect();
                let mean = vals.iter().sum::<f64>() / n;
                vals.iter().map(|v| (v - mean).abs()).sum::<f64>() / n
            }
            Mode::Gradient => {
                let vals: Vec<Vec<f64>> = cells.iter().map(|&c| self.grid.cell_gradient(self.values, c)).collect();
                let dim = self.grid.dim();
                let mean: Vec<f64> = (0..dim).map(|k| vals.iter().map(|v| v[k]).sum::<f64>() / n).collect();
                vals.iter()
                    .map(|v| v.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                    .sum::<f64>()
                    / n
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Function,
    Gradient,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "function" => Ok(Mode::Function),
            "gradient" => Ok(Mode::Gradient),
            _ => Err(Error::InvalidArgument(format!("mode must be `function` or `gradient`, got `{s}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Function => "function",
            Mode::Gradient => "gradient",
        })
    }
}

/// Ball center and largest radius of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub center: Vec<f64>,
    pub max_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub alpha_hat: f64,
    /// RMS residual of the log-log fit.
    pub fit_residual: f64,
    /// Radii used, decreasing.
    pub radii: Vec<f64>,
    /// The fitted quantity at each radius.
    pub values: Vec<f64>,
    pub window: Window,
}

/// `ρ_max 2^{−k}` down to `MIN_RADIUS_CELLS · h`.
pub fn dyadic_radii(rho_max: f64, h: f64) -> Vec<f64> {
    let mut out = vec![];
    let mut r = rho_max;
    while r >= MIN_RADIUS_CELLS * h * (1.0 - 1e-12) && out.len() < 64 {
        out.push(r);
        r *= 0.5;
    }
    out
}

/// Radii that are resolved (`≥ 4h`) and whose balls stay in the active
/// region, sorted decreasing, with their cells.
fn usable(field: &Field, x0: &[f64], radii: &[f64]) -> Result<Vec<(f64, Vec<usize>)>> {
    if x0.len() != field.grid.dim() {
        return Err(Error::InvalidArgument(format!("center has dimension {}", x0.len())));
    }
    let mut rs: Vec<f64> = radii.iter().copied().filter(|r| r.is_finite() && *r > 0.0).collect();
    rs.sort_by(|a, b| b.total_cmp(a));
    rs.dedup();
    let floor = MIN_RADIUS_CELLS * field.grid.h() * (1.0 - 1e-12);
    let out: Vec<(f64, Vec<usize>)> = rs
        .into_iter()
        .filter(|&r| r >= floor)
        .filter_map(|r| field.ball_cells(x0, r).map(|c| (r, c)))
        .collect();
    if out.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 usable radii, got {}", out.len())));
    }
    Ok(out)
}

fn estimate(x0: &[f64], radii: Vec<f64>, values: Vec<f64>) -> Result<HolderEstimate> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("the fitted quantity vanishes at some radius".into()));
    }
    let fit = fit_loglog(&radii, &values)?;
    Ok(HolderEstimate {
        alpha_hat: fit.slope,
        fit_residual: fit.residual,
        window: Window {
            center: x0.to_vec(),
            max_radius: radii[0],
        },
        radii,
        values,
    })
}

/// Slope of `log ⨍_{B_ρ}|f − (f)_ρ|` against `log ρ`.
pub fn campanato_fit(field: &Field, x0: &[f64], radii: &[f64], mode: Mode) -> Result<HolderEstimate> {
    let balls = usable(field, x0, radii)?;
    let values = balls.iter().map(|(_, c)| field.oscillation(c, mode)).collect();
    estimate(x0, balls.into_iter().map(|(r, _)| r).collect(), values)
}

/// Fit of `∫_{B_ρ}|∇u| ~ ρ^{slope}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MorreyFit {
    pub slope: f64,
    /// `n − slope`.
    pub tau: f64,
    /// The Hölder exponent `1 − τ` this decay predicts for `u`.
    pub alpha: f64,
    pub fit_residual: f64,
    pub radii: Vec<f64>,
}

/// Slope of `log ∫_{B_ρ}|∇_h u|` against `log ρ`.
pub fn morrey_decay(field: &Field, x0: &[f64], radii: &[f64]) -> Result<MorreyFit> {
    let balls = usable(field, x0, radii)?;
    let vol = field.grid.cell_volume();
    let values = balls
        .iter()
        .map(|(_, cells)| cells.iter().map(|&c| field.gradient_norm(c)).sum::<f64>() * vol)
        .collect();
    let est = estimate(x0, balls.into_iter().map(|(r, _)| r).collect(), values)?;
    let n = field.grid.dim() as f64;
    Ok(MorreyFit {
        slope: est.alpha_hat,
        tau: n - est.alpha_hat,
        alpha: 1.0 - (n - est.alpha_hat),
        fit_residual: est.fit_residual,
        radii: est.radii,
    })
}

/// `⨍_{B_ρ}|∇_h v|`.
pub fn mean_gradient(field: &Field, x0: &[f64], rho: f64) -> Result<f64> {
    let cells = field
        .ball_cells(x0, rho)
        .ok_or_else(|| Error::InvalidArgument(format!("ball of radius {rho} leaves the grid")))?;
    Ok(cells.iter().map(|&c| field.gradient_norm(c)).sum::<f64>() / cells.len() as f64)
}

/// `sup_{B_{ρ/2}}|∇_h v| / ⨍_{B_ρ}|∇_h v|`.
pub fn lipschitz_proxy(field: &Field, x0: &[f64], rho: f64) -> Result<f64> {
    if rho / 2.0 < MIN_RADIUS_CELLS * field.grid.h() * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("half radius {} is below {MIN_RADIUS_CELLS} cells", rho / 2.0)));
    }
    let mean = mean_gradient(field, x0, rho)?;
    let half = field.ball_cells(x0, rho / 2.0).expect("inside the larger ball");
    let sup = half.iter().map(|&c| field.gradient_norm(c)).fold(0.0, f64::max);
    if !(mean > 0.0) {
        return Err(Error::Fit("gradient vanishes on the ball".into()));
    }
    Ok(sup / mean)
}

/// Exponent `α₀` in `⨍_{B_{τρ}}|Dv − (Dv)_{τρ}| ≲ τ^{α₀} ⨍_{B_ρ}|Dv|`,
/// fitted over the given `τ`. The values are normalized by `⨍_{B_ρ}|Dv|`.
pub fn oscillation_decay(field: &Field, x0: &[f64], rho: f64, taus: &[f64]) -> Result<HolderEstimate> {
    let mean = mean_gradient(field, x0, rho)?;
    let radii: Vec<f64> = taus.iter().map(|t| t * rho).collect();
    let balls = usable(field, x0, &radii)?;
    let values = balls.iter().map(|(_, c)| field.oscillation(c, Mode::Gradient) / mean).collect();
    let taus = balls.iter().map(|(r, _)| r / rho).collect();
    let mut est = estimate(x0, taus, values)?;
    est.window.max_radius = rho;
    Ok(est)
}

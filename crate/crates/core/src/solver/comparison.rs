//! The comparison problem on `B_r`: minimize `∫φ̃(|Dv|)` with `v = u` on
//! `∂B_r`, and the distance between `u` and `v`.

use super::grid::Grid;
use super::minimize::{minimize_from, DiscreteProblem, SolveOptions, SolveResult};
use crate::error::{Error, Result};
use crate::regularize::RegularizedPhi;

/// Cells across the ball below which the comparison is refused.
pub const MIN_CELLS_ACROSS: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct Comparison {
    /// `grid` masked to the cells with centers in `B_r`.
    pub grid: Grid,
    pub solution: SolveResult,
}

/// Solves for `v` on the cells of `grid` inside the regularization ball,
/// with boundary values taken from `u`. `u` itself is the start.
pub fn solve_comparison(grid: &Grid, u: &[f64], reg: &RegularizedPhi, opts: &SolveOptions) -> Result<Comparison> {
    let ball = reg.ball();
    if u.len() != grid.num_nodes() {
        return Err(Error::InvalidArgument("u does not match the grid".into()));
    }
    if 2.0 * ball.radius / grid.h() < MIN_CELLS_ACROSS {
        return Err(Error::Precondition(format!(
            "ball of radius {} spans fewer than {MIN_CELLS_ACROSS} cells of size {}",
            ball.radius,
            grid.h()
        )));
    }
    let inner = grid.restrict(|x| ball.contains(x))?;
    let problem = DiscreteProblem::with_trace(inner.clone(), u, 0.0)?;
    let phi = reg.tabulated();
    let solution = minimize_from(&phi, &problem, u.to_vec(), opts)?;
    Ok(Comparison { grid: inner, solution })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonMetrics {
    /// `⨍ φ̃'(s)/s |Du − Dv|²` with `s = |Du| + |Dv|`.
    pub m2: f64,
    /// `⨍ |Du − Dv|`.
    pub m1: f64,
    /// `⨍ |Du| + 1`.
    pub normalizer: f64,
    /// `m1 / normalizer`.
    pub ratio: f64,
}

/// Cell averages over the active cells of `grid` (the ball grid of a
/// [`Comparison`]).
pub fn comparison_metrics(grid: &Grid, u: &[f64], v: &[f64], reg: &RegularizedPhi, grad_floor: f64) -> Result<ComparisonMetrics> {
    if u.len() != grid.num_nodes() || v.len() != grid.num_nodes() {
        return Err(Error::InvalidArgument("fields do not match the grid".into()));
    }
    let phi = reg.tabulated();
    let (mut m1, mut m2, mut du_sum, mut count) = (0.0, 0.0, 0.0, 0usize);
    for c in grid.active_cells() {
        let du = grid.cell_gradient(u, c);
        let dv = grid.cell_gradient(v, c);
        let nu = du.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv = dv.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff2: f64 = du.iter().zip(&dv).map(|(a, b)| (a - b) * (a - b)).sum();
        let s = nu + nv;
        let s = if s < grad_floor { s + grad_floor } else { s };
        m2 += phi.value_and_ratio(s).1 * diff2;
        m1 += diff2.sqrt();
        du_sum += nu;
        count += 1;
    }
    let n = count as f64;
    let normalizer = du_sum / n + 1.0;
    Ok(ComparisonMetrics {
        m2: m2 / n,
        m1: m1 / n,
        normalizer,
        ratio: m1 / n / normalizer,
    })
}

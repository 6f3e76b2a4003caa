//! Dirichlet problems and their minimization: conjugate descent directions
//! with two-point (secant) steps, backtracked on the energy.

use super::energy::{with_boundary, Energy};
use super::grid::{Grid, NodeKind};
use crate::error::{Error, Result};
use crate::phi::{EpsRegularized, LocalPhi, PhiFn, Profile};

/// A grid with Dirichlet data on its boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProblem {
    pub grid: Grid,
    /// Nodal vector; only boundary entries are read.
    pub boundary: Vec<f64>,
    /// `φ` is replaced by its regularization `φ_ε` when positive.
    pub eps: f64,
}

impl DiscreteProblem {
    pub fn new(grid: Grid, data: impl Fn(&[f64]) -> f64, eps: f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.num_nodes())
            .map(|k| if grid.node_kind(k) == NodeKind::Boundary { data(&grid.node(k)) } else { 0.0 })
            .collect();
        Self::with_trace(grid, &values, eps)
    }

    /// Boundary data read from another nodal field on the same grid.
    pub fn with_trace(grid: Grid, field: &[f64], eps: f64) -> Result<Self> {
        if field.len() != grid.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "trace has {} values for {} nodes",
                field.len(),
                grid.num_nodes()
            )));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be nonnegative, got {eps}")));
        }
        let boundary = with_boundary(&grid, field);
        if grid.boundary_nodes().iter().any(|&k| !boundary[k].is_finite()) {
            return Err(Error::InvalidArgument("boundary values must be finite".into()));
        }
        Ok(DiscreteProblem { grid, boundary, eps })
    }

    pub fn max_boundary(&self) -> f64 {
        self.grid.boundary_nodes().iter().fold(0.0f64, |m, &k| m.max(self.boundary[k].abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative energy decrease over `window` iterations.
    pub tol_e: f64,
    pub window: usize,
    /// Euler–Lagrange residual target; `None` means `1e-8 (1 + max|data|)`.
    pub tol_el: Option<f64>,
    pub max_iter: usize,
    /// Below this gradient size `φ'(t)/t` is taken at `t + grad_floor`.
    pub grad_floor: f64,
    /// Start from the quadratic (p = 2) minimizer.
    pub quadratic_start: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_e: 1e-12,
            window: 10,
            tol_el: None,
            max_iter: 200_000,
            grad_floor: 1e-10,
            quadratic_start: true,
        }
    }
}

impl SolveOptions {
    pub fn el_target(&self, problem: &DiscreteProblem) -> f64 {
        self.tol_el.unwrap_or(1e-8 * (1.0 + problem.max_boundary()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: Vec<f64>,
    /// Energy at the start and after every accepted step.
    pub energy_trajectory: Vec<f64>,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn energy(&self) -> f64 {
        *self.energy_trajectory.last().expect("trajectory starts with the initial energy")
    }
}

/// Relative slack for accepting a step whose energy change is lost in
/// round-off, provided the directional derivative has dropped by half.
const ROUNDOFF: f64 = 1e-13;
const ARMIJO: f64 = 1e-4;

/// The discrete harmonic extension of the boundary data (conjugate
/// gradients on the quadratic energy).
pub fn quadratic_start(problem: &DiscreteProblem) -> Result<Vec<f64>> {
    let half = LocalPhi::new(&[(1.0, Profile::Power { p: 2.0 })]);
    let quad = Autonomous(half, problem.grid.dim());
    let e = Energy::new(&quad, &problem.grid, 0.0)?;
    let n = problem.boundary.len();
    let interior = e.interior().to_vec();
    let mut u = problem.boundary.clone();
    let mut g = vec![0.0; n];
    e.value_and_gradient(&u, &mut g)?;
    // the energy is quadratic: A d = ∇E(u + d) − ∇E(u)
    let zero = vec![0.0; n];
    let apply = |d: &[f64], out: &mut [f64]| -> Result<()> {
        let mut shifted = zero.clone();
        for &i in &interior {
            shifted[i] = d[i];
        }
        e.value_and_gradient(&shifted, out)?;
        Ok(())
    };
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut d = r.clone();
    let mut ad = vec![0.0; n];
    let dot = |a: &[f64], b: &[f64]| interior.iter().map(|&i| a[i] * b[i]).sum::<f64>();
    let mut rr = dot(&r, &r);
    let stop = rr * 1e-30;
    for _ in 0..(10 * interior.len()).max(100) {
        if rr <= stop || rr == 0.0 {
            break;
        }
        apply(&d, &mut ad)?;
        let alpha = rr / dot(&d, &ad);
        for &i in &interior {
            u[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for &i in &interior {
            d[i] = r[i] + beta * d[i];
        }
    }
    Ok(u)
}

/// `LocalPhi` as an autonomous Φ-function.
struct Autonomous(LocalPhi, usize);

impl PhiFn for Autonomous {
    fn dim(&self) -> usize {
        self.1
    }

    fn eval(&self, _x: &[f64], t: f64) -> Result<f64> {
        Ok(self.0.eval(t))
    }

    fn deriv(&self, _x: &[f64], t: f64) -> Result<f64> {
        Ok(self.0.deriv(t))
    }

    fn deriv_ratio(&self, _x: &[f64], t: f64) -> Result<f64> {
        Ok(self.0.deriv_ratio(t))
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Minimizes `Σ φ(x, |∇u|)` with the problem's boundary data.
pub fn minimize(phi: &dyn PhiFn, problem: &DiscreteProblem, opts: &SolveOptions) -> Result<SolveResult> {
    let start = if opts.quadratic_start {
        quadratic_start(problem)?
    } else {
        problem.boundary.clone()
    };
    minimize_from(phi, problem, start, opts)
}

/// As [`minimize`], from a given initial field (boundary entries are
/// overwritten with the data).
pub fn minimize_from(phi: &dyn PhiFn, problem: &DiscreteProblem, start: Vec<f64>, opts: &SolveOptions) -> Result<SolveResult> {
    if problem.eps > 0.0 {
        let reg = EpsRegularized::new(phi, problem.eps)?;
        return descend(&reg, problem, start, opts);
    }
    descend(phi, problem, start, opts)
}

fn descend(phi: &dyn PhiFn, problem: &DiscreteProblem, mut u: Vec<f64>, opts: &SolveOptions) -> Result<SolveResult> {
    let grid = &problem.grid;
    if u.len() != grid.num_nodes() {
        return Err(Error::InvalidArgument("initial field has the wrong length".into()));
    }
    for k in grid.boundary_nodes() {
        u[k] = problem.boundary[k];
    }
    let e = Energy::new(phi, grid, opts.grad_floor)?;
    let interior = e.interior().to_vec();
    let dim = grid.dim();
    let target = opts.el_target(problem);
    let dot = |a: &[f64], b: &[f64]| interior.iter().map(|&i| a[i] * b[i]).sum::<f64>();

    let mut g = vec![0.0; u.len()];
    let mut energy = e.value_and_gradient(&u, &mut g)?;
    let mut residual = e.residual(&g, dim);
    let mut trajectory = vec![energy];
    let settled = |traj: &[f64]| {
        let k = traj.len() - 1;
        if k == 0 {
            return true;
        }
        let back = traj[k.saturating_sub(opts.window)];
        let last = traj[k];
        back - last <= opts.tol_e * last.abs().max(f64::MIN_POSITIVE)
    };
    let mut converged = residual <= target && settled(&trajectory);

    let n = u.len();
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut gg = dot(&g, &g);
    // a Jacobi-sized first step: the stiffness scales like h^{n−2}
    let mut alpha = grid.h().powi(2 - dim as i32) * 0.25;
    let mut restarted = true;
    let mut since_restart = 0;
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let mut g_cand = vec![0.0; n];
    let mut iterations = 0;
    let step = |a: f64, d: &[f64], u: &[f64], out: &mut [f64]| {
        out.copy_from_slice(u);
        for &i in &interior {
            out[i] += a * d[i];
        }
    };

    while !converged && iterations < opts.max_iter {
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            for &i in &interior {
                d[i] = -g[i];
            }
            slope = -gg;
            restarted = true;
            since_restart = 0;
        }
        // two-point (secant) step on the directional derivative
        step(alpha, &d, &u, &mut trial);
        let e_trial = e.value_and_gradient(&trial, &mut g_trial)?;
        let slope_trial = dot(&g_trial, &d);
        let mut a = if e_trial.is_finite() && slope_trial > slope {
            alpha * (-slope) / (slope_trial - slope)
        } else {
            0.5 * alpha
        };
        if !(a > 0.0) || !a.is_finite() {
            a = 0.5 * alpha;
        }
        let accept = |ec: f64, gc: &[f64], a: f64| {
            ec.is_finite() && (ec <= energy + ARMIJO * a * slope || (ec <= energy + ROUNDOFF * energy.abs() && dot(gc, &d).abs() <= 0.5 * slope.abs()))
        };
        let mut found = None;
        if (a / alpha - 1.0).abs() < 1e-3 && accept(e_trial, &g_trial, alpha) {
            found = Some((alpha, e_trial, true));
        } else {
            for _ in 0..60 {
                step(a, &d, &u, &mut cand);
                let ec = e.value_and_gradient(&cand, &mut g_cand)?;
                if accept(ec, &g_cand, a) {
                    found = Some((a, ec, false));
                    break;
                }
                if accept(e_trial, &g_trial, alpha) && e_trial <= ec {
                    found = Some((alpha, e_trial, true));
                    break;
                }
                a *= 0.5;
            }
        }
        let Some((a, ec, from_trial)) = found else {
            if restarted {
                break;
            }
            // lost descent along the conjugate direction: retry steepest
            d.iter_mut().for_each(|v| *v = 0.0);
            continue;
        };
        if from_trial {
            std::mem::swap(&mut u, &mut trial);
            std::mem::swap(&mut g_trial, &mut g_cand);
            std::mem::swap(&mut g, &mut g_cand);
        } else {
            std::mem::swap(&mut u, &mut cand);
            std::mem::swap(&mut g, &mut g_cand);
        }
        // g_cand now holds the previous gradient
        let gg_new = dot(&g, &g);
        let beta = if since_restart + 1 >= interior.len().max(1) {
            0.0
        } else {
            ((gg_new - dot(&g, &g_cand)) / gg).max(0.0)
        };
        let slope_prev = slope;
        for &i in &interior {
            d[i] = -g[i] + beta * d[i];
        }
        restarted = beta == 0.0;
        since_restart = if restarted { 0 } else { since_restart + 1 };
        let slope_next = dot(&g, &d);
        alpha = if slope_next < 0.0 { a * slope_prev / slope_next } else { a };
        gg = gg_new;
        energy = ec.min(energy);
        iterations += 1;
        trajectory.push(energy);
        residual = e.residual(&g, dim);
        converged = residual <= target && settled(&trajectory);
    }
    Ok(SolveResult {
        u,
        energy_trajectory: trajectory,
        el_residual: residual,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::geometry::Domain;
    use crate::phi::{Family, PhiSpec};
    use proptest::prelude::*;

    fn interval(n: usize) -> Grid {
        Grid::new(&Domain::Interval { a: 0.0, b: 1.0 }, n).unwrap()
    }

    #[test]
    fn power_energies_keep_linear_data() {
        for p in [1.5, 2.0, 3.0] {
            let g = interval(64);
            let problem = DiscreteProblem::new(g.clone(), |x| 2.0 * x[0] - 0.5, 0.0).unwrap();
            let phi = PhiSpec::power(p, 1).unwrap();
            let sol = minimize(&phi, &problem, &SolveOptions::default()).unwrap();
            assert!(sol.converged);
            for k in 0..g.num_nodes() {
                assert!((sol.u[k] - (2.0 * g.node(k)[0] - 0.5)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn weighted_quadratic_energy() {
        let phi = PhiSpec::new(
            Family::Perturbed {
                a: Expr::parse("1 + x1").unwrap(),
                profile: Profile::Power { p: 2.0 },
                nu: None,
                lambda: None,
            },
            Domain::Interval { a: 0.0, b: 1.0 },
        )
        .unwrap();
        let g = interval(128);
        let problem = DiscreteProblem::new(g.clone(), |x| x[0], 0.0).unwrap();
        let sol = minimize(&phi, &problem, &SolveOptions::default()).unwrap();
        assert!(sol.converged, "{}", sol.el_residual);
        assert!((sol.energy() - 1.0 / 2f64.ln()).abs() < 1e-4);
        let w = sol.energy_trajectory.windows(2).all(|w| w[1] <= w[0] * (1.0 + ROUNDOFF));
        assert!(w);
    }

    #[test]
    fn p_laplacian_on_a_square_descends() {
        let g = Grid::new(&Domain::unit_box(2), 16).unwrap();
        let problem = DiscreteProblem::new(g, |x| x[0] * x[0] - x[1], 0.0).unwrap();
        let phi = PhiSpec::power(3.0, 2).unwrap();
        let sol = minimize(&phi, &problem, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.el_residual <= 1e-8 * 2.0);
        assert!(sol.energy_trajectory.windows(2).all(|w| w[1] <= w[0] * (1.0 + ROUNDOFF)));
    }

    #[test]
    fn eps_regularization_needs_autonomy() {
        let g = Grid::new(&Domain::unit_box(2), 8).unwrap();
        let problem = DiscreteProblem::new(g, |x| x[0], 1e-3).unwrap();
        let dp = PhiSpec::double_phase(2.0, 3.0, "abs(x1)", 2).unwrap();
        assert!(minimize(&dp, &problem, &SolveOptions::default()).is_err());
        let pw = PhiSpec::power(1.5, 2).unwrap();
        let sol = minimize(&pw, &problem, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn energy_is_convex(seed in 0u64..1000, theta in prop::sample::select(vec![0.25, 0.5, 0.75])) {
            use rand::{Rng, SeedableRng};
            let g = Grid::new(&Domain::unit_box(2), 6).unwrap();
            let phi = PhiSpec::double_phase(1.5, 3.0, "abs(x1)", 2).unwrap();
            let e = Energy::new(&phi, &g, 1e-10).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..g.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..g.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mix: Vec<f64> = u.iter().zip(&w).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
            let lhs = e.value(&mix).unwrap();
            let rhs = theta * e.value(&u).unwrap() + (1.0 - theta) * e.value(&w).unwrap();
            prop_assert!(lhs <= rhs + 1e-10);
        }
    }
}

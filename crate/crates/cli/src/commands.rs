//! The subcommands. Each returns the report lines and CSV tables to write;
//! a numeric failure after partial work still carries its artifacts.

use musielak::analysis::{
    campanato_fit, dyadic_radii, higher_integrability_ratio, morrey_decay, threshold_sweep, Field, Mode, SweepOptions, SweepPoint,
    SweepRow,
};
use musielak::conditions::{
    check_a0, check_matrix, check_rate_condition, classify_regularity, closed_form_modulus, CheckOptions, ConditionReport, RateKind,
};
use musielak::csv::{fmt_f64, Table};
use musielak::geometry::{domain_samples, Ball, Domain};
use musielak::numeric::logspace;
use musielak::phi::{PhiFn, SamplingOptions};
use musielak::regularize::{check_theta, verify_approx, RegularizeOptions, RegularizedPhi, Theta, ThetaOptions};
use musielak::solver::{comparison_metrics, minimize, solve_comparison, DiscreteProblem, Grid, SolveOptions, SolveResult};

use crate::config::{ConfigError, RunConfig, SolveConfig};

#[derive(Debug)]
pub enum Failure {
    /// Exit code 2.
    Validation(String),
    /// Exit code 3.
    Numeric(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.0)
    }
}

impl From<musielak::Error> for Failure {
    fn from(e: musielak::Error) -> Self {
        use musielak::Error as E;
        match e {
            E::Parse { .. } | E::InvalidArgument(_) | E::OutsideDomain { .. } | E::BadCoefficient { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Default)]
pub struct Artifacts {
    pub report: Vec<String>,
    pub tables: Vec<(String, Table)>,
    /// Set when the run produced artifacts but did not succeed.
    pub failure: Option<String>,
}

impl Artifacts {
    fn line(&mut self, s: impl Into<String>) {
        self.report.push(s.into());
    }

    fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }
}

fn sampling(cfg: &RunConfig) -> SamplingOptions {
    SamplingOptions {
        offset: cfg.seed,
        ..Default::default()
    }
}

fn header(cfg: &RunConfig, command: &str) -> Artifacts {
    let mut a = Artifacts::default();
    a.line(format!("command: {command}"));
    a.line(format!("family: {}", cfg.phi.family().name()));
    if let Some((p, q)) = cfg.phi.exponents() {
        a.line(format!("exponents: p = {p}, q = {q}"));
    }
    a.line(format!("seed: {}", cfg.seed));
    a
}

pub fn check(cfg: &RunConfig, eps: Option<f64>) -> Result<Artifacts, Failure> {
    let phi = &cfg.phi;
    let c = &cfg.check;
    let eps = eps.unwrap_or(c.eps);
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Failure::Validation(format!("--eps must lie in (0, 1), got {eps}")));
    }
    let opts = CheckOptions {
        balls: c.balls,
        l_cap: c.l_cap,
        sampling: sampling(cfg),
        ..Default::default()
    };
    let domain = phi.domain();
    let xs = domain_samples(domain, c.x_points, cfg.seed);
    let ts = logspace(c.t_range[0], c.t_range[1], c.t_points);
    let radii = c.radii.clone().unwrap_or_else(|| (0..5).map(|k| 0.1 * 0.5f64.powi(k)).collect());
    let (p, q) = phi
        .exponents()
        .ok_or_else(|| Failure::Validation("check needs declared growth exponents".into()))?;

    let mut out = header(cfg, "check");
    let mut reports: Vec<ConditionReport> = vec![
        check_a0(phi, &xs, &opts)?,
        check_rate_condition(phi, RateKind::AInc, p, &xs, &ts, &opts)?,
        check_rate_condition(phi, RateKind::ADec, q, &xs, &ts, &opts)?,
    ];
    let matrix = check_matrix(phi, domain, &radii, eps, &opts)?;
    reports.extend([matrix.a1.clone(), matrix.va1.clone(), matrix.wva1.clone()]);
    for r in &reports {
        out.line(r.summary());
    }
    if matrix.chain_violations.is_empty() {
        out.line("implication chain VA1 => wVA1 => A1: consistent");
    } else {
        out.line(format!("implication chain violated: {}", matrix.chain_violations.join("; ")));
    }
    match classify_regularity(&reports) {
        Ok(reg) => out.line(match reg.rate {
            Some(rate) => format!("predicted regularity: {} (modulus rate {rate:.3})", reg.class),
            None => format!("predicted regularity: {}", reg.class),
        }),
        Err(e) => out.line(format!("predicted regularity: unavailable ({e})")),
    }
    match closed_form_modulus(phi, 0.0) {
        Ok(m) => out.line(format!("closed-form modulus: {:?}, class {}", m.repr, m.predicted_class())),
        Err(e) => out.line(format!("closed-form modulus: unavailable ({e})")),
    }

    let mut summary = Table::new(&["condition", "verdict", "constant", "rate"]);
    let mut modulus = Table::new(&["condition", "r", "value"]);
    let mut witnesses = Table::new(&["condition", "t", "ratio", "bound", "x", "y"]);
    for r in &reports {
        summary.push_fields(vec![
            r.condition.to_string(),
            r.verdict.to_string(),
            r.constant.map(fmt_f64).unwrap_or_default(),
            r.holder_rate.map(|f| fmt_f64(f.slope)).unwrap_or_default(),
        ]);
        for row in &r.rows {
            modulus.push_fields(vec![r.condition.to_string(), fmt_f64(row.r), fmt_f64(row.value)]);
        }
        if let Some(w) = &r.witness {
            let (t, ratio, bound, x, y) = w.csv_fields();
            let join = |v: &[f64]| v.iter().map(|a| fmt_f64(*a)).collect::<Vec<_>>().join(" ");
            witnesses.push_fields(vec![r.condition.to_string(), fmt_f64(t), fmt_f64(ratio), fmt_f64(bound), join(&x), join(&y)]);
        }
    }
    out.table("conditions.csv", summary);
    out.table("modulus.csv", modulus);
    out.table("witnesses.csv", witnesses);
    Ok(out)
}

fn center_or(domain: &Domain, c: &Option<Vec<f64>>) -> Vec<f64> {
    c.clone().unwrap_or_else(|| domain.center())
}

pub fn regularize(cfg: &RunConfig, r: f64) -> Result<Artifacts, Failure> {
    if !(r > 0.0) {
        return Err(Failure::Validation(format!("--r must be positive, got {r}")));
    }
    let phi = &cfg.phi;
    let rc = &cfg.regularize;
    let x0 = center_or(phi.domain(), &rc.center);
    let ball = Ball::new(x0, r)?.clipped(phi.domain())?;
    let omega = closed_form_modulus(phi, 0.0)?;
    let opts = RegularizeOptions {
        table_nodes: rc.table_nodes,
        sampling: sampling(cfg),
        ..Default::default()
    };
    let reg = RegularizedPhi::build(phi, &ball, &omega, &opts)?;
    let mut out = header(cfg, "regularize");
    let th = reg.thresholds();
    out.line(format!("ball: center {:?}, r = {r}", ball.center));
    out.line(format!("omega(2r) = {}", fmt_f64(th.omega_2r)));
    out.line(format!("thresholds: t1 = {}, t2 = {}", fmt_f64(th.t1), fmt_f64(th.t2)));

    let table = reg.table();
    let ts = logspace(table[0].t, table[table.len() - 1].t, rc.csv_points.max(2));
    let mut csv = Table::new(&["t", "phi_tilde", "dphi_tilde"]);
    for &t in &ts {
        csv.push(&[t, reg.eval(&[], t)?, reg.deriv(&[], t)?]);
    }
    out.table("phi_tilde.csv", csv);

    match verify_approx(&reg, phi, rc.t_samples, rc.x_samples) {
        Ok(rep) => {
            out.line(format!("continuity residual: {}", fmt_f64(rep.continuity_residual)));
            out.line(format!("sandwich: min phi~/phi_B = {}, max phi~/((1+r)^q phi_B) = {}", fmt_f64(rep.sandwich.0), fmt_f64(rep.sandwich.1)));
            out.line(format!("closeness: floor {}, constant {}", fmt_f64(rep.closeness_floor), fmt_f64(rep.closeness_constant)));
            out.line(format!("phi~'(1) = {}", fmt_f64(rep.derivative_at_one)));
            out.line(format!("t phi~''/phi~' in [{}, {}]", fmt_f64(rep.second_ratio.0), fmt_f64(rep.second_ratio.1)));
        }
        Err(e) => {
            out.line(format!("approximation checks: {e}"));
            out.failure = Some(e.to_string());
            return Ok(out);
        }
    }
    if phi.is_autonomous() {
        out.line("theta checks: skipped for autonomous phi");
    } else {
        let theta = Theta::new(phi, &reg, rc.sigma)?;
        let mut topts = ThetaOptions::default();
        topts.checks.sampling = sampling(cfg);
        let checks = check_theta(&theta, &topts)?;
        for rep in checks.reports() {
            out.line(format!("theta {}", rep.summary()));
        }
    }
    Ok(out)
}

fn solve_options(s: &SolveConfig) -> SolveOptions {
    SolveOptions {
        tol_e: s.tol_e,
        window: s.window,
        tol_el: s.tol_el,
        max_iter: s.max_iter,
        grad_floor: s.grad_floor,
        quadratic_start: true,
    }
}

fn field_table(grid: &Grid, u: &[f64], name: &str) -> Table {
    let mut t = if grid.dim() == 1 { Table::new(&["x", name]) } else { Table::new(&["x", "y", name]) };
    for k in 0..grid.num_nodes() {
        if grid.node_kind(k) != musielak::solver::NodeKind::Outside {
            let mut row = grid.node(k);
            row.push(u[k]);
            t.push(&row);
        }
    }
    t
}

fn gradient_table(grid: &Grid, u: &[f64]) -> Table {
    let field = Field { grid, values: u };
    let mut t = if grid.dim() == 1 {
        Table::new(&["x", "grad_norm"])
    } else {
        Table::new(&["x", "y", "grad_norm"])
    };
    for c in grid.active_cells() {
        let mut row = grid.cell_center(c);
        row.push(field.gradient_norm(c));
        t.push(&row);
    }
    t
}

fn solve_report(out: &mut Artifacts, sol: &SolveResult, label: &str) {
    out.line(format!(
        "{label}: energy {}, iterations {}, el_residual {}, converged {}",
        fmt_f64(sol.energy()),
        sol.iterations,
        fmt_f64(sol.el_residual),
        sol.converged
    ));
    if !sol.converged {
        out.failure = Some(format!("{label} did not converge"));
    }
}

fn solve_on_domain(cfg: &RunConfig) -> Result<(Grid, SolveResult), Failure> {
    let s = cfg.solve_block()?;
    let grid = Grid::new(cfg.phi.domain(), cfg.grid.cells)?;
    let problem = DiscreteProblem::new(grid.clone(), |x| s.boundary.eval_at(x), s.eps)?;
    let sol = minimize(&cfg.phi, &problem, &solve_options(s))?;
    Ok((grid, sol))
}

pub fn solve(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let (grid, sol) = solve_on_domain(cfg)?;
    let mut out = header(cfg, "solve");
    out.line(format!("grid: {} nodes, h = {}", grid.num_nodes(), fmt_f64(grid.h())));
    solve_report(&mut out, &sol, "solve");
    let mut energy = Table::new(&["iteration", "energy"]);
    for (k, e) in sol.energy_trajectory.iter().enumerate() {
        energy.push_fields(vec![k.to_string(), fmt_f64(*e)]);
    }
    out.table("field.csv", field_table(&grid, &sol.u, "u"));
    out.table("gradient.csv", gradient_table(&grid, &sol.u));
    out.table("energy.csv", energy);
    Ok(out)
}

pub fn compare(cfg: &RunConfig, r: f64) -> Result<Artifacts, Failure> {
    if !(r > 0.0) {
        return Err(Failure::Validation(format!("--r must be positive, got {r}")));
    }
    let phi = &cfg.phi;
    let s = cfg.solve_block()?;
    if phi.domain().dim() != 2 {
        return Err(Failure::Validation("compare needs a 2D domain".into()));
    }
    let x0 = center_or(phi.domain(), &cfg.compare.center);
    let outer = Ball::new(x0.clone(), 2.0 * r)?;
    for probe in [[2.0 * r, 0.0], [-2.0 * r, 0.0], [0.0, 2.0 * r], [0.0, -2.0 * r]] {
        let p = [x0[0] + probe[0], x0[1] + probe[1]];
        if !phi.domain().contains(&p) {
            return Err(Failure::Validation(format!("B_2r around {x0:?} leaves the domain")));
        }
    }
    let disc = Domain::Disc {
        center: [x0[0], x0[1]],
        radius: outer.radius,
    };
    let grid = Grid::new(&disc, 4 * cfg.compare.cells_per_radius)?;
    let opts = solve_options(s);
    let problem = DiscreteProblem::new(grid.clone(), |x| s.boundary.eval_at(x), 0.0)?;
    let u = minimize(phi, &problem, &opts)?;
    let mut out = header(cfg, "compare");
    solve_report(&mut out, &u, "u on B_2r");
    let omega = closed_form_modulus(phi, 0.0)?;
    let ball = Ball::new(x0, r)?;
    let reg = RegularizedPhi::build(
        phi,
        &ball,
        &omega,
        &RegularizeOptions {
            sampling: sampling(cfg),
            ..Default::default()
        },
    )?;
    let cmp = solve_comparison(&grid, &u.u, &reg, &opts)?;
    solve_report(&mut out, &cmp.solution, "v on B_r");
    let m = comparison_metrics(&cmp.grid, &u.u, &cmp.solution.u, &reg, s.grad_floor)?;
    out.line(format!("M1 = {}, M2 = {}, normalizer = {}, ratio = {}", fmt_f64(m.m1), fmt_f64(m.m2), fmt_f64(m.normalizer), fmt_f64(m.ratio)));
    let mut metrics = Table::new(&["r", "m1", "m2", "normalizer", "ratio"]);
    metrics.push(&[r, m.m1, m.m2, m.normalizer, m.ratio]);
    out.table("metrics.csv", metrics);
    out.table("u.csv", field_table(&grid, &u.u, "u"));
    out.table("v.csv", field_table(&cmp.grid, &cmp.solution.u, "v"));
    Ok(out)
}

pub fn holder(cfg: &RunConfig, center: &[f64], mode: Mode) -> Result<Artifacts, Failure> {
    let dim = cfg.phi.domain().dim();
    if center.len() != dim {
        return Err(Failure::Validation(format!("--center needs {dim} coordinates")));
    }
    let (grid, sol) = solve_on_domain(cfg)?;
    let mut out = header(cfg, "holder");
    solve_report(&mut out, &sol, "solve");
    let hc = &cfg.holder;
    let radii = hc.radii.clone().unwrap_or_else(|| dyadic_radii(hc.rho_max, grid.h()));
    let field = Field::new(&grid, &sol.u)?;
    let est = campanato_fit(&field, center, &radii, mode)?;
    out.line(format!(
        "campanato ({mode}): alpha_hat = {}, fit residual {}, {} radii, max radius {}",
        fmt_f64(est.alpha_hat),
        fmt_f64(est.fit_residual),
        est.radii.len(),
        fmt_f64(est.window.max_radius)
    ));
    let mut decay = Table::new(&["rho", "oscillation"]);
    for (r, v) in est.radii.iter().zip(&est.values) {
        decay.push(&[*r, *v]);
    }
    out.table("decay.csv", decay);
    match morrey_decay(&field, center, &radii) {
        Ok(m) => out.line(format!("morrey: slope {}, tau {}, alpha {}", fmt_f64(m.slope), fmt_f64(m.tau), fmt_f64(m.alpha))),
        Err(e) => out.line(format!("morrey: unavailable ({e})")),
    }
    if let Some(sigma) = hc.sigma {
        let h = higher_integrability_ratio(&field, &cfg.phi, center, hc.rho_max / 2.0, sigma)?;
        match h.ratio {
            Some(ratio) => out.line(format!("higher integrability R({sigma}) = {}", fmt_f64(ratio))),
            None => out.line(format!("higher integrability: integral of phi over B_2r is {} > 1, not computed", fmt_f64(h.energy_2r))),
        }
    }
    Ok(out)
}

pub fn sweep(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let sw = cfg.sweep_block()?;
    let domain = cfg.phi.domain().clone();
    let mut points = vec![];
    for &q in &sw.q {
        points.push(SweepPoint {
            p: sw.p,
            q,
            beta: Some(sw.beta),
        });
        if sw.autonomous {
            points.push(SweepPoint { p: sw.p, q, beta: None });
        }
    }
    let mut opts = SweepOptions {
        center: center_or(&domain, &sw.center),
        domain,
        cells: cfg.grid.cells,
        radii: sw.radii.clone(),
        eps: sw.eps,
        fit_radius: sw.fit_radius,
        ..Default::default()
    };
    opts.checks.balls = sw.balls;
    opts.checks.sampling = sampling(cfg);
    if let Some(s) = &cfg.solve {
        opts.boundary = s.boundary.clone();
        opts.solve = solve_options(s);
    }
    let rows = threshold_sweep(&points, &opts)?;
    let mut out = header(cfg, "sweep");
    let mut table = Table::new(&SweepRow::HEADER);
    for row in &rows {
        let beta = row.point.beta.map_or("const".to_string(), |b| b.to_string());
        out.line(format!(
            "p = {}, q = {}, beta = {beta}: VA1 {}, wVA1 {}, A1 {}",
            row.point.p,
            row.point.q,
            row.va1.map(|v| v.to_string()).unwrap_or("-".into()),
            row.wva1.map(|v| v.to_string()).unwrap_or("-".into()),
            row.a1.map(|v| v.to_string()).unwrap_or("-".into()),
        ));
        table.push_fields(row.record());
    }
    out.table("sweep.csv", table);
    Ok(out)
}

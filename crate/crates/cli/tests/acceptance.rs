//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Build with the test profile; the solver criteria are slow
//! unoptimized.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use musielak::analysis::{campanato_fit, dyadic_radii, lipschitz_proxy, morrey_decay, oscillation_decay, Field, Mode};
use musielak::conditions::{check_matrix, closed_form_modulus, CheckOptions, ConditionMatrix, Verdict};
use musielak::expr::Expr;
use musielak::geometry::{Ball, Domain};
use musielak::numeric::logspace;
use musielak::phi::{growth_constants, inequalities, Conjugate, Family, Frozen, GrowthOptions, Holder, Moduli, PhiFn, PhiSpec};
use musielak::regularize::{check_theta, verify_approx, RegularizeOptions, RegularizedPhi, Theta, ThetaOptions};
use musielak::solver::{comparison_metrics, minimize, solve_comparison, DiscreteProblem, Grid, SolveOptions};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn double_phase(q: f64) -> PhiSpec {
    PhiSpec::double_phase(2.0, q, "abs(x1)", 2)
        .and_then(|s| {
            s.with_moduli(Moduli {
                a: Some(Holder::new(1.0, 1.0)),
                ..Default::default()
            })
        })
        .expect("valid double phase")
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo
}

fn calculus() -> Outcome {
    let ts = logspace(1e-2, 1e2, 100);
    let ss = logspace(1e-2, 1e2, 50);
    let young_ts = logspace(1e-2, 1e2, 50);
    let x = vec![0.5, 0.0];
    let cases: Vec<(&str, PhiSpec)> = vec![
        ("power", PhiSpec::new(Family::Power { p: 3.0 }, Domain::unit_box(2)).map_err(err)?),
        ("orlicz_log", PhiSpec::new(Family::OrliczLog { p: 2.0 }, Domain::unit_box(2)).map_err(err)?),
        ("double_phase", double_phase(2.2)),
    ];
    let mut worst = 0.0f64;
    for (name, phi) in &cases {
        let frozen = Frozen { base: phi, at: x.clone() };
        let star = Conjugate::new(&frozen);
        let bi = Conjugate::new(&star);
        for &t in &ts {
            let exact = phi.eval(&x, t).map_err(err)?;
            let rel = (bi.eval(&x, t).map_err(err)? - exact).abs() / exact;
            worst = worst.max(rel);
            ensure(rel <= 1e-6, format!("{name}: biconjugate off by {rel:e} at t = {t}"))?;
        }
        let y = inequalities::young(phi, &x, &young_ts, &ss).map_err(err)?;
        ensure(y.violations == 0, format!("{name}: {} Young violations", y.violations))?;
        let q = phi.declared_exponents().1;
        let xs = vec![x.clone()];
        let g = growth_constants(phi, &xs, (1e-2, 1e2), &GrowthOptions::default()).map_err(err)?;
        let l = g.l_hat.max(1.0);
        let b = inequalities::derivative_bounds(phi, &xs, &ts).map_err(err)?;
        ensure(b.upper_ratio <= 1.0 + 1e-9, format!("{name}: phi/(t phi') reaches {}", b.upper_ratio))?;
        ensure(
            b.lower_ratio <= 2f64.powf(q) * 2.0 * l,
            format!("{name}: t phi'/phi reaches {} > 2^q 2L", b.lower_ratio),
        )?;
    }
    Ok(format!("worst biconjugation error {worst:.1e}, Young and derivative bounds clean"))
}

fn construction() -> Outcome {
    let phi = double_phase(2.2);
    let omega = closed_form_modulus(&phi, 0.0).map_err(err)?;
    let x0 = vec![0.5, 0.0];
    let mut constants = vec![];
    for r in [0.2, 0.1, 0.05] {
        let ball = Ball::new(x0.clone(), r).map_err(err)?;
        let reg = RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()).map_err(err)?;
        let rep = verify_approx(&reg, &phi, 120, 32).map_err(|e| format!("r = {r}: {e}"))?;
        ensure(rep.continuity_residual <= 1e-12, format!("r = {r}: continuity residual {:e}", rep.continuity_residual))?;
        ensure(
            rep.sandwich.0 >= 1.0 - 1e-9 && rep.sandwich.1 <= 1.0 + 1e-9,
            format!("r = {r}: sandwich ratios {:?}", rep.sandwich),
        )?;
        ensure(rep.closeness_floor >= -1e-12, format!("r = {r}: closeness floor {:e}", rep.closeness_floor))?;
        constants.push(rep.closeness_constant);
        let theta = Theta::new(&phi, &reg, 0.25).map_err(err)?;
        let checks = check_theta(&theta, &ThetaOptions::default()).map_err(err)?;
        for c in checks.reports() {
            ensure(c.verdict == Verdict::Holds, format!("r = {r}: theta {}", c.summary()))?;
        }
    }
    ensure(spread(&constants) < 2.0, format!("closeness constants {constants:?} vary by 2x or more"))?;
    Ok(format!("closeness constants {:.3} {:.3} {:.3}, theta checks hold", constants[0], constants[1], constants[2]))
}

fn chain_ok(name: &str, m: &ConditionMatrix) -> Result<(), String> {
    ensure(m.chain_violations.is_empty(), format!("{name}: chain broken: {:?}", m.chain_violations))
}

fn verdict_matrix() -> Outcome {
    let domain = Domain::unit_box(2);
    let opts = CheckOptions {
        balls: 16,
        ..Default::default()
    };
    let ve = PhiSpec::new(
        Family::VariableExponent {
            p: Expr::parse("2 + 0.5*abs(x1)^0.3").map_err(err)?,
        },
        domain.clone(),
    )
    .and_then(|s| {
        s.with_moduli(Moduli {
            p: Some(Holder::new(0.5, 0.3)),
            ..Default::default()
        })
    })
    .map_err(err)?;
    // at moderate radii the log factor of the exponent modulus pulls the
    // fitted slope below 0.3 - 1/ln(1/r)
    let m = check_matrix(&ve, &domain, &logspace(1e-14, 1e-10, 5), 0.1, &opts).map_err(err)?;
    chain_ok("variable exponent", &m)?;
    ensure(m.va1.verdict == Verdict::Holds, format!("variable exponent: {}", m.va1.summary()))?;
    let ve_rate = m.va1.holder_rate.map(|f| f.slope).ok_or("variable exponent: no rate")?;
    ensure(ve_rate >= 0.25, format!("variable exponent rate {ve_rate:.3} < 0.25"))?;

    let radii = logspace(1e-6, 1e-2, 5);
    let below = double_phase(2.2);
    let m = check_matrix(&below, &domain, &radii, 0.1, &opts).map_err(err)?;
    chain_ok("double phase q = 2.2", &m)?;
    ensure(m.va1.verdict == Verdict::Holds, format!("double phase q = 2.2: {}", m.va1.summary()))?;
    let gamma0 = 1.0 - 2.0 * (2.2 - 2.0) / 2.0;
    let dp_rate = m.va1.holder_rate.map(|f| f.slope).ok_or("double phase: no rate")?;
    ensure((dp_rate - gamma0).abs() <= 0.1, format!("double phase rate {dp_rate:.3}, predicted {gamma0:.3}"))?;

    let above = double_phase(4.0);
    let m = check_matrix(&above, &domain, &radii, 0.1, &opts).map_err(err)?;
    chain_ok("double phase q = 4", &m)?;
    ensure(m.va1.verdict == Verdict::Fails, format!("double phase q = 4: {}", m.va1.summary()))?;
    let mut table = m.va1.modulus_table.clone();
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    ensure(table.len() >= 3, "double phase q = 4: short modulus table")?;
    for (r, w) in &table[..3] {
        ensure(*w >= 0.5, format!("double phase q = 4: modulus {w} at r = {r:e}"))?;
    }
    let wit = m.va1.witness.as_ref().ok_or("double phase q = 4: no witness")?;
    let again = wit.reproduce(&above).map_err(err)?;
    ensure(
        (again - wit.ratio()).abs() <= 1e-9 * wit.ratio().abs() && wit.violates(&above).map_err(err)?,
        format!("witness ratio {} reproduces as {again}", wit.ratio()),
    )?;
    Ok(format!(
        "variable exponent rate {ve_rate:.3}, double phase rate {dp_rate:.3} (predicted {gamma0:.2}), q = 4 modulus {:.2}, chain intact",
        table[0].1
    ))
}

fn interval(a: f64, b: f64, cells: usize) -> Result<Grid, String> {
    Grid::new(&Domain::Interval { a, b }, cells).map_err(err)
}

/// Composite Simpson rule, the oracle for the weighted quadratic energy.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn solver_oracles() -> Outcome {
    // u' = c/(1+x) with u(0) = 0, u(1) = 1 minimizes the weighted energy
    let c = 1.0 / simpson(|x| 1.0 / (1.0 + x), 0.0, 1.0, 2000);
    let oracle = simpson(|x| (1.0 + x) * (c / (1.0 + x)).powi(2), 0.0, 1.0, 2000);
    let weighted = PhiSpec::new(
        Family::Perturbed {
            a: Expr::parse("1 + x1").map_err(err)?,
            profile: musielak::phi::Profile::Power { p: 2.0 },
            nu: None,
            lambda: None,
        },
        Domain::Interval { a: 0.0, b: 1.0 },
    )
    .map_err(err)?;
    let g = interval(0.0, 1.0, 1024)?;
    let problem = DiscreteProblem::new(g, |x| x[0], 0.0).map_err(err)?;
    let sol = minimize(&weighted, &problem, &SolveOptions::default()).map_err(err)?;
    let gap = (sol.energy() - oracle).abs();
    ensure(sol.converged && gap <= 1e-4, format!("weighted energy {} vs {oracle}", sol.energy()))?;

    for p in [1.5, 2.0, 3.0] {
        let g = interval(-1.0, 1.0, 64)?;
        let data = |x: &[f64]| 0.75 * x[0] + 0.25;
        let problem = DiscreteProblem::new(g.clone(), data, 0.0).map_err(err)?;
        let phi = PhiSpec::power(p, 1).map_err(err)?;
        let sol = minimize(&phi, &problem, &SolveOptions::default()).map_err(err)?;
        let worst = (0..g.num_nodes()).map(|k| (sol.u[k] - data(&g.node(k))).abs()).fold(0.0, f64::max);
        ensure(worst <= 1e-8, format!("p = {p}: linear data off by {worst:e}"))?;
    }

    // radially 3-harmonic: r u'^2 is constant, so u = sqrt(r) up to affine terms
    let annulus = Domain::Annulus {
        center: [0.0, 0.0],
        inner: 0.25,
        outer: 1.0,
    };
    let phi = PhiSpec::new(Family::Power { p: 3.0 }, annulus.clone()).map_err(err)?;
    let exact = |x: &[f64]| x[0].hypot(x[1]).sqrt();
    let mut errors = vec![];
    for cells in [16, 32, 64, 128] {
        let g = Grid::new(&annulus, cells).map_err(err)?;
        let problem = DiscreteProblem::new(g.clone(), exact, 0.0).map_err(err)?;
        let sol = minimize(&phi, &problem, &SolveOptions::default()).map_err(err)?;
        ensure(sol.converged, format!("annulus {cells}: not converged"))?;
        let e = g.interior_nodes().iter().map(|&k| (sol.u[k] - exact(&g.node(k))).abs()).fold(0.0, f64::max);
        errors.push(e);
    }
    let factors: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(factors.iter().all(|f| *f >= 1.5), format!("annulus contraction factors {factors:?}"))?;
    Ok(format!(
        "weighted energy gap {gap:.1e}, annulus contraction {:.2} {:.2} {:.2}",
        factors[0], factors[1], factors[2]
    ))
}

fn comparison_decay() -> Outcome {
    let phi = double_phase(2.2);
    let omega = closed_form_modulus(&phi, 0.0).map_err(err)?;
    let x0 = [0.5, 0.0];
    let opts = SolveOptions::default();
    let mut ratios = vec![];
    for r in [0.2, 0.1, 0.05] {
        let disc = Domain::Disc {
            center: x0,
            radius: 2.0 * r,
        };
        // 4r across at h = r/64
        let grid = Grid::new(&disc, 256).map_err(err)?;
        let problem = DiscreteProblem::new(grid.clone(), |x| x[0] + 0.5 * x[1], 0.0).map_err(err)?;
        let u = minimize(&phi, &problem, &opts).map_err(err)?;
        ensure(u.converged, format!("r = {r}: u not converged"))?;
        let ball = Ball::new(x0.to_vec(), r).map_err(err)?;
        let reg = RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()).map_err(err)?;
        let cmp = solve_comparison(&grid, &u.u, &reg, &opts).map_err(err)?;
        ensure(cmp.solution.converged, format!("r = {r}: v not converged"))?;
        let m = comparison_metrics(&cmp.grid, &u.u, &cmp.solution.u, &reg, opts.grad_floor).map_err(err)?;
        ratios.push(m.ratio);
    }
    ensure(ratios.windows(2).all(|w| w[1] <= w[0]), format!("ratios {ratios:?} increase"))?;

    let disc = Domain::Disc {
        center: [0.0, 0.0],
        radius: 0.4,
    };
    let grid = Grid::new(&disc, 64).map_err(err)?;
    let power = PhiSpec::power(3.0, 2).map_err(err)?;
    let problem = DiscreteProblem::new(grid.clone(), |x| x[0] + 0.5 * x[1] * x[1], 0.0).map_err(err)?;
    let tol_el = opts.el_target(&problem);
    let u = minimize(&power, &problem, &opts).map_err(err)?;
    let ball = Ball::new(vec![0.0, 0.0], 0.2).map_err(err)?;
    let flat = closed_form_modulus(&power, 0.0).map_err(err)?;
    let reg = RegularizedPhi::build(&power, &ball, &flat, &RegularizeOptions::default()).map_err(err)?;
    let cmp = solve_comparison(&grid, &u.u, &reg, &opts).map_err(err)?;
    let m = comparison_metrics(&cmp.grid, &u.u, &cmp.solution.u, &reg, opts.grad_floor).map_err(err)?;
    ensure(m.m1 <= 10.0 * tol_el, format!("autonomous M1 = {:e} > 10 tol_el = {:e}", m.m1, 10.0 * tol_el))?;
    Ok(format!(
        "ratios {:.5} {:.5} {:.5}, autonomous M1 {:.1e} (bound {:.1e})",
        ratios[0],
        ratios[1],
        ratios[2],
        m.m1,
        10.0 * tol_el
    ))
}

fn estimators() -> Outcome {
    let mut fitted = vec![];
    for (n, alpha) in [(256, 0.3), (256, 0.5), (256, 0.7)] {
        let g = Grid::new(&Domain::unit_box(2), n).map_err(err)?;
        let v: Vec<f64> = (0..g.num_nodes()).map(|k| g.node(k)[0].hypot(g.node(k)[1]).powf(alpha)).collect();
        let f = Field::new(&g, &v).map_err(err)?;
        let est = campanato_fit(&f, &[0.0, 0.0], &dyadic_radii(0.5, g.h()), Mode::Function).map_err(err)?;
        ensure((est.alpha_hat - alpha).abs() <= 0.05, format!("alpha {alpha}: estimated {}", est.alpha_hat))?;
        fitted.push(est.alpha_hat);
    }
    let g = Grid::new(&Domain::unit_box(2), 128).map_err(err)?;
    let v: Vec<f64> = (0..g.num_nodes()).map(|k| 0.7 * g.node(k)[0] - 0.2 * g.node(k)[1]).collect();
    let f = Field::new(&g, &v).map_err(err)?;
    let m = morrey_decay(&f, &[0.0, 0.0], &dyadic_radii(0.5, g.h())).map_err(err)?;
    ensure((m.slope - 2.0).abs() <= 0.02, format!("morrey slope {} on a linear field", m.slope))?;
    Ok(format!(
        "alpha_hat {:.3} {:.3} {:.3}, morrey slope {:.4}",
        fitted[0], fitted[1], fitted[2], m.slope
    ))
}

fn autonomous_proxies() -> Outcome {
    let phi = double_phase(2.2);
    let omega = closed_form_modulus(&phi, 0.0).map_err(err)?;
    let (x0, r) = ([0.5, 0.0], 0.1);
    let ball = Ball::new(x0.to_vec(), r).map_err(err)?;
    let reg = RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()).map_err(err)?;
    let tilde = reg.tabulated();
    let disc = Domain::Disc { center: x0, radius: r };
    let (mut lips, mut alphas) = (vec![], vec![]);
    // h/r = 1/32, 1/64, 1/128
    for cells in [64, 128, 256] {
        let grid = Grid::new(&disc, cells).map_err(err)?;
        let data = |x: &[f64]| x[0] + 0.5 * x[1] + 2.0 * (x[0] - 0.5) * x[1];
        let problem = DiscreteProblem::new(grid.clone(), data, 0.0).map_err(err)?;
        let v = minimize(&tilde, &problem, &SolveOptions::default()).map_err(err)?;
        ensure(v.converged, format!("{cells} cells: not converged"))?;
        let f = Field::new(&grid, &v.u).map_err(err)?;
        let rho = r / 2.0;
        lips.push(lipschitz_proxy(&f, &x0, rho).map_err(err)?);
        alphas.push(oscillation_decay(&f, &x0, rho, &[1.0, 0.5, 0.25]).map_err(err)?.alpha_hat);
    }
    ensure(lips.iter().chain(&alphas).all(|v| *v > 0.0), format!("nonpositive proxies {lips:?} {alphas:?}"))?;
    ensure(spread(&lips) < 2.0, format!("Lipschitz proxies {lips:?} vary by 2x or more"))?;
    ensure(spread(&alphas) < 2.0, format!("alpha_0 {alphas:?} vary by 2x or more"))?;
    Ok(format!(
        "Lipschitz proxy {:.3} {:.3} {:.3}, alpha_0 {:.3} {:.3} {:.3}",
        lips[0], lips[1], lips[2], alphas[0], alphas[1], alphas[2]
    ))
}

fn csv_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = vec![];
    for e in std::fs::read_dir(dir).map_err(err)? {
        let p = e.map_err(err)?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).map_err(err)?));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let base = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let runs: [(&str, &[&str]); 4] = [
        ("check", &["check", "--config", "double_phase.toml"]),
        ("regularize", &["regularize", "--config", "double_phase.toml", "--r", "0.1"]),
        ("solve", &["solve", "--config", "annulus_power.toml"]),
        ("sweep", &["sweep", "--config", "sweep.toml"]),
    ];
    let mut files = 0;
    for (name, args) in runs {
        let mut outputs = vec![];
        for k in 0..2 {
            let dir = base.join(format!("{name}-{k}"));
            let _ = std::fs::remove_dir_all(&dir);
            let status = Command::new(env!("CARGO_BIN_EXE_musielak"))
                .current_dir(&configs)
                .args(args)
                .arg("--out")
                .arg(&dir)
                .arg("--quiet")
                .status()
                .map_err(err)?;
            ensure(status.success(), format!("{name}: exit {status}"))?;
            outputs.push(csv_bytes(&dir)?);
        }
        ensure(!outputs[0].is_empty(), format!("{name}: no CSV output"))?;
        ensure(outputs[0] == outputs[1], format!("{name}: CSV bytes differ between runs"))?;
        files += outputs[0].len();
    }
    Ok(format!("{files} CSV files byte-identical across two runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 8] = [
        ("phi calculus", calculus, 10),
        ("construction", construction, 60),
        ("condition verdict matrix", verdict_matrix, 120),
        ("solver oracles", solver_oracles, 300),
        ("comparison decay", comparison_decay, 300),
        ("exponent estimators", estimators, 30),
        ("autonomous regularity proxies", autonomous_proxies, 300),
        ("determinism", determinism, 600),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(m) if took > Duration::from_secs(*budget) => Err(format!("{m}; over the {budget} s budget")),
            o => o,
        };
        match outcome {
            Ok(m) => println!("criterion {}: PASS {name} ({:.1} s): {m}", k + 1, took.as_secs_f64()),
            Err(m) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({:.1} s): {m}", k + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

use musielak::analysis::{campanato_fit, dyadic_radii, Field, Mode};
use musielak::conditions::{check_matrix, classify_regularity, closed_form_modulus, CheckOptions, RegularityClass, Verdict};
use musielak::geometry::{Ball, Domain};
use musielak::numeric::logspace;
use musielak::phi::{Holder, Moduli, PhiFn, PhiSpec};
use musielak::regularize::{verify_approx, RegularizeOptions, RegularizedPhi};
use musielak::solver::{comparison_metrics, minimize, solve_comparison, DiscreteProblem, Grid, SolveOptions};

fn double_phase(q: f64) -> PhiSpec {
    PhiSpec::double_phase(2.0, q, "abs(x1)", 2)
        .unwrap()
        .with_moduli(Moduli {
            a: Some(Holder::new(1.0, 1.0)),
            ..Default::default()
        })
        .unwrap()
}

#[test]
fn threshold_sides_classify_differently() {
    let domain = Domain::unit_box(2);
    let opts = CheckOptions {
        balls: 8,
        ..Default::default()
    };
    let radii = logspace(1e-6, 1e-2, 5);
    let below = check_matrix(&double_phase(2.2), &domain, &radii, 0.1, &opts).unwrap();
    let above = check_matrix(&double_phase(4.0), &domain, &radii, 0.1, &opts).unwrap();
    assert!(below.chain_violations.is_empty() && above.chain_violations.is_empty());
    assert_eq!(below.va1.verdict, Verdict::Holds);
    assert_eq!(above.va1.verdict, Verdict::Fails);
    let reg = classify_regularity(&[below.a1.clone(), below.va1.clone(), below.wva1.clone()]).unwrap();
    assert_eq!(reg.class, RegularityClass::C1Alpha);
    assert!(classify_regularity(&[above.a1, above.va1, above.wva1]).unwrap().class != RegularityClass::C1Alpha);
}

#[test]
fn regularize_then_compare() {
    let phi = double_phase(2.2);
    let omega = closed_form_modulus(&phi, 0.0).unwrap();
    let x0 = [0.5, 0.0];
    let r = 0.1;
    let grid = Grid::new(
        &Domain::Disc {
            center: x0,
            radius: 2.0 * r,
        },
        64,
    )
    .unwrap();
    let opts = SolveOptions::default();
    let u = minimize(&phi, &DiscreteProblem::new(grid.clone(), |x| x[0] + 0.5 * x[1], 0.0).unwrap(), &opts).unwrap();
    assert!(u.converged);
    let ball = Ball::new(x0.to_vec(), r).unwrap();
    let reg = RegularizedPhi::build(&phi, &ball, &omega, &RegularizeOptions::default()).unwrap();
    let rep = verify_approx(&reg, &phi, 60, 16).unwrap();
    assert!(rep.sandwich.0 >= 1.0 - 1e-9 && rep.sandwich.1 <= 1.0 + 1e-9);
    assert!(reg.is_autonomous());
    let cmp = solve_comparison(&grid, &u.u, &reg, &opts).unwrap();
    assert!(cmp.solution.converged);
    let m = comparison_metrics(&cmp.grid, &u.u, &cmp.solution.u, &reg, opts.grad_floor).unwrap();
    assert!(m.m1 > 0.0 && m.ratio < 0.1, "{m:?}");
}

#[test]
fn campanato_recovers_synthetic_exponents() {
    let g = Grid::new(&Domain::unit_box(2), 128).unwrap();
    for alpha in [0.3, 0.5, 0.7] {
        let v: Vec<f64> = (0..g.num_nodes()).map(|k| g.node(k)[0].hypot(g.node(k)[1]).powf(alpha)).collect();
        let f = Field::new(&g, &v).unwrap();
        let est = campanato_fit(&f, &[0.0, 0.0], &dyadic_radii(0.5, g.h()), Mode::Function).unwrap();
        assert!((est.alpha_hat - alpha).abs() < 0.05, "{alpha}: {}", est.alpha_hat);
    }
}

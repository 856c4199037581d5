mod common;

use common::*;
use divkit::invariance::{make_invariant, Factor};
use divkit::linalg::{LinearOperator, Matrix};
use divkit::penalty::{Drq, Laplacian, SmoothKind, Smoothness};
use divkit::sgm::*;
use divkit::Error;
use rand::Rng;

fn random_h(r: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| r.gen_range(0.05..1.0))
}

fn ratio(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x / y).collect()
}

#[test]
fn unit_multiplicative_step_is_isra_for_eqm() {
    let mut r = rng(100);
    let h = random_h(&mut r, 7, 5);
    let y = field(&mut r, 7, 0.5, 3.0);
    let x = field(&mut r, 5, 0.5, 2.0);
    let m = LinearModel::new(y.clone(), h.clone(), spec("eqm", &[])).unwrap();
    let (u, v) = m.split(&x, 1e-12).unwrap();
    let got = multiplicative_step(&x, &u, &v, 1.0).unwrap();
    // x * H^T y / H^T H x
    let num = h.adjoint(&y);
    let den = h.adjoint(&h.apply(&x));
    let want: Vec<f64> = x.iter().zip(ratio(&num, &den)).map(|(a, b)| a * b).collect();
    assert!(rel_err(&got, &want, 1e-300) <= 1e-12);
    assert!(split_residual(&m.gradient(&x).unwrap(), &u, &v) <= 1e-10);
}

#[test]
fn unit_multiplicative_step_is_richardson_lucy_for_kl() {
    let mut r = rng(101);
    let h = random_h(&mut r, 7, 5);
    let y = field(&mut r, 7, 0.5, 3.0);
    let x = field(&mut r, 5, 0.5, 2.0);
    let m = LinearModel::new(y.clone(), h.clone(), spec("kl", &[])).unwrap();
    let (u, v) = m.split(&x, 1e-12).unwrap();
    let got = multiplicative_step(&x, &u, &v, 1.0).unwrap();
    let num = h.adjoint(&ratio(&y, &h.apply(&x)));
    let den = h.adjoint(&vec![1.0; 7]);
    let want: Vec<f64> = x.iter().zip(ratio(&num, &den)).map(|(a, b)| a * b).collect();
    assert!(rel_err(&got, &want, 1e-300) <= 1e-12);
}

#[test]
fn zero_components_are_absorbing() {
    let got = multiplicative_step(&[0.0, 1.0], &[5.0, 2.0], &[1.0, 1.0], 1.0).unwrap();
    assert_eq!(got[0], 0.0);
    assert!(matches!(multiplicative_step(&[1.0], &[1.0], &[0.0], 1.0), Err(Error::Decomposition(_))));
}

#[test]
fn step_at_a_stationary_point_keeps_x() {
    let h = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0], vec![0.3, 0.3]]).unwrap();
    let x = vec![1.5, 0.7];
    let y = h.apply(&x);
    let m = LinearModel::new(y, h, spec("kl", &[])).unwrap();
    let s = sgm_step(&m, &x, &SolverConfig::default()).unwrap();
    assert!(rel_err(&s.x, &x, 1e-300) <= 1e-15);
}

#[test]
fn two_variable_nonnegative_least_squares() {
    // minimize |H x - y|^2 over x >= 0; the unconstrained solution has x1 < 0
    let h = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]]).unwrap();
    let y = vec![3.0, 2.0, 1.0];
    // normal equations: [3 6; 6 14] x = [6; 10] -> x = (4, -1); so x1 = 0 and
    // x0 = <h0, y> / |h0|^2 = 2, with dD/dx1 = 2 (h1 . (H x - y)) = 2 * (2+4+6 - 10) = 4 > 0
    let want = [2.0, 0.0];
    let m = LinearModel::new(y, h, spec("eqm", &[])).unwrap();
    let cfg = SolverConfig { max_iters: 500, objective_tol: 0.0, ..Default::default() };
    let rep = solve(&m, &[1.0, 1.0], &cfg).unwrap();
    assert!(rep.iterations <= 500);
    for (a, b) in rep.x.iter().zip(want) {
        assert!((a - b).abs() <= 1e-6, "{:?}", rep.x);
    }
}

#[test]
fn max_step_and_armijo_examples() {
    assert_eq!(max_step(&[1.0, 2.0], &[-1.0, -4.0], 1e6), 0.5);
    assert_eq!(max_step(&[1.0, 1.0], &[-2.0, 1.0], 1e6), 0.5);
    assert_eq!(max_step(&[1.0, 1.0], &[1.0, 0.0], 1e6), 1e6);

    struct Q;
    impl Objective for Q {
        fn value(&self, x: &[f64]) -> divkit::Result<f64> {
            Ok((x[0] - 1.0).powi(2))
        }
        fn gradient(&self, x: &[f64]) -> divkit::Result<Vec<f64>> {
            Ok(vec![2.0 * (x[0] - 1.0)])
        }
    }
    let cfg = SolverConfig::default();
    let a = armijo_search(&Q, &[0.0], &[1.0], 10.0, &cfg).unwrap();
    assert!(a > 0.0 && a <= 10.0);
    assert!(Q.value(&[a]).unwrap() < Q.value(&[0.0]).unwrap());
    assert!(matches!(armijo_search(&Q, &[0.0], &[-1.0], 10.0, &cfg), Err(Error::Param { .. })));

    // (x - 1)^2 from 0 along +1: alpha_max = 10 overshoots to D = 81, so the
    // accepted step must be a backtracked one inside the sufficient-decrease set
    let a = armijo_search(&Q, &[0.0], &[1.0], 10.0, &cfg).unwrap();
    assert!(a < 10.0);
    assert!(Q.value(&[a]).unwrap() <= 1.0 - 1e-4 * a * 2.0);
}

#[test]
fn accelerated_direction_scales_the_correction() {
    let d1 = accelerated_direction(&[1.0], &[1.1], &[1.0], 1).unwrap();
    let d2 = accelerated_direction(&[1.0], &[1.1], &[1.0], 2).unwrap();
    assert!((d1[0] - 0.1).abs() < 1e-12 && (d2[0] - 0.21).abs() < 1e-12);
    let x = [0.5, 2.0];
    let (u, v) = ([1.0, 3.0], [2.0, 1.5]);
    let m = multiplicative_step(&x, &u, &v, 1.0).unwrap();
    let d = accelerated_direction(&x, &u, &v, 1).unwrap();
    assert_eq!(m, vec![x[0] + d[0], x[1] + d[1]]);
}

#[test]
fn sum_constrained_conserves_and_finds_the_kkt_point() {
    let mut r = rng(102);
    let h = random_h(&mut r, 12, 6);
    let y = field(&mut r, 12, 0.5, 3.0);
    let m = LinearModel::new(y, h, spec("kl", &[])).unwrap();
    let x0 = vec![2.0; 6];
    let c = 12.0;
    let cfg = SolverConfig { max_iters: 150, objective_tol: 0.0, ..Default::default() };
    let rep = solve_sum_constrained(&m, &x0, c, &cfg).unwrap();
    let res = rep.trace.column("residual").unwrap();
    assert!(res.iter().all(|&e| e <= 1e-10 * c));
    let obj = rep.trace.column("objective").unwrap();
    assert!(obj.windows(2).all(|w| w[1] <= w[0]));
    // the line-search run settles early; a fixed step runs the full count
    let fixed = SolverConfig { step: StepPolicy::Fixed(1.0), ..cfg.clone() };
    let rep = solve_sum_constrained(&m, &x0, c, &fixed).unwrap();
    let res = rep.trace.column("residual").unwrap();
    assert_eq!(res.len(), 151);
    assert!(res.iter().all(|&e| e <= 1e-10 * c));

    // kl with identity operator: stationarity of the Lagrangian gives x = C y / sum y
    let y = vec![1.0, 2.0, 3.0];
    let m = LinearModel::new(y, Matrix::identity(3), spec("kl", &[])).unwrap();
    let cfg = SolverConfig { objective_tol: 0.0, max_iters: 2000, ..Default::default() };
    let rep = solve_sum_constrained(&m, &[4.0, 4.0, 4.0], 12.0, &cfg).unwrap();
    for (a, b) in rep.x.iter().zip([2.0, 4.0, 6.0]) {
        assert!((a - b).abs() <= 1e-6, "{:?}", rep.x);
    }

    assert!(matches!(solve_sum_constrained(&m, &[1.0, 1.0, 1.0], 12.0, &cfg), Err(Error::Constraint(_))));
}

#[test]
fn centered_correction_vanishes_for_a_constant_gradient() {
    let d = centered_direction(&[1.0, 2.0, 3.0], &[0.7, 0.7, 0.7]);
    assert!(d.iter().all(|v| v.abs() < 1e-15));
    let d = centered_direction(&[1.0, 2.0, 3.0], &[0.1, -0.4, 2.0]);
    assert!(d.iter().sum::<f64>().abs() < 1e-14);
}

#[test]
fn invariant_solver_conserves_and_rejects_plain_divergences() {
    let mut r = rng(103);
    let h = random_h(&mut r, 10, 5);
    let y = field(&mut r, 10, 0.5, 3.0);
    let inv = make_invariant(spec("kl", &[]), Factor::Nominal).unwrap();
    let m = LinearModel::new(y.clone(), h.clone(), inv).unwrap();
    let x0 = field(&mut r, 5, 0.5, 2.0);
    let c: f64 = x0.iter().sum();
    let cfg = SolverConfig { max_iters: 120, objective_tol: 0.0, ..Default::default() };
    for variant in [InvariantVariant::Gradient, InvariantVariant::Multiplicative] {
        let rep = solve_invariant(&m, &x0, variant, &cfg).unwrap();
        let res = rep.trace.column("residual").unwrap();
        assert!(res.iter().all(|&e| e <= 1e-10 * c), "{variant:?}");
        let obj = rep.trace.column("objective").unwrap();
        assert!(obj.windows(2).all(|w| w[1] <= w[0]));
    }
    // renormalization leaves the invariant objective unchanged
    let (u, v) = m.split(&x0, 1e-12).unwrap();
    let x1 = multiplicative_step(&x0, &u, &v, 1.0).unwrap();
    let s: f64 = x1.iter().sum();
    let x1n: Vec<f64> = x1.iter().map(|a| a * c / s).collect();
    let (a, b) = (m.value(&x1).unwrap(), m.value(&x1n).unwrap());
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));

    let plain = LinearModel::new(y, h, spec("kl", &[])).unwrap();
    assert!(matches!(solve_invariant(&plain, &x0, InvariantVariant::Gradient, &cfg), Err(Error::Invariant(_))));
}

#[test]
fn composite_objectives() {
    let mut r = rng(104);
    let y = field(&mut r, 9, 0.5, 3.0);
    let x = field(&mut r, 9, 0.5, 3.0);
    let t = Laplacian::new_2d(3, 3).unwrap();
    let inv = make_invariant(spec("kl", &[]), Factor::Nominal).unwrap();
    let data = LinearModel::new(y.clone(), Matrix::identity(9), inv).unwrap();
    let pen = Smoothness::new(SmoothKind::Lai(0.5), t).unwrap();
    let c0 = Composite::new(&data, &pen, 0.0).unwrap();
    assert_eq!(c0.value(&x).unwrap(), data.value(&x).unwrap());
    let c = Composite::new(&data, &pen, 3.0).unwrap();
    let g = c.gradient(&x).unwrap();
    let scale: f64 = x.iter().zip(&g).map(|(a, b)| (a * b).abs()).sum();
    assert!(weighted_gradient_sum(&x, &g).abs() <= 1e-10 * scale);
    assert!(Composite::new(&data, &pen, -1.0).is_err());

    // |x - y|^2 + gamma/2 |x - c|^2 is minimized at (2y + gamma c) / (2 + gamma)
    let eqm = LinearModel::new(y.clone(), Matrix::identity(9), spec("eqm", &[])).unwrap();
    let cref = 1.7;
    let gamma = 1e4;
    let comp = Composite::new(&eqm, Drq { c: cref }, gamma).unwrap();
    let cfg = SolverConfig { objective_tol: 0.0, max_iters: 3000, ..Default::default() };
    let rep = solve(&comp, &vec![1.0; 9], &cfg).unwrap();
    for (a, yi) in rep.x.iter().zip(&y) {
        let want = (2.0 * yi + gamma * cref) / (2.0 + gamma);
        assert!((a - want).abs() <= 1e-6);
        assert!((a - cref).abs() <= 1e-3);
    }
}

#[test]
fn fixed_step_warns_and_trace_has_the_columns() {
    let h = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]).unwrap();
    let m = LinearModel::new(vec![1.0, 2.0], h, spec("kl", &[])).unwrap();
    let cfg = SolverConfig { step: StepPolicy::Fixed(1.0), max_iters: 5, ..Default::default() };
    let rep = solve(&m, &[1.0, 1.0], &cfg).unwrap();
    assert_eq!(rep.warnings.len(), 1);
    assert_eq!(rep.trace.columns, vec!["iter", "objective", "step", "residual"]);
    assert_eq!(rep.trace.rows.len(), 6);
    let mut buf = Vec::new();
    rep.trace.write_to(&mut buf, '\t').unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
}

#[test]
fn kkt_at_convergence_for_eqm_and_kl() {
    // 15 observations of 10 unknowns, diagonally dominant operator, 5% noise
    let mut r = rng(105);
    let h = Matrix::from_fn(15, 10, |i, j| if i == j || i == j + 5 { 1.0 } else { r.gen_range(0.0..0.3) });
    let xt = field(&mut r, 10, 0.5, 2.0);
    let y: Vec<f64> = h.apply(&xt).iter().map(|v| v * (1.0 + r.gen_range(-0.05..0.05))).collect();
    for fam in ["eqm", "kl"] {
        let m = LinearModel::new(y.clone(), h.clone(), spec(fam, &[])).unwrap();
        let x0 = vec![1.0; 10];
        let scale = inf_norm(&m.gradient(&x0).unwrap());
        let cfg = SolverConfig { objective_tol: 0.0, ..Default::default() };
        let rep = solve(&m, &x0, &cfg).unwrap();
        assert!(rep.iterations <= 5000);
        let obj = rep.trace.column("objective").unwrap();
        assert!(obj.windows(2).all(|w| w[1] <= w[0]), "{fam}");
        let k = kkt_check(&rep.x, &m.gradient(&rep.x).unwrap(), scale);
        assert!(k.satisfied, "{fam}: {k:?} after {} iterations", rep.iterations);
    }
}

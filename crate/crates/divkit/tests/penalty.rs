mod common;

use common::*;
use divkit::linalg::LinearOperator;
use divkit::penalty::*;
use divkit::sgm::{weighted_gradient_sum, Objective};
use divkit::Error;

fn invariant_kinds() -> Vec<SmoothKind> {
    vec![
        SmoothKind::Lai(0.5),
        SmoothKind::Lai(-1.3),
        SmoothKind::Lai(2.5),
        SmoothKind::Lbi(2.0),
        SmoothKind::Lbi(0.4),
        SmoothKind::Lbi(-0.7),
        SmoothKind::EqmI,
        SmoothKind::KlI,
        SmoothKind::NeymanI,
        SmoothKind::PearsonI,
    ]
}

fn flux(x: &[f64], g: &[f64]) -> f64 {
    let scale: f64 = x.iter().zip(g).map(|(a, b)| (a * b).abs()).sum();
    weighted_gradient_sum(x, g).abs() / scale
}

#[test]
fn laplacian_examples() {
    let t = Laplacian::new_1d(5).unwrap();
    assert_eq!(t.apply(&[0.0, 0.0, 1.0, 0.0, 0.0]), vec![0.0, 0.5, 0.0, 0.5, 0.0]);
    assert_eq!(t.apply(&[2.5; 5]), vec![2.5; 5]);
    for t in [Laplacian::new_1d(7).unwrap(), Laplacian::new_2d(4, 5).unwrap(), Laplacian::new_2d(3, 3).unwrap()] {
        let m = t.matrix();
        let n = t.len();
        for j in 0..n {
            let s: f64 = (0..n).map(|i| m.get(i, j)).sum();
            assert!((s - 1.0).abs() <= 1e-12);
            for i in 0..n {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        let mut r = rng(n as u64);
        let x = field(&mut r, n, 0.1, 5.0);
        let (a, b): (f64, f64) = (x.iter().sum(), t.apply(&x).iter().sum());
        assert!((a - b).abs() <= 1e-12 * a);
    }
    assert!(matches!(Laplacian::new_1d(2), Err(Error::Shape(_))));
    assert!(matches!(Laplacian::new_2d(3, 2), Err(Error::Shape(_))));
}

#[test]
fn invariant_smoothness_penalties() {
    let t = Laplacian::new_2d(6, 5).unwrap();
    let mut r = rng(200);
    for kind in invariant_kinds() {
        let p = Smoothness::new(kind, t).unwrap();
        for _ in 0..3 {
            let x = field(&mut r, 30, 0.2, 4.0);
            let g = p.gradient(&x).unwrap();
            assert!(flux(&x, &g) <= 1e-10, "{kind:?}");
            let fd = fd_grad(|v| p.value(v).unwrap(), &x, 1e-6);
            assert!(rel_err(&g, &fd, 1e-300) <= 1e-6, "{kind:?}: {}", rel_err(&g, &fd, 1e-300));
            let v = p.value(&x).unwrap();
            assert!((p.value(&x.iter().map(|a| a * 3.0).collect::<Vec<_>>()).unwrap() - v).abs() <= 1e-10 * v.abs());
        }
        let c = vec![1.7; 30];
        assert_eq!(p.value(&c).unwrap(), 0.0);
        assert!(p.gradient(&c).unwrap().iter().all(|&g| g == 0.0));
        assert!(matches!(p.value(&[0.0; 30]), Err(Error::Domain { .. })));
    }
}

#[test]
fn plain_alpha_smoothness_is_not_flux_compatible() {
    let t = Laplacian::new_1d(12).unwrap();
    let p = Smoothness::new(SmoothKind::Alpha(0.5), t).unwrap();
    let mut r = rng(201);
    let x = field(&mut r, 12, 0.2, 4.0);
    let g = p.gradient(&x).unwrap();
    let fd = fd_grad(|v| p.value(v).unwrap(), &x, 1e-6);
    assert!(rel_err(&g, &fd, 1e-300) <= 1e-6);
    assert!(flux(&x, &g) > 1e-6);
}

#[test]
fn singular_parameters_are_rejected() {
    let t = Laplacian::new_1d(5).unwrap();
    for kind in [SmoothKind::Lai(0.0), SmoothKind::Lai(1.0), SmoothKind::Lbi(0.0), SmoothKind::Lbi(1.0)] {
        assert!(matches!(Smoothness::new(kind, t), Err(Error::Param { .. })));
    }
    assert!(SmoothKind::parse("lai").is_err());
    assert_eq!(SmoothKind::parse("lbi:2").unwrap(), SmoothKind::Lbi(2.0));
}

#[test]
fn drqi_is_invariant_with_its_own_factor() {
    let mut r = rng(202);
    let c = field(&mut r, 64, 0.5, 2.0);
    let d = Drqi { c: c.clone() };
    let x = field(&mut r, 64, 0.2, 3.0);
    let v = d.value(&x).unwrap();
    let x3: Vec<f64> = x.iter().map(|a| 3.0 * a).collect();
    assert!((d.value(&x3).unwrap() - v).abs() <= 1e-12 * v);
    let g = d.gradient(&x).unwrap();
    assert!(flux(&x, &g) <= 1e-10);
    let fd = fd_grad(|v| d.value(v).unwrap(), &x, 1e-6);
    assert!(rel_err(&g, &fd, 1e-300) <= 1e-6);
    // x proportional to c is a zero
    let xc: Vec<f64> = c.iter().map(|a| 0.3 * a).collect();
    assert!(d.value(&xc).unwrap() <= 1e-28);
    assert!(inf_norm(&d.gradient(&xc).unwrap()) <= 1e-12);
}

#[test]
fn euclidean_penalties() {
    let t = Laplacian::new_2d(8, 8).unwrap();
    let mut r = rng(203);
    let x = field(&mut r, 64, 0.2, 3.0);
    let drq = Drq { c: 1.1 };
    assert_eq!(drq.value(&[1.1; 64]).unwrap(), 0.0);
    let drl = Drl { t };
    assert_eq!(drl.value(&[0.4; 64]).unwrap(), 0.0);
    for p in [&drq as &dyn Objective, &drl] {
        let g = p.gradient(&x).unwrap();
        let fd = fd_grad(|v| p.value(v).unwrap(), &x, 1e-6);
        assert!(rel_err(&g, &fd, 1e-300) <= 1e-6);
    }
    // x - 2 T x + T T x
    let tx = t.apply(&x);
    let ttx = t.apply(&tx);
    let want: Vec<f64> = (0..64).map(|i| x[i] - 2.0 * tx[i] + ttx[i]).collect();
    assert_eq!(drl.gradient(&x).unwrap(), want);
}

#[test]
fn tikhonov_on_a_column() {
    let n = 6;
    let u = vec![1.0 / n as f64; n];
    let k = Tikhonov::NormToConstant;
    assert_eq!(k.value(&u).unwrap(), 0.0);
    assert!(k.gradient(&u).unwrap().iter().all(|&g| g == 0.0));
    assert_eq!(Tikhonov::Laplacian.value(&[0.3; 6]).unwrap(), 0.0);
    let mut r = rng(204);
    let h = field(&mut r, n, 0.01, 0.4);
    let g = k.gradient(&h).unwrap();
    for i in 0..n {
        assert!((g[i] - (h[i] - 1.0 / n as f64)).abs() <= 1e-15);
    }
    for p in [Tikhonov::NormToConstant, Tikhonov::Laplacian] {
        let fd = fd_grad(|v| p.value(v).unwrap(), &h, 1e-6);
        assert!(rel_err(&p.gradient(&h).unwrap(), &fd, 1e-300) <= 1e-6);
    }
}

#[test]
fn hoyer_measure_and_penalties() {
    assert_eq!(hoyer_sparsity(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
    assert_eq!(hoyer_sparsity(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
    assert!(matches!(hoyer_sparsity(&[0.0, 0.0]), Err(Error::Domain { .. })));
    let mut r = rng(205);
    let x = field(&mut r, 10, 0.1, 2.0);
    let s = hoyer_sparsity(&x).unwrap();
    assert!((0.0..=1.0).contains(&s));

    // the target for the column's own sparsity zeroes both penalties
    let a = hoyer_target(s, x.len()).unwrap();
    for p in [Hoyer::Plain { a }, Hoyer::Invariant { a }] {
        assert!(p.value(&x).unwrap() <= 1e-24);
    }
    let a = hoyer_target(0.9, x.len()).unwrap();
    for p in [Hoyer::Plain { a }, Hoyer::Invariant { a }] {
        let g = p.gradient(&x).unwrap();
        let fd = fd_grad(|v| p.value(v).unwrap(), &x, 1e-6);
        assert!(rel_err(&g, &fd, 1e-300) <= 1e-6, "{p:?}");
    }
    let g = Hoyer::Invariant { a }.gradient(&x).unwrap();
    assert!(flux(&x, &g) <= 1e-10);
    // one dominant entry above a^2 |x|_1, the rest below: the plain gradient has both signs
    let mut spike = vec![0.1; 10];
    spike[0] = 5.0;
    let g = Hoyer::Plain { a }.gradient(&spike).unwrap();
    assert!(g.iter().any(|&v| v > 0.0) && g.iter().any(|&v| v < 0.0));
}

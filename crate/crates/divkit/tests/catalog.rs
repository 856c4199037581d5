mod common;

use common::*;
use divkit::catalog::{ghosh, ghosh_conformance, metadata_table, Family};
use divkit::convex::{self, bregman, csiszar, jensen};
use divkit::{DivergenceSpec, Error};
use proptest::prelude::*;

#[test]
fn frozen_examples() {
    let v = |f: &str, kv: &[(&str, f64)], p: &[f64], q: &[f64]| spec(f, kv).evaluate(p, q).unwrap();
    assert!((v("neyman_chi2", &[], &[1.0, 2.0], &[2.0, 1.0]) - 1.5).abs() < 1e-15);
    assert!((v("hellinger", &[], &[4.0, 1.0], &[1.0, 1.0]) - 1.0).abs() < 1e-15);
    assert!((v("kl", &[], &[2.0, 1.0], &[1.0, 1.0]) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
    assert!((v("eqm", &[], &[1.0, 2.0], &[2.0, 1.0]) - 2.0).abs() < 1e-15);
    let g = spec("kl", &[]).gradient_q(&[2.0, 1.0], &[1.0, 1.0]).unwrap();
    assert_eq!(g, vec![-1.0, 0.0]);
}

#[test]
fn constructor_examples() {
    let sq = convex::square();
    assert!((csiszar(&sq, &[1.0, 2.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    let kl = convex::kl_generator();
    assert!((csiszar(&kl, &[2.0, 1.0], &[1.0, 1.0]).unwrap() - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
    let x2 = divkit::convex::ConvexFn::new("x^2", f64::NEG_INFINITY, f64::INFINITY, |x| x * x, |x| 2.0 * x, |_| 2.0);
    let x2m = divkit::convex::ConvexFn::new("x^2-x", f64::NEG_INFINITY, f64::INFINITY, |x| x * x - x, |x| 2.0 * x - 1.0, |_| 2.0);
    assert!((bregman(&x2, &[1.0, 2.0], &[2.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
    assert!((bregman(&x2m, &[1.0, 2.0], &[2.0, 1.0]).unwrap() - bregman(&sq, &[1.0, 2.0], &[2.0, 1.0]).unwrap()).abs() < 1e-15);
    assert!((jensen(&x2, 0.5, &[0.0, 2.0], &[2.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn affine_shift_invariance_of_bregman_and_jensen() {
    let mut r = rng(11);
    let p = field(&mut r, 12, 0.2, 3.0);
    let q = field(&mut r, 12, 0.2, 3.0);
    let f = convex::xlogx();
    let g = divkit::convex::ConvexFn::new("x ln x + 3x - 2", 0.0, f64::INFINITY, |x| x * x.ln() + 3.0 * x - 2.0, |x| x.ln() + 4.0, |x| 1.0 / x);
    assert!((bregman(&f, &p, &q).unwrap() - bregman(&g, &p, &q).unwrap()).abs() < 1e-12);
    assert!((jensen(&f, 0.3, &p, &q).unwrap() - jensen(&g, 0.3, &p, &q).unwrap()).abs() < 1e-12);
}

#[test]
fn csiszar_bregman_bridge_and_jensen_limit() {
    // standard f: the Csiszar summand at x = p/q is the Bregman summand of (x || 1)
    let f = convex::kl_generator();
    for x in [0.1, 0.7, 1.0, 2.5, 9.0] {
        let b = bregman(&f, &[x], &[1.0]).unwrap();
        assert!((f.eval(x) - b).abs() < 1e-14);
    }
    let mut r = rng(12);
    let p = field(&mut r, 8, 0.2, 3.0);
    let q = field(&mut r, 8, 0.2, 3.0);
    let h = convex::xlogx();
    let js = convex::jensen_scaled(&h, 1e-6, &q, &p).unwrap();
    let b = bregman(&h, &q, &p).unwrap();
    assert!((js - b).abs() <= 1e-4 * b.abs());
}

#[test]
fn oracle_agreement_with_generators() {
    let mut r = rng(13);
    for _ in 0..20 {
        let p = field(&mut r, 16, 0.1, 4.0);
        let q = field(&mut r, 16, 0.1, 4.0);
        for l in [-0.6, 0.3, 1.7, 2.4] {
            let g = convex::power_generator(l);
            let a = spec("alpha", &[("lambda", l)]).evaluate(&p, &q).unwrap();
            assert!(close(a, csiszar(&g, &p, &q).unwrap(), 1e-12));
            let b = spec("beta", &[("lambda", l)]).evaluate(&p, &q).unwrap();
            assert!(close(b, bregman(&g, &p, &q).unwrap(), 1e-12));
        }
        let kl = spec("kl", &[]).evaluate(&p, &q).unwrap();
        assert!(close(kl, csiszar(&convex::kl_generator(), &p, &q).unwrap(), 1e-12));
        let is = spec("itakura_saito", &[]).evaluate(&p, &q).unwrap();
        assert!(close(is, bregman(&convex::neg_log(), &p, &q).unwrap(), 1e-12));
        let he = spec("hellinger", &[]).evaluate(&p, &q).unwrap();
        assert!(close(he, csiszar(&convex::sqrt_square(), &p, &q).unwrap(), 1e-12));
        let js = spec("jensen_shannon_w", &[("beta", 0.3)]).evaluate(&p, &q).unwrap();
        assert!(close(js, jensen(&convex::xlogx(), 0.3, &p, &q).unwrap(), 1e-12));
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(1);
    for f in Family::ALL.iter().copied() {
        for _ in 0..3 {
            let p0 = field(&mut r, 16, 0.2, 3.0);
            let q0 = field(&mut r, 16, 0.2, 3.0);
            let s = sample_spec(&mut r, f, &p0, &q0);
            for k in 0..20 {
                let (p, q) = if k == 0 { (p0.clone(), q0.clone()) } else { fitted_pair(&mut r, &s) };
                let g = s.gradient_q(&p, &q).unwrap();
                let fd = fd_grad(|x| s.evaluate(&p, x).unwrap(), &q, 1e-6);
                let e = rel_err(&g, &fd, 1e-6);
                assert!(e <= 1e-6, "{} {:?}: rel err {e:e}", f.id(), s.params);
            }
        }
    }
}

/// Fields that satisfy the family's parameter-dependent domain.
fn fitted_pair(r: &mut impl rand::Rng, s: &DivergenceSpec) -> (Vec<f64>, Vec<f64>) {
    loop {
        let p = field(r, 16, 0.2, 3.0);
        let q = field(r, 16, 0.2, 3.0);
        if s.evaluate(&p, &q).is_ok() {
            return (p, q);
        }
    }
}

#[test]
fn zero_at_identity() {
    let mut r = rng(2);
    let mut bad = Vec::new();
    for f in standard_families() {
        for _ in 0..5 {
            let p = field(&mut r, 16, 0.2, 3.0);
            let s = sample_spec(&mut r, f, &p, &p);
            let v = s.evaluate(&p, &p).unwrap();
            let g = inf_norm(&s.gradient_q(&p, &p).unwrap());
            if v != 0.0 || g > 1e-10 {
                bad.push(format!("{} {:?}: value {v:e}, gradient {g:e}", f.id(), s.params));
            }
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn ikl_gradient_at_identity_is_minus_one() {
    let s = spec("ikl", &[]);
    assert!(s.family.meta().diagnostic);
    let p = [0.4, 1.0, 2.5];
    assert_eq!(s.gradient_q(&p, &p).unwrap(), vec![-1.0; 3]);
}

#[test]
fn non_negative_on_random_pairs() {
    let mut r = rng(3);
    for f in standard_families() {
        for _ in 0..1000 {
            let p = field(&mut r, 8, 0.05, 5.0);
            let q = field(&mut r, 8, 0.05, 5.0);
            let s = sample_spec(&mut r, f, &p, &q);
            let v = s.evaluate(&p, &q).unwrap();
            assert!(v >= -1e-12, "{} {:?}: {v:e}", f.id(), s.params);
        }
    }
}

#[test]
fn dualities() {
    let mut r = rng(4);
    for _ in 0..50 {
        let p = field(&mut r, 16, 0.1, 4.0);
        let q = field(&mut r, 16, 0.1, 4.0);
        let l = r_param(&mut r);
        let eq = |a: &DivergenceSpec, b: &DivergenceSpec| {
            let x = a.evaluate(&p, &q).unwrap();
            let y = b.evaluate(&q, &p).unwrap();
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{} vs {}", a.id(), b.id());
        };
        eq(&spec("kl_dual", &[]), &spec("kl", &[]));
        eq(&spec("alpha_dual", &[("lambda", l)]), &spec("alpha", &[("lambda", l)]));
        eq(&spec("beta_dual", &[("lambda", l)]), &spec("beta", &[("lambda", l)]));
        eq(&spec("ab_dual", &[("a", 0.7), ("b", 1.6)]), &spec("ab", &[("a", 0.7), ("b", 1.6)]));
        eq(&spec("pearson_chi2", &[]), &spec("neyman_chi2", &[]));
    }
}

fn r_param(r: &mut impl rand::Rng) -> f64 {
    r.gen_range(-0.8..2.6)
}

#[test]
fn symmetric_entries() {
    let mut r = rng(5);
    let sym = [spec("hellinger", &[]), spec("triangular", &[]), spec("m_sa", &[("alpha", 0.5)]), spec("t_sym", &[("alpha", 0.3)])];
    for _ in 0..50 {
        let p = field(&mut r, 16, 0.1, 4.0);
        let q = field(&mut r, 16, 0.1, 4.0);
        for s in &sym {
            let (a, b) = (s.evaluate(&p, &q).unwrap(), s.evaluate(&q, &p).unwrap());
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{}", s.id());
        }
    }
    for f in Family::ALL.iter().filter(|f| f.meta().symmetric) {
        let p = field(&mut r, 16, 0.1, 4.0);
        let q = field(&mut r, 16, 0.1, 4.0);
        let s = sample_spec(&mut r, *f, &p, &q);
        let (a, b) = (s.evaluate(&p, &q).unwrap(), s.evaluate(&q, &p).unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{}", f.id());
    }
}

#[test]
fn mean_divergences_are_pointwise_non_negative() {
    let mut r = rng(6);
    let fams = ["m_sa", "m_sg", "m_sh", "m_ag", "m_ah", "lm_sa", "lm_sg", "lm_sh", "lm_ag", "lm_ah"];
    for _ in 0..500 {
        let (x, y) = (r.gen_range(0.01..10.0), r.gen_range(0.01..10.0));
        let a = r.gen_range(0.05..0.95);
        for f in fams {
            let v = spec(f, &[("alpha", a)]).evaluate(&[x], &[y]).unwrap();
            assert!(v >= -1e-12, "{f} at ({x}, {y}), alpha={a}: {v:e}");
        }
        let w = [a, 1.0 - a];
        let h = divkit::convex::f_mean(&[x, y], &w, |t| 1.0 / t, |t| 1.0 / t).unwrap();
        let g = divkit::convex::power_mean(&[x, y], &w, 0.0).unwrap();
        let ar = divkit::convex::power_mean(&[x, y], &w, 1.0).unwrap();
        let qu = divkit::convex::power_mean(&[x, y], &w, 2.0).unwrap();
        assert!(h <= g * (1.0 + 1e-14) && g <= ar * (1.0 + 1e-14) && ar <= qu * (1.0 + 1e-14));
    }
    use rand::Rng;
}

#[test]
fn special_case_reductions() {
    let mut r = rng(7);
    let cases = [
        spec("alpha", &[("lambda", 1.0)]),
        spec("alpha", &[("lambda", 0.0)]),
        spec("alpha", &[("lambda", 0.5)]),
        spec("beta", &[("lambda", 1.0)]),
        spec("beta", &[("lambda", 0.0)]),
        spec("beta", &[("lambda", 2.0)]),
        spec("ab", &[("a", 1.0), ("b", 1.7)]),
        spec("ab", &[("a", 0.6), ("b", 1.4)]),
        spec("ab_dual", &[("a", 1.0), ("b", 2.3)]),
        spec("havrda_charvat", &[("alpha", 1.8)]),
        spec("alpha_dual", &[("lambda", 0.3)]),
        spec("rukhin", &[("alpha", 1.0)]),
        spec("rukhin", &[("alpha", 0.0)]),
        spec("rukhin", &[("alpha", 0.5)]),
        spec("toussaint", &[]),
        spec("jensen_power", &[("lambda", 1.6), ("alpha", 0.4)]),
        spec("jensen_hc", &[("alpha", 1.0), ("beta", 0.3)]),
        spec("sharma_mittal", &[("alpha", 0.6), ("s", 1.0)]),
        spec("sharma_mittal", &[("alpha", 0.6), ("s", 0.6)]),
        spec("arimoto", &[("delta", 2.0)]),
        spec("arimoto_w", &[("delta", 1.0), ("alpha", 0.3)]),
        spec("fg", &[("s", 1.0), ("alpha", 0.3)]),
        spec("fg", &[("s", 0.0), ("alpha", 0.3)]),
        spec("dragomir_jd_d", &[("alpha", 0.3), ("d", 1.0)]),
        spec("bathia_singh", &[("alpha", 0.0)]),
        spec("m_ag", &[("alpha", 0.4)]),
        spec("m_ag", &[("alpha", 1.0)]),
    ];
    for s in &cases {
        let (t, c) = s.reduce_special_case().unwrap_or_else(|| panic!("{} {:?} has no reduction", s.id(), s.params));
        for _ in 0..20 {
            let p = field(&mut r, 16, 0.1, 4.0);
            let q = field(&mut r, 16, 0.1, 4.0);
            let a = s.evaluate(&p, &q).unwrap();
            let b = c * t.evaluate(&p, &q).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs(), "{} -> {}: {a} vs {b}", s.id(), t.id());
        }
    }
    // near-singular parameters take the limit branch and agree with the reduced form
    for (f, kv, g) in [("alpha", ("lambda", 1.0 + 1e-9), "kl"), ("alpha", ("lambda", 1e-9), "kl_dual"), ("beta", ("lambda", 1e-9), "itakura_saito")] {
        let p = field(&mut r, 16, 0.1, 4.0);
        let q = field(&mut r, 16, 0.1, 4.0);
        let a = spec(f, &[kv]).evaluate(&p, &q).unwrap();
        let b = spec(g, &[]).evaluate(&p, &q).unwrap();
        assert!((a - b).abs() <= 1e-8 * b);
    }
    assert!(spec("kl", &[]).reduce_special_case().is_none());
    use rand::Rng;
    let _ = r.gen::<u8>();
}

#[test]
fn ghosh_matches_ab() {
    let mut r = rng(8);
    for _ in 0..20 {
        let p = field(&mut r, 16, 0.1, 4.0);
        let q = field(&mut r, 16, 0.1, 4.0);
        assert!(ghosh_conformance(1.0, 1.0, &p, &q).unwrap() <= 1e-10 * ghosh(1.0, 1.0, &p, &q).unwrap().max(1.0));
        assert!(ghosh_conformance(0.7, 0.6, &p, &q).unwrap() <= 1e-10 * ghosh(0.7, 0.6, &p, &q).unwrap().max(1.0));
        assert!(ghosh_conformance(1.3, -0.4, &p, &q).unwrap() <= 1e-10 * ghosh(1.3, -0.4, &p, &q).unwrap().max(1.0));
        // A = 1, B = 1 is half the squared distance
        let e = spec("eqm", &[]).evaluate(&p, &q).unwrap();
        assert!((ghosh(1.0, 1.0, &p, &q).unwrap() - 0.5 * e).abs() <= 1e-12 * e);
    }
    assert!(matches!(ghosh_conformance(-1.0, 1.0, &[1.0], &[2.0]), Err(Error::Param { .. })));
}

#[test]
fn gradient_splits_recombine() {
    let mut r = rng(9);
    for f in Family::ALL.iter().copied() {
        let p = field(&mut r, 16, 0.2, 3.0);
        let q = field(&mut r, 16, 0.2, 3.0);
        let s = sample_spec(&mut r, f, &p, &q);
        if let Some((u, v)) = s.gradient_split(&p, &q).unwrap() {
            let g = s.gradient_q(&p, &q).unwrap();
            for i in 0..16 {
                assert!(u[i] >= 0.0 && v[i] >= 0.0, "{}", f.id());
                assert!((u[i] - v[i] - g[i]).abs() <= 1e-12 * u[i].max(v[i]).max(1.0), "{}", f.id());
            }
        }
    }
}

#[test]
fn domain_and_shape_errors() {
    let s = spec("kl", &[]);
    assert!(matches!(s.evaluate(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
    assert!(matches!(s.evaluate(&[1.0, 1.0], &[1.0, 0.0]), Err(Error::Domain { index: Some(1), .. })));
    assert!(matches!(s.evaluate(&[1.0, -1.0], &[1.0, 1.0]), Err(Error::Domain { index: Some(1), .. })));
    assert!(s.evaluate(&[0.0, 1.0], &[1.0, 1.0]).is_ok());
    let fd = spec("fermi_dirac2", &[("beta", 2.0), ("d", 0.5)]);
    assert!(matches!(fd.evaluate(&[1.0, 2.5], &[1.0, 1.0]), Err(Error::Domain { index: Some(1), .. })));
}

#[test]
fn metadata_export() {
    let t = metadata_table(',');
    assert!(t.starts_with("family,constructor,params"));
    assert!(t.lines().any(|l| l.starts_with("kl,csiszar,")));
}

proptest! {
    #[test]
    fn kl_and_alpha_non_negative(v in proptest::collection::vec((0.01f64..50.0, 0.01f64..50.0), 1..20), l in -2.0f64..3.0) {
        let (p, q): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        prop_assert!(spec("kl", &[]).evaluate(&p, &q).unwrap() >= -1e-12);
        if let Ok(s) = DivergenceSpec::parse("alpha", &[("lambda".into(), l)]) {
            prop_assert!(s.evaluate(&p, &q).unwrap() >= -1e-12);
        }
    }
}

//! Oracles and samplers shared by the integration tests.
#![allow(dead_code)]

use divkit::{DivergenceSpec, Family, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform field on `[lo, hi]`.
pub fn field(r: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}

/// Central differences with relative step `rel * |x_i|`.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = rel * x[i].abs().max(1e-8);
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `||a - b||_inf / max(||b||_inf, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    inf_norm(&d) / inf_norm(b).max(floor)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Random admissible parameters for `f`, fitted to the fields where the family's
/// domain depends on them.
pub fn sample_spec(r: &mut impl Rng, f: Family, p: &[f64], q: &[f64]) -> DivergenceSpec {
    for _ in 0..200 {
        let mut pr = Params::default();
        for s in f.meta().params {
            let v = match (f, s.name) {
                (Family::FermiDirac1, "beta") => {
                    let m = p.iter().zip(q).fold(1.0f64, |m, (a, b)| m.max(a / b));
                    m * r.gen_range(1.2..3.0)
                }
                (Family::FermiDirac2, "beta") => {
                    let m = p.iter().chain(q).fold(0.0f64, |m, &a| m.max(a));
                    m * r.gen_range(1.2..3.0)
                }
                _ if s.sample.0 == s.sample.1 => s.sample.0,
                _ => r.gen_range(s.sample.0..s.sample.1),
            };
            pr.set(s.name, v).unwrap();
        }
        if let Ok(spec) = DivergenceSpec::new(f, pr) {
            if spec.evaluate(p, q).is_ok() {
                return spec;
            }
        }
    }
    panic!("no admissible parameters sampled for {}", f.id());
}

/// Non-diagnostic families.
pub fn standard_families() -> impl Iterator<Item = Family> {
    Family::ALL.iter().copied().filter(|f| !f.meta().diagnostic)
}

pub fn spec(f: &str, kv: &[(&str, f64)]) -> DivergenceSpec {
    let kv: Vec<(String, f64)> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    DivergenceSpec::parse(f, &kv).unwrap()
}

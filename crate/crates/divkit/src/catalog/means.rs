//! Differences of weighted means and their log forms.
//!
//! | id | upper | lower | prefactor |
//! |---|---|---|---|
//! | `sa` | quadratic | arithmetic | 1 |
//! | `sg` | quadratic | geometric | 1 |
//! | `sh` | quadratic | harmonic | 1 |
//! | `ag` | arithmetic | geometric | `1/(1-alpha)` |
//! | `ah` | arithmetic | harmonic | 1 |

use super::entropy::kl;
use super::{near_param as near, sep, sepv, DivergenceSpec, Family};
use crate::field::sum;

#[derive(Clone, Copy)]
enum M {
    A,
    G,
    H,
    Q,
}

fn mean(m: M, p: f64, q: f64, a: f64) -> f64 {
    match m {
        M::A => a * p + (1.0 - a) * q,
        M::G => p.powf(a) * q.powf(1.0 - a),
        M::H => p * q / ((1.0 - a) * p + a * q),
        M::Q => (a * p * p + (1.0 - a) * q * q).sqrt(),
    }
}

fn mean_dq(m: M, p: f64, q: f64, a: f64) -> f64 {
    match m {
        M::A => 1.0 - a,
        M::G => (1.0 - a) * (p / q).powf(a),
        M::H => {
            let d = (1.0 - a) * p + a * q;
            (1.0 - a) * p * p / (d * d)
        }
        M::Q => (1.0 - a) * q / mean(M::Q, p, q, a),
    }
}

fn pair(f: Family) -> (M, M, bool) {
    use Family::*;
    match f {
        MSa => (M::Q, M::A, false),
        MSg => (M::Q, M::G, false),
        MSh => (M::Q, M::H, false),
        MAg => (M::A, M::G, false),
        MAh => (M::A, M::H, false),
        LmSa => (M::Q, M::A, true),
        LmSg => (M::Q, M::G, true),
        LmSh => (M::Q, M::H, true),
        LmAg => (M::A, M::G, true),
        LmAh => (M::A, M::H, true),
        _ => unreachable!(),
    }
}

fn prefactor(f: Family, a: f64) -> f64 {
    if matches!(f, Family::MAg | Family::LmAg) {
        1.0 / (1.0 - a)
    } else {
        1.0
    }
}

pub(super) fn value(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
    let a = s.p("alpha");
    let (u, l, log) = pair(s.family);
    if matches!(s.family, Family::MAg | Family::LmAg) && near(a, 1.0) {
        return if log { kl(p, q) / sum(p) } else { kl(p, q) };
    }
    let su = sep(p, q, |x, y| mean(u, x, y, a));
    let sl = sep(p, q, |x, y| mean(l, x, y, a));
    let c = prefactor(s.family, a);
    if log {
        c * (su.ln() - sl.ln())
    } else {
        c * (su - sl)
    }
}

pub(super) fn grad(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> Vec<f64> {
    let a = s.p("alpha");
    let (u, l, log) = pair(s.family);
    if matches!(s.family, Family::MAg | Family::LmAg) && near(a, 1.0) {
        let k = if log { 1.0 / sum(p) } else { 1.0 };
        return sepv(p, q, |x, y| k * (1.0 - x / y));
    }
    let c = prefactor(s.family, a);
    if log {
        let su = sep(p, q, |x, y| mean(u, x, y, a));
        let sl = sep(p, q, |x, y| mean(l, x, y, a));
        sepv(p, q, |x, y| c * (mean_dq(u, x, y, a) / su - mean_dq(l, x, y, a) / sl))
    } else {
        sepv(p, q, |x, y| c * (mean_dq(u, x, y, a) - mean_dq(l, x, y, a)))
    }
}

//! Alpha, beta and alpha-beta families with their duals.

use super::entropy::{alpha_grad, alpha_value, jensen_hc, jensen_hc_grad, kl};
use super::{near_param as near, sep, sepv, DivergenceSpec, Family};

pub(super) fn value(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
    use Family::*;
    match s.family {
        Alpha => alpha_value(s.p("lambda"), p, q),
        AlphaDual => alpha_value(s.p("lambda"), q, p),
        Beta => beta(s.p("lambda"), p, q),
        BetaDual => beta(s.p("lambda"), q, p),
        JensenPower => jensen_hc(s.p("lambda"), s.p("alpha"), p, q),
        Ab => ab(s.p("a"), s.p("b"), p, q),
        AbDual => ab(s.p("a"), s.p("b"), q, p),
        Eqm => sep(p, q, |a, b| (a - b) * (a - b)),
        ItakuraSaito => itakura_saito(p, q),
        _ => unreachable!(),
    }
}

pub(super) fn grad(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> Vec<f64> {
    use Family::*;
    match s.family {
        Alpha => alpha_grad(s.p("lambda"), p, q),
        AlphaDual => {
            let l = s.p("lambda");
            if near(l, 1.0) {
                sepv(p, q, |a, b| (b / a).ln())
            } else {
                sepv(p, q, |a, b| ((a / b).powf(1.0 - l) - 1.0) / (l - 1.0))
            }
        }
        Beta => {
            let l = s.p("lambda");
            sepv(p, q, |a, b| b.powf(l - 2.0) * (b - a))
        }
        BetaDual => {
            let l = s.p("lambda");
            if near(l, 1.0) {
                sepv(p, q, |a, b| (b / a).ln())
            } else {
                sepv(p, q, |a, b| (b.powf(l - 1.0) - a.powf(l - 1.0)) / (l - 1.0))
            }
        }
        JensenPower => jensen_hc_grad(s.p("lambda"), s.p("alpha"), p, q),
        Ab => {
            let (a, b) = (s.p("a"), s.p("b"));
            sepv(p, q, |x, y| (y.powf(a + b - 2.0) - x.powf(a) * y.powf(b - 2.0)) / a)
        }
        AbDual => {
            let (a, b) = (s.p("a"), s.p("b"));
            sepv(p, q, |x, y| (y.powf(a + b - 2.0) - y.powf(a - 1.0) * x.powf(b - 1.0)) / (b - 1.0))
        }
        Eqm => sepv(p, q, |a, b| 2.0 * (b - a)),
        ItakuraSaito => sepv(p, q, |a, b| 1.0 / b - a / (b * b)),
        _ => unreachable!(),
    }
}

fn itakura_saito(p: &[f64], q: &[f64]) -> f64 {
    sep(p, q, |a, b| a / b - (a / b).ln() - 1.0)
}

fn beta(l: f64, p: &[f64], q: &[f64]) -> f64 {
    if near(l, 1.0) {
        kl(p, q)
    } else if near(l, 0.0) {
        itakura_saito(p, q)
    } else {
        sep(p, q, |a, b| a.powf(l) - l * a * b.powf(l - 1.0) - (1.0 - l) * b.powf(l)) / (l * (l - 1.0))
    }
}

fn ab(a: f64, b: f64, p: &[f64], q: &[f64]) -> f64 {
    let c = a + b - 1.0;
    let s = sep(p, q, |x, y| x.powf(a) * y.powf(b - 1.0) - a / c * x.powf(c) - (b - 1.0) / c * y.powf(c));
    -s / (a * (b - 1.0))
}

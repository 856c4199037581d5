//! Entropy-type families: KL and its relatives, Havrda-Charvat, Sharma-Mittal,
//! Renyi, Arimoto and the Jensen entropy differences.

use super::{near_param as near, sep, sepv, DivergenceSpec, Family};
use crate::convex::power_mean2 as power_mean;
use crate::field::{sum, xlogxy};

pub(super) fn value(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
    use Family::*;
    match s.family {
        Kl => kl(p, q),
        KlDual => kl(q, p),
        KlSym => sep(p, q, |a, b| (a - b) * (a / b).ln()),
        Ikl => sep(p, q, xlogxy),
        HavrdaCharvat => alpha_value(s.p("alpha"), p, q),
        SharmaMittal => sharma_mittal(s.p("alpha"), s.p("s"), p, q),
        RenyiExt => renyi(s.p("alpha"), p, q),
        Arimoto => 0.5 * arimoto_ext(s.p("delta"), 1.0, 0.5, p, q),
        ArimotoW => arimoto_ext(s.p("delta"), 1.0, s.p("alpha"), p, q),
        ArimotoExt => arimoto_ext(s.p("delta"), s.p("gamma"), s.p("alpha"), p, q),
        JensenShannonW => js(s.p("beta"), p, q),
        JensenHc => jensen_hc(s.p("alpha"), s.p("beta"), p, q),
        JensenHcGeo => {
            let (a, b) = (s.p("alpha"), s.p("beta"));
            sep(p, q, |x, y| b * x.powf(a) + (1.0 - b) * y.powf(a) - geo(x, y, b).powf(a)) / (a * (a - 1.0))
        }
        JensenRenyi => {
            let (a, b) = (s.p("alpha"), s.p("beta"));
            if near(a, 0.0) {
                return sep(p, q, |x, y| (mix(x, y, b) / geo(x, y, b)).ln()) / p.len() as f64;
            }
            let (sp, sq) = (powsum(p, a), powsum(q, a));
            let sm = sep(p, q, |x, y| mix(x, y, b).powf(a));
            (b * sp.ln() + (1.0 - b) * sq.ln() - sm.ln()) / (a * (a - 1.0))
        }
        JensenRenyiGeo => {
            let (a, b) = (s.p("alpha"), s.p("beta"));
            let (sp, sq) = (powsum(p, a), powsum(q, a));
            let sg = sep(p, q, |x, y| geo(x, y, b).powf(a));
            (b * sp.ln() + (1.0 - b) * sq.ln() - sg.ln()) / (a * (a - 1.0))
        }
        _ => unreachable!(),
    }
}

pub(super) fn grad(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> Vec<f64> {
    use Family::*;
    match s.family {
        Kl => sepv(p, q, |a, b| 1.0 - a / b),
        KlDual => sepv(p, q, |a, b| (b / a).ln()),
        KlSym => sepv(p, q, |a, b| 1.0 - a / b - (a / b).ln()),
        Ikl => sepv(p, q, |a, b| -a / b),
        HavrdaCharvat => alpha_grad(s.p("alpha"), p, q),
        SharmaMittal => sharma_mittal_grad(s.p("alpha"), s.p("s"), p, q),
        RenyiExt => renyi_grad(s.p("alpha"), p, q),
        Arimoto => arimoto_ext_grad(s.p("delta"), 1.0, 0.5, p, q).into_iter().map(|g| 0.5 * g).collect(),
        ArimotoW => arimoto_ext_grad(s.p("delta"), 1.0, s.p("alpha"), p, q),
        ArimotoExt => arimoto_ext_grad(s.p("delta"), s.p("gamma"), s.p("alpha"), p, q),
        JensenShannonW => {
            let b = s.p("beta");
            sepv(p, q, |x, y| (1.0 - b) * (y / mix(x, y, b)).ln())
        }
        JensenHc => jensen_hc_grad(s.p("alpha"), s.p("beta"), p, q),
        JensenHcGeo => {
            let (a, b) = (s.p("alpha"), s.p("beta"));
            sepv(p, q, |x, y| (1.0 - b) / (a - 1.0) * (y.powf(a - 1.0) - geo(x, y, b).powf(a) / y))
        }
        JensenRenyi => {
            let (a, b) = (s.p("alpha"), s.p("beta"));
            let sq = powsum(q, a);
            let sm = sep(p, q, |x, y| mix(x, y, b).powf(a));
            sepv(p, q, |x, y| (1.0 - b) / (a - 1.0) * (y.powf(a - 1.0) / sq - mix(x, y, b).powf(a - 1.0) / sm))
        }
        JensenRenyiGeo => {
            let (a, b) = (s.p("alpha"), s.p("beta"));
            let sq = powsum(q, a);
            let sg = sep(p, q, |x, y| geo(x, y, b).powf(a));
            sepv(p, q, |x, y| (1.0 - b) / (a - 1.0) * (y.powf(a - 1.0) / sq - geo(x, y, b).powf(a) / (y * sg)))
        }
        _ => unreachable!(),
    }
}

pub(crate) fn kl(p: &[f64], q: &[f64]) -> f64 {
    sep(p, q, |a, b| xlogxy(a, b) + b - a)
}

fn mix(x: f64, y: f64, b: f64) -> f64 {
    b * x + (1.0 - b) * y
}

fn geo(x: f64, y: f64, b: f64) -> f64 {
    x.powf(b) * y.powf(1.0 - b)
}

fn powsum(v: &[f64], a: f64) -> f64 {
    v.iter().map(|x| x.powf(a)).sum()
}

/// Alpha (Havrda-Charvat) divergence with its KL limits.
pub(crate) fn alpha_value(l: f64, p: &[f64], q: &[f64]) -> f64 {
    if near(l, 1.0) {
        kl(p, q)
    } else if near(l, 0.0) {
        kl(q, p)
    } else {
        sep(p, q, |a, b| a.powf(l) * b.powf(1.0 - l) - l * a - (1.0 - l) * b) / (l * (l - 1.0))
    }
}

pub(crate) fn alpha_grad(l: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    if near(l, 0.0) {
        sepv(p, q, |a, b| (b / a).ln())
    } else {
        sepv(p, q, |a, b| (1.0 - (a / b).powf(l)) / l)
    }
}

fn sharma_mittal(a: f64, s: f64, p: &[f64], q: &[f64]) -> f64 {
    if near(a, 0.0) {
        return sum(q).powf(-s) * kl(q, p);
    }
    if near(s, 1.0) {
        return renyi(a, p, q);
    }
    let e = (s - 1.0) / (a - 1.0);
    let sg = sep(p, q, |x, y| geo(x, y, a));
    let sa = sep(p, q, |x, y| mix(x, y, a));
    (sg.powf(e) - sa.powf(e)) / (a * (s - 1.0))
}

fn sharma_mittal_grad(a: f64, s: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    if near(a, 0.0) {
        let sq = sum(q);
        let k = kl(q, p);
        return sepv(p, q, |x, y| -s * sq.powf(-s - 1.0) * k + sq.powf(-s) * (y / x).ln());
    }
    if near(s, 1.0) {
        return renyi_grad(a, p, q);
    }
    let e1 = (s - a) / (a - 1.0);
    let sg = sep(p, q, |x, y| geo(x, y, a));
    let sa = sep(p, q, |x, y| mix(x, y, a));
    sepv(p, q, |x, y| (sa.powf(e1) - sg.powf(e1) * (x / y).powf(a)) / a)
}

fn renyi(a: f64, p: &[f64], q: &[f64]) -> f64 {
    if near(a, 1.0) {
        return kl(p, q) / sum(p);
    }
    if near(a, 0.0) {
        return kl(q, p) / sum(q);
    }
    let sg = sep(p, q, |x, y| geo(x, y, a));
    let sa = sep(p, q, |x, y| mix(x, y, a));
    (sg.ln() - sa.ln()) / (a * (a - 1.0))
}

fn renyi_grad(a: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    if near(a, 1.0) {
        let sp = sum(p);
        return sepv(p, q, |x, y| (1.0 - x / y) / sp);
    }
    if near(a, 0.0) {
        let sq = sum(q);
        let k = kl(q, p);
        return sepv(p, q, |x, y| (y / x).ln() / sq - k / (sq * sq));
    }
    let sg = sep(p, q, |x, y| geo(x, y, a));
    let sa = sep(p, q, |x, y| mix(x, y, a));
    sepv(p, q, |x, y| (1.0 / sa - (x / y).powf(a) / sg) / a)
}

fn js(b: f64, p: &[f64], q: &[f64]) -> f64 {
    sep(p, q, |x, y| {
        let m = mix(x, y, b);
        b * xlogxy(x, m) + (1.0 - b) * xlogxy(y, m)
    })
}

/// `1/((1-a)(d-1)) sum [M_d - M_g]` with weighted power means of order `d`, `g`.
fn arimoto_ext(d: f64, g: f64, a: f64, p: &[f64], q: &[f64]) -> f64 {
    if near(d, 1.0) && near(g, 1.0) {
        // removable: derivative of the power mean in its order at 1
        return js(a, p, q) / (1.0 - a);
    }
    sep(p, q, |x, y| power_mean(x, y, a, d) - power_mean(x, y, a, g)) / ((1.0 - a) * (d - 1.0))
}

fn mean_dq(x: f64, y: f64, a: f64, t: f64) -> f64 {
    if near(t, 0.0) {
        (1.0 - a) * (x / y).powf(a)
    } else {
        let w = a * x.powf(t) + (1.0 - a) * y.powf(t);
        (1.0 - a) * y.powf(t - 1.0) * w.powf((1.0 - t) / t)
    }
}

fn arimoto_ext_grad(d: f64, g: f64, a: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    if near(d, 1.0) && near(g, 1.0) {
        return sepv(p, q, |x, y| (y / mix(x, y, a)).ln());
    }
    sepv(p, q, |x, y| (mean_dq(x, y, a, d) - mean_dq(x, y, a, g)) / ((1.0 - a) * (d - 1.0)))
}

/// Jensen difference of the power entropy `x^a / (a (a-1))`, weight `b` on `p`.
pub(crate) fn jensen_hc(a: f64, b: f64, p: &[f64], q: &[f64]) -> f64 {
    if near(a, 1.0) {
        return js(b, p, q);
    }
    if near(a, 0.0) {
        return sep(p, q, |x, y| (mix(x, y, b) / geo(x, y, b)).ln());
    }
    sep(p, q, |x, y| b * x.powf(a) + (1.0 - b) * y.powf(a) - mix(x, y, b).powf(a)) / (a * (a - 1.0))
}

pub(crate) fn jensen_hc_grad(a: f64, b: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    if near(a, 1.0) {
        return sepv(p, q, |x, y| (1.0 - b) * (y / mix(x, y, b)).ln());
    }
    sepv(p, q, |x, y| (1.0 - b) / (a - 1.0) * (y.powf(a - 1.0) - mix(x, y, b).powf(a - 1.0)))
}

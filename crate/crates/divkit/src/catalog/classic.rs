//! Chi-square type, Hellinger, Polya urn, Bose-Einstein and Fermi-Dirac
//! families, and the hyperbolic-sine family.

use super::entropy::kl;
use super::{near_param as near, sep, sepv, DivergenceSpec, Family};
use crate::convex::gen_log;

pub(super) fn value(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
    use Family::*;
    match s.family {
        NeymanChi2 => sep(p, q, |a, b| (a - b) * (a - b) / b),
        PearsonChi2 => sep(p, q, |a, b| (b - a) * (b - a) / a),
        Rukhin => {
            let al = s.p("alpha");
            sep(p, q, |a, b| (a - b) * (a - b) / (al * b + (1.0 - al) * a))
        }
        Hellinger => sep(p, q, |a, b| (a.sqrt() - b.sqrt()).powi(2)),
        Triangular => sep(p, q, |a, b| (a - b) * (a - b) / (a + b)),
        Toussaint => sep(p, q, |a, b| 0.5 * (a - b) * (a - b) / (a + b)),
        HenzePenrose => {
            let (be, c) = (s.p("beta"), 1.0 - s.p("beta"));
            let (aa, bb) = hp_consts(be);
            sep(p, q, |a, b| (be * be * a * a + c * c * b * b) / (be * a + c * b) + bb * a - (aa + bb) * b)
        }
        Polya => polya(s.p("gamma"), p, q),
        PolyaDual => polya(s.p("gamma"), q, p),
        PolyaBregman => {
            let g = s.p("gamma");
            sep(p, q, |a, b| a * (a / b).ln() - (1.0 + g * a) / g * ((1.0 + g * a) / (1.0 + g * b)).ln())
        }
        BoseEinstein1 => {
            let (al, d) = (s.p("alpha"), s.p("d"));
            sep(p, q, |a, b| a * gen_log(a / b, d) + (al * b + a) * gen_log((al + 1.0) * b / (al * b + a), d))
        }
        BoseEinstein2 => {
            let (al, d) = (s.p("alpha"), s.p("d"));
            sep(p, q, |a, b| a * gen_log(a / b, d) + (al + a) * gen_log((al + b) / (al + a), d))
        }
        FermiDirac1 => {
            let (be, d) = (s.p("beta"), s.p("d"));
            sep(p, q, |a, b| a * gen_log(a / b, d) + (be * b - a) * gen_log((be * b - a) / ((be - 1.0) * b), d))
        }
        FermiDirac2 => {
            let (be, d) = (s.p("beta"), s.p("d"));
            sep(p, q, |a, b| a * gen_log(a / b, d) + (be - a) * gen_log((be - a) / (be - b), d))
        }
        BathiaSingh => {
            let al = s.p("alpha");
            if near(al, 0.0) {
                return kl(p, q);
            }
            sep(p, q, |a, b| a * (al * (a / b).ln()).sinh() + al * (b - a)) / al.sinh()
        }
        _ => unreachable!(),
    }
}

pub(super) fn grad(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> Vec<f64> {
    use Family::*;
    match s.family {
        NeymanChi2 => sepv(p, q, |a, b| 1.0 - a * a / (b * b)),
        PearsonChi2 => sepv(p, q, |a, b| 2.0 * (b - a) / a),
        Rukhin => {
            let al = s.p("alpha");
            sepv(p, q, |a, b| {
                let m = al * b + (1.0 - al) * a;
                (a - b) * (al * a - al * b - 2.0 * a) / (m * m)
            })
        }
        Hellinger => sepv(p, q, |a, b| 1.0 - (a / b).sqrt()),
        Triangular => sepv(p, q, |a, b| 1.0 - 4.0 * a * a / ((a + b) * (a + b))),
        Toussaint => sepv(p, q, |a, b| 0.5 - 2.0 * a * a / ((a + b) * (a + b))),
        HenzePenrose => {
            let (be, c) = (s.p("beta"), 1.0 - s.p("beta"));
            let (aa, bb) = hp_consts(be);
            sepv(p, q, |a, b| {
                let m = be * a + c * b;
                (2.0 * c * c * b * m - c * (be * be * a * a + c * c * b * b)) / (m * m) - (aa + bb)
            })
        }
        Polya => {
            let g = s.p("gamma");
            sepv(p, q, |a, b| ((1.0 + g) * b / (b + g * a)).ln() / g)
        }
        PolyaDual => {
            let g = s.p("gamma");
            sepv(p, q, |a, b| ((1.0 + g) * b / (a + g * b)).ln())
        }
        PolyaBregman => {
            let g = s.p("gamma");
            sepv(p, q, |a, b| (b - a) / (b * (1.0 + g * b)))
        }
        BoseEinstein1 => {
            let (al, d) = (s.p("alpha"), s.p("d"));
            sepv(p, q, |a, b| {
                let r = (al + 1.0) * b / (al * b + a);
                -(a / b).powf(2.0 - d) + (a / b) * r.powf(1.0 - d) + al * gen_log(r, d)
            })
        }
        BoseEinstein2 => {
            let (al, d) = (s.p("alpha"), s.p("d"));
            sepv(p, q, |a, b| -(a / b).powf(2.0 - d) + ((al + a) / (al + b)).powf(d))
        }
        FermiDirac1 => {
            let (be, d) = (s.p("beta"), s.p("d"));
            sepv(p, q, |a, b| {
                let r = (be * b - a) / ((be - 1.0) * b);
                -(a / b).powf(2.0 - d) + (a / b) * r.powf(1.0 - d) + be * gen_log(r, d)
            })
        }
        FermiDirac2 => {
            let (be, d) = (s.p("beta"), s.p("d"));
            sepv(p, q, |a, b| -(a / b).powf(2.0 - d) + ((be - a) / (be - b)).powf(2.0 - d))
        }
        BathiaSingh => {
            let al = s.p("alpha");
            if near(al, 0.0) {
                return sepv(p, q, |a, b| 1.0 - a / b);
            }
            sepv(p, q, |a, b| {
                let x = a / b;
                al / al.sinh() * (1.0 - x * (al * x.ln()).cosh())
            })
        }
        _ => unreachable!(),
    }
}

fn hp_consts(be: f64) -> (f64, f64) {
    let c = 1.0 - be;
    (be * be + c * c, 2.0 * be.powi(3) - 4.0 * be * be + be)
}

fn polya(g: f64, p: &[f64], q: &[f64]) -> f64 {
    let k = (1.0 + g).ln() / g;
    sep(p, q, |a, b| {
        let m = b + g * a;
        a * (a / m).ln() + b / g * (b / m).ln() + k * m
    })
}

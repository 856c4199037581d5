//! Divergences between a field and a mixture, and the three-parameter
//! mean-pair family.

use super::{near_param as near, sep, sepv, DivergenceSpec, Family};
use crate::convex::gen_log;

pub(super) fn value(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
    use Family::*;
    match s.family {
        FDiv => f_div(s.p("alpha"), p, q),
        GDiv => g_div(s.p("alpha"), p, q),
        TSym => {
            let a = s.p("alpha");
            g_div(a, p, q) + g_div(a, q, p)
        }
        Fg => {
            let (sv, a) = (s.p("s"), s.p("alpha"));
            if near(sv, 1.0) {
                g_div(a, p, q)
            } else if near(sv, 0.0) {
                f_div(a, p, q)
            } else {
                sep(p, q, |x, y| {
                    let m = a * x + (1.0 - a) * y;
                    m.powf(sv) * x.powf(1.0 - sv) - sv * m - (1.0 - sv) * x
                }) / (sv * (sv - 1.0))
            }
        }
        DragomirJd => {
            let a = s.p("alpha");
            (1.0 - a) * sep(p, q, |x, y| (x - y) * ((a * y + (1.0 - a) * x) / y).ln())
        }
        DragomirJdD => {
            let (a, d) = (s.p("alpha"), s.p("d"));
            (1.0 - a) * sep(p, q, |x, y| (x - y) * gen_log((a * y + (1.0 - a) * x) / y, d))
        }
        _ => {
            let t = Taneja::new(s);
            let (sa, sb) = t.sums(p, q);
            if near(t.s, 1.0) {
                (sa.ln() - sb.ln()) / (t.r - 1.0)
            } else {
                let e = (t.s - 1.0) / (t.r - 1.0);
                (sa.powf(e) - sb.powf(e)) / (t.s - 1.0)
            }
        }
    }
}

pub(super) fn grad(s: &DivergenceSpec, p: &[f64], q: &[f64]) -> Vec<f64> {
    use Family::*;
    match s.family {
        FDiv => f_grad(s.p("alpha"), p, q),
        GDiv => g_grad(s.p("alpha"), p, q),
        TSym => {
            let a = s.p("alpha");
            sepv(p, q, |x, y| {
                let m = a * x + (1.0 - a) * y;
                let n = a * y + (1.0 - a) * x;
                (1.0 - a) * (m / x).ln() + a * (n / y).ln() + 1.0 - n / y
            })
        }
        Fg => {
            let (sv, a) = (s.p("s"), s.p("alpha"));
            if near(sv, 1.0) {
                g_grad(a, p, q)
            } else if near(sv, 0.0) {
                f_grad(a, p, q)
            } else {
                sepv(p, q, |x, y| (1.0 - a) / (sv - 1.0) * (((a * x + (1.0 - a) * y) / x).powf(sv - 1.0) - 1.0))
            }
        }
        DragomirJd => {
            let a = s.p("alpha");
            sepv(p, q, |x, y| {
                let n = a * y + (1.0 - a) * x;
                (1.0 - a) * (-(n / y).ln() - (x - y) * (1.0 - a) * x / (y * n))
            })
        }
        DragomirJdD => {
            let (a, d) = (s.p("alpha"), s.p("d"));
            sepv(p, q, |x, y| {
                let r = (a * y + (1.0 - a) * x) / y;
                (1.0 - a) * (-gen_log(r, d) - (x - y) * r.powf(-d) * (1.0 - a) * x / (y * y))
            })
        }
        _ => {
            let t = Taneja::new(s);
            let (sa, sb) = t.sums(p, q);
            let (wa, wb) = if near(t.s, 1.0) {
                (1.0 / sa, 1.0 / sb)
            } else {
                let e1 = (t.s - 1.0) / (t.r - 1.0) - 1.0;
                (sa.powf(e1), sb.powf(e1))
            };
            sepv(p, q, |x, y| {
                let (l, u) = (t.lo.eval(x, y, t.b), t.hi.eval(x, y, t.b));
                let (dl, du) = (t.lo.dq(x, y, t.b), t.hi.dq(x, y, t.b));
                // d(L^(1-r) U^r) - dU, arranged to cancel exactly at L = U
                let diff = (1.0 - t.r) * (u / l).powf(t.r) * dl + (t.r * (l / u).powf(1.0 - t.r) - 1.0) * du;
                (wa * diff + (wa - wb) * du) / (t.r - 1.0)
            })
        }
    }
}

fn f_div(a: f64, p: &[f64], q: &[f64]) -> f64 {
    sep(p, q, |x, y| x * (x / (a * x + (1.0 - a) * y)).ln() + (1.0 - a) * (y - x))
}

fn f_grad(a: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    sepv(p, q, |x, y| (1.0 - a) * (1.0 - x / (a * x + (1.0 - a) * y)))
}

fn g_div(a: f64, p: &[f64], q: &[f64]) -> f64 {
    sep(p, q, |x, y| {
        let m = a * x + (1.0 - a) * y;
        m * (m / x).ln() + (1.0 - a) * (x - y)
    })
}

fn g_grad(a: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    sepv(p, q, |x, y| (1.0 - a) * ((a * x + (1.0 - a) * y) / x).ln())
}

/// Weighted means used by the mean-pair family, weight `b` on `p`. Each form
/// returns `q` and `1 - b` bit-exactly when `p == q`, which keeps the large
/// exponents of the family from amplifying rounding at the identity.
#[derive(Clone, Copy)]
enum Mean {
    A,
    G,
    H,
    Q,
}

impl Mean {
    fn eval(self, p: f64, q: f64, b: f64) -> f64 {
        match self {
            Mean::A => q + b * (p - q),
            Mean::G => q * (p / q).powf(b),
            Mean::H => q * (p / (p + b * (q - p))),
            Mean::Q => (q * q + b * (p * p - q * q)).sqrt(),
        }
    }

    fn dq(self, p: f64, q: f64, b: f64) -> f64 {
        match self {
            Mean::A => 1.0 - b,
            Mean::G => (1.0 - b) * (p / q).powf(b),
            Mean::H => {
                let t = p / (p + b * (q - p));
                (1.0 - b) * t * t
            }
            Mean::Q => (1.0 - b) * (q / Mean::Q.eval(p, q, b)),
        }
    }
}

struct Taneja {
    r: f64,
    s: f64,
    b: f64,
    lo: Mean,
    hi: Mean,
}

impl Taneja {
    fn new(s: &DivergenceSpec) -> Self {
        use Family::*;
        let (lo, hi) = match s.family {
            Taneja3 => (Mean::G, Mean::A),
            Taneja3Hg => (Mean::H, Mean::G),
            Taneja3Ha => (Mean::H, Mean::A),
            Taneja3Hq => (Mean::H, Mean::Q),
            Taneja3Gq => (Mean::G, Mean::Q),
            Taneja3Aq => (Mean::A, Mean::Q),
            _ => unreachable!(),
        };
        Taneja { r: s.p("r"), s: s.p("s"), b: s.p("beta"), lo, hi }
    }

    /// `(sum L^(1-r) U^r, sum U)`.
    fn sums(&self, p: &[f64], q: &[f64]) -> (f64, f64) {
        let sa = sep(p, q, |x, y| {
            let (l, u) = (self.lo.eval(x, y, self.b), self.hi.eval(x, y, self.b));
            u * (l / u).powf(1.0 - self.r)
        });
        let sb = sep(p, q, |x, y| self.hi.eval(x, y, self.b));
        (sa, sb)
    }
}

//! Convex generators and the three divergence constructors built on them.
//!
//! | constructor | summand | gradient in `q` |
//! |---|---|---|
//! | Csiszar | `q f(p/q)` | `f(x) - x f'(x)`, `x = p/q` |
//! | Bregman | `f(p) - f(q) - (p-q) f'(q)` | `(q-p) f''(q)` |
//! | Jensen | `a f(p) + (1-a) f(q) - f(a p + (1-a) q)` | `(1-a)(f'(q) - f'(m))` |
//!
//! Generators carry closed-form first and second derivatives, so the
//! standardized and mirrored variants stay exact.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{check_same_len, log_grid};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex function on an open interval `(lo, hi)` with its first two derivatives.
#[derive(Clone)]
pub struct ConvexFn {
    pub name: String,
    f: Scalar,
    d1: Scalar,
    d2: Scalar,
    pub lo: f64,
    pub hi: f64,
}

impl std::fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ConvexFn({} on ({}, {}))", self.name, self.lo, self.hi)
    }
}

impl ConvexFn {
    pub fn new(
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ConvexFn { name: name.into(), f: Arc::new(f), d1: Arc::new(d1), d2: Arc::new(d2), lo, hi }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    pub fn deriv1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }
    pub fn deriv2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    /// [`eval`](Self::eval) with a domain check.
    pub fn try_eval(&self, x: f64) -> Result<f64> {
        if self.in_domain(x) {
            Ok(self.eval(x))
        } else {
            Err(Error::Domain { index: None, msg: format!("{x} outside the domain of {}", self.name) })
        }
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    /// `f(x) - f(1) - (x-1) f'(1)`: vanishes with its slope at 1.
    pub fn standardize(&self) -> Result<ConvexFn> {
        if !self.in_domain(1.0) {
            return Err(Error::Domain { index: None, msg: format!("1 is outside the domain of {}", self.name) });
        }
        let (f1, d1) = (self.eval(1.0), self.deriv1(1.0));
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        Ok(ConvexFn::new(
            format!("std({})", self.name),
            self.lo,
            self.hi,
            move |x| a.eval(x) - f1 - (x - 1.0) * d1,
            move |x| b.deriv1(x) - d1,
            move |x| c.deriv2(x),
        ))
    }

    /// The mirror `x f(1/x)`, which swaps the arguments of the Csiszar divergence.
    pub fn mirror(&self) -> Result<ConvexFn> {
        if self.lo < 0.0 {
            return Err(Error::Domain { index: None, msg: "mirror needs a domain inside (0, inf)".into() });
        }
        if !self.is_convex_on_grid() {
            return Err(Error::param("f", format!("{} is not strictly convex", self.name)));
        }
        let lo = if self.hi.is_infinite() { 0.0 } else { 1.0 / self.hi };
        let hi = if self.lo == 0.0 { f64::INFINITY } else { 1.0 / self.lo };
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        Ok(ConvexFn::new(
            format!("mirror({})", self.name),
            lo,
            hi,
            move |x| x * a.eval(1.0 / x),
            move |x| b.eval(1.0 / x) - b.deriv1(1.0 / x) / x,
            move |x| c.deriv2(1.0 / x) / (x * x * x),
        ))
    }

    /// Sampled strict convexity: `f'' > 0` on 64 log-spaced points of `[1e-3, 1e3]`
    /// that lie in the domain.
    pub fn is_convex_on_grid(&self) -> bool {
        log_grid(64, 1e-3, 1e3).into_iter().filter(|&x| self.in_domain(x)).all(|x| self.deriv2(x) > 0.0)
    }

    /// Sampled test of the joint-convexity criterion for Bregman and Jensen
    /// divergences: `1/f''` concave on the grid.
    pub fn reciprocal_second_is_concave(&self) -> bool {
        let g: Vec<f64> = log_grid(64, 1e-3, 1e3).into_iter().filter(|&x| self.in_domain(x)).collect();
        g.windows(3).all(|w| {
            let r: Vec<f64> = w.iter().map(|&x| 1.0 / self.deriv2(x)).collect();
            // chord from w[0] to w[2] evaluated at w[1] must not exceed r[1]
            let t = (w[1] - w[0]) / (w[2] - w[0]);
            let chord = r[0] + t * (r[2] - r[0]);
            r[1] >= chord - 1e-9 * chord.abs().max(r[1].abs()).max(1.0)
        })
    }
}

/// `x ln x - x + 1`, the standardized generator of the KL divergence.
pub fn kl_generator() -> ConvexFn {
    ConvexFn::new("x ln x", 0.0, f64::INFINITY, |x| if x == 0.0 { 1.0 } else { x * x.ln() - x + 1.0 }, |x| x.ln(), |x| 1.0 / x)
}

/// Plain `x ln x`.
pub fn xlogx() -> ConvexFn {
    ConvexFn::new("x ln x", 0.0, f64::INFINITY, |x| if x == 0.0 { 0.0 } else { x * x.ln() }, |x| x.ln() + 1.0, |x| 1.0 / x)
}

/// `-ln x`, whose Bregman divergence is Itakura-Saito.
pub fn neg_log() -> ConvexFn {
    ConvexFn::new("-ln x", 0.0, f64::INFINITY, |x| -x.ln(), |x| -1.0 / x, |x| 1.0 / (x * x))
}

/// `(x^l - l x + l - 1) / (l (l - 1))`, valid for `l` away from 0 and 1.
pub fn power_generator(l: f64) -> ConvexFn {
    let c = 1.0 / (l * (l - 1.0));
    ConvexFn::new(
        format!("power({l})"),
        0.0,
        f64::INFINITY,
        move |x| c * (x.powf(l) - l * x + l - 1.0),
        move |x| c * l * (x.powf(l - 1.0) - 1.0),
        move |x| x.powf(l - 2.0),
    )
}

/// `(sqrt x - 1)^2`, the Hellinger generator; its own mirror.
pub fn sqrt_square() -> ConvexFn {
    ConvexFn::new(
        "(sqrt x - 1)^2",
        0.0,
        f64::INFINITY,
        |x| (x.sqrt() - 1.0).powi(2),
        |x| 1.0 - 1.0 / x.sqrt(),
        |x| 0.5 * x.powf(-1.5),
    )
}

/// `(x - 1)^2`.
pub fn square() -> ConvexFn {
    ConvexFn::new("(x-1)^2", f64::NEG_INFINITY, f64::INFINITY, |x| (x - 1.0) * (x - 1.0), |x| 2.0 * (x - 1.0), |_| 2.0)
}

fn pairs<'a>(p: &'a [f64], q: &'a [f64]) -> Result<impl Iterator<Item = (usize, f64, f64)> + 'a> {
    check_same_len(p, q)?;
    Ok(p.iter().zip(q).enumerate().map(|(i, (&a, &b))| (i, a, b)))
}

fn need_positive(i: usize, v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(i, format!("{what}[{i}] = {v}, need > 0")))
    }
}

fn need_in(f: &ConvexFn, i: usize, x: f64) -> Result<()> {
    if f.in_domain(x) || (x == f.lo && f.eval(x).is_finite()) {
        Ok(())
    } else {
        Err(Error::domain(i, format!("argument {x} outside the domain of {}", f.name)))
    }
}

/// `sum q f(p/q)`.
pub fn csiszar(f: &ConvexFn, p: &[f64], q: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (i, a, b) in pairs(p, q)? {
        need_positive(i, b, "q")?;
        need_in(f, i, a / b)?;
        s += b * f.eval(a / b);
    }
    Ok(s)
}

pub fn csiszar_grad_q(f: &ConvexFn, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    pairs(p, q)?
        .map(|(i, a, b)| {
            need_positive(i, b, "q")?;
            let x = a / b;
            need_in(f, i, x)?;
            Ok(f.eval(x) - x * f.deriv1(x))
        })
        .collect()
}

/// `sum f(p) - f(q) - (p - q) f'(q)`.
pub fn bregman(f: &ConvexFn, p: &[f64], q: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (i, a, b) in pairs(p, q)? {
        need_in(f, i, a)?;
        if !f.in_domain(b) {
            return Err(Error::domain(i, format!("q[{i}] = {b} outside the domain of {}", f.name)));
        }
        s += f.eval(a) - f.eval(b) - (a - b) * f.deriv1(b);
    }
    Ok(s)
}

pub fn bregman_grad_q(f: &ConvexFn, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    pairs(p, q)?
        .map(|(i, a, b)| {
            if !f.in_domain(b) {
                return Err(Error::domain(i, format!("q[{i}] = {b} outside the domain of {}", f.name)));
            }
            Ok((b - a) * f.deriv2(b))
        })
        .collect()
}

fn check_weight(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} not in (0, 1)")))
    }
}

/// `sum a f(p) + (1-a) f(q) - f(a p + (1-a) q)`.
pub fn jensen(f: &ConvexFn, alpha: f64, p: &[f64], q: &[f64]) -> Result<f64> {
    check_weight(alpha)?;
    let mut s = 0.0;
    for (i, a, b) in pairs(p, q)? {
        need_in(f, i, a)?;
        need_in(f, i, b)?;
        let m = alpha * a + (1.0 - alpha) * b;
        s += alpha * f.eval(a) + (1.0 - alpha) * f.eval(b) - f.eval(m);
    }
    Ok(s)
}

pub fn jensen_grad_q(f: &ConvexFn, alpha: f64, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    check_weight(alpha)?;
    pairs(p, q)?
        .map(|(i, a, b)| {
            if !f.in_domain(b) {
                return Err(Error::domain(i, format!("q[{i}] = {b} outside the domain of {}", f.name)));
            }
            let m = alpha * a + (1.0 - alpha) * b;
            Ok((1.0 - alpha) * (f.deriv1(b) - f.deriv1(m)))
        })
        .collect()
}

/// `(1/a) J_a(p, q)`, which tends to the Bregman divergence `B(q, p)` as `a -> 0`.
pub fn jensen_scaled(f: &ConvexFn, alpha: f64, p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(jensen(f, alpha, p, q)? / alpha)
}

/// Generalized logarithm `(x^(1-d) - 1)/(1-d)`, `ln x` at `d = 1`.
pub fn gen_log(x: f64, d: f64) -> f64 {
    if (d - 1.0).abs() < crate::LIMIT_TOL {
        x.ln()
    } else {
        (x.powf(1.0 - d) - 1.0) / (1.0 - d)
    }
}

/// Inverse of [`gen_log`]; needs `1 + (1-d) y >= 0`.
pub fn gen_exp(y: f64, d: f64) -> Result<f64> {
    if (d - 1.0).abs() < crate::LIMIT_TOL {
        return Ok(y.exp());
    }
    let br = 1.0 + (1.0 - d) * y;
    if br < 0.0 {
        return Err(Error::Domain { index: None, msg: format!("gen_exp bracket 1 + (1-d) y = {br} < 0") });
    }
    Ok(br.powf(1.0 / (1.0 - d)))
}

/// Two-point weighted power mean `(a x^t + (1-a) y^t)^(1/t)`; geometric at `t = 0`.
pub(crate) fn power_mean2(x: f64, y: f64, a: f64, t: f64) -> f64 {
    if t.abs() < crate::LIMIT_TOL {
        x.powf(a) * y.powf(1.0 - a)
    } else {
        (a * x.powf(t) + (1.0 - a) * y.powf(t)).powf(1.0 / t)
    }
}

fn check_weights(a: &[f64], w: &[f64]) -> Result<()> {
    check_same_len(a, w)?;
    crate::field::require(a, crate::field::Positivity::Positive, "a")?;
    crate::field::require(w, crate::field::Positivity::NonNegative, "w")?;
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::param("w", format!("weights sum to {s}, need 1")));
    }
    Ok(())
}

/// Weighted power mean `(sum w a^t)^(1/t)`; weighted geometric mean as `t -> 0`.
pub fn power_mean(a: &[f64], w: &[f64], t: f64) -> Result<f64> {
    check_weights(a, w)?;
    if t.abs() < crate::LIMIT_TOL {
        return Ok(a.iter().zip(w).map(|(x, v)| v * x.ln()).sum::<f64>().exp());
    }
    Ok(a.iter().zip(w).map(|(x, v)| v * x.powf(t)).sum::<f64>().powf(1.0 / t))
}

/// Weighted quasi-arithmetic mean `psi^-1(sum w psi(a))` for a monotone `psi`.
pub fn f_mean(a: &[f64], w: &[f64], psi: impl Fn(f64) -> f64, psi_inv: impl Fn(f64) -> f64) -> Result<f64> {
    check_weights(a, w)?;
    Ok(psi_inv(a.iter().zip(w).map(|(&x, v)| v * psi(x)).sum()))
}

/// Symmetrized Bregman divergence `B(p, q) + B(q, p)`.
pub fn burbea_rao(f: &ConvexFn, p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(bregman(f, p, q)? + bregman(f, q, p)?)
}

/// Smallest eigenvalue of the central-difference Hessian of a two-argument summand.
pub fn summand_hessian_min_eig(s: impl Fn(f64, f64) -> f64, p: f64, q: f64) -> f64 {
    let hp = 1e-4 * p.abs().max(1e-3);
    let hq = 1e-4 * q.abs().max(1e-3);
    let spp = (s(p + hp, q) - 2.0 * s(p, q) + s(p - hp, q)) / (hp * hp);
    let sqq = (s(p, q + hq) - 2.0 * s(p, q) + s(p, q - hq)) / (hq * hq);
    let spq = (s(p + hp, q + hq) - s(p + hp, q - hq) - s(p - hp, q + hq) + s(p - hp, q - hq)) / (4.0 * hp * hq);
    let tr = spp + sqq;
    let det = spp * sqq - spq * spq;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    tr / 2.0 - disc
}

//! Regularization terms: Laplacian smoothness penalties (plain, normalized and
//! logarithmic-invariant), Euclidean penalties and Hoyer sparsity.
//!
//! Every penalty is an [`Objective`] over the vector it regularizes.

use crate::error::{Error, Result};
use crate::field::{require, Positivity};
use crate::linalg::{dot, LinearOperator, Matrix};
use crate::sgm::Objective;

/// Neighbour-averaging operator with mirrored boundaries. 1-D mask
/// `[1/2, 0, 1/2]`, 2-D four-neighbour mask with weights `1/4`. Symmetric,
/// with unit column sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Laplacian {
    rows: usize,
    cols: usize,
}

impl Laplacian {
    pub fn new_1d(n: usize) -> Result<Laplacian> {
        if n < 3 {
            return Err(Error::Shape(format!("Laplacian needs length >= 3, got {n}")));
        }
        Ok(Laplacian { rows: 1, cols: n })
    }

    /// Grid stored row-major.
    pub fn new_2d(rows: usize, cols: usize) -> Result<Laplacian> {
        if rows < 3 || cols < 3 {
            return Err(Error::Shape(format!("Laplacian needs dims >= 3, got {rows}x{cols}")));
        }
        Ok(Laplacian { rows, cols })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrix(&self) -> Matrix {
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            m.set_col(j, &self.apply(&e));
            e[j] = 0.0;
        }
        m
    }
}

fn mirror(i: isize, n: usize) -> usize {
    if i < 0 {
        0
    } else if i as usize >= n {
        n - 1
    } else {
        i as usize
    }
}

impl LinearOperator for Laplacian {
    fn rows(&self) -> usize {
        self.len()
    }

    fn cols(&self) -> usize {
        self.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (r, c) = (self.rows, self.cols);
        if r == 1 {
            return (0..c)
                .map(|j| 0.5 * (x[mirror(j as isize - 1, c)] + x[mirror(j as isize + 1, c)]))
                .collect();
        }
        let at = |i: isize, j: isize| x[mirror(i, r) * c + mirror(j, c)];
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r as isize {
            for j in 0..c as isize {
                out.push(0.25 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1)));
            }
        }
        out
    }

    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u)
    }
}

/// Divergences between `x` and its smoothed version `T x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothKind {
    /// Logarithmic invariant alpha divergence, `AB(a, 2 - a)`.
    Lai(f64),
    /// Logarithmic invariant beta divergence (Gamma), `AB(1, b)`.
    Lbi(f64),
    /// Square error between normalized `x / sum x` and `T x / sum x`.
    EqmI,
    KlI,
    NeymanI,
    PearsonI,
    /// Plain alpha divergence; not invariant.
    Alpha(f64),
}

impl SmoothKind {
    pub fn parse(s: &str) -> Result<SmoothKind> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.parse::<f64>().map_err(|_| Error::param("penalty", format!("bad parameter '{a}'")))?)),
            None => (s, None),
        };
        let need = |a: Option<f64>| a.ok_or_else(|| Error::param("penalty", format!("{name} needs a parameter, e.g. {name}:0.5")));
        Ok(match name {
            "lai" => SmoothKind::Lai(need(arg)?),
            "lbi" => SmoothKind::Lbi(need(arg)?),
            "eqmi" => SmoothKind::EqmI,
            "kli" => SmoothKind::KlI,
            "chi2ni" => SmoothKind::NeymanI,
            "chi2pi" => SmoothKind::PearsonI,
            "alpha" => SmoothKind::Alpha(need(arg)?),
            _ => return Err(Error::param("penalty", format!("'{s}' is not one of lai:a, lbi:b, eqmi, kli, chi2ni, chi2pi, alpha:a"))),
        })
    }

    /// Whether `sum x dF/dx = 0` identically.
    pub fn is_invariant(&self) -> bool {
        !matches!(self, SmoothKind::Alpha(_))
    }
}

/// Smoothness penalty `F(x) = D(x || T x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothness {
    pub kind: SmoothKind,
    pub t: Laplacian,
}

impl Smoothness {
    pub fn new(kind: SmoothKind, t: Laplacian) -> Result<Smoothness> {
        match kind {
            SmoothKind::Lai(a) if near(a, 0.0) || near(a, 1.0) => {
                return Err(Error::param("a", format!("LAI needs a in R \\ {{0, 1}}, got {a}")))
            }
            SmoothKind::Lbi(b) if near(b, 0.0) || near(b, 1.0) => {
                return Err(Error::param("b", format!("LBI needs b in R \\ {{0, 1}}, got {b}")))
            }
            SmoothKind::Alpha(a) if near(a, 0.0) || near(a, 1.0) => {
                return Err(Error::param("a", format!("alpha penalty needs a in R \\ {{0, 1}}, got {a}")))
            }
            _ => {}
        }
        Ok(Smoothness { kind, t })
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.t.len() {
            return Err(Error::Shape(format!("penalty on {} values, operator has {}", x.len(), self.t.len())));
        }
        require(x, Positivity::Positive, "x")
    }

    fn value_grad(&self, x: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        self.check(x)?;
        let tx = self.t.apply(x);
        if x == tx.as_slice() {
            return Ok((0.0, vec![0.0; x.len()]));
        }
        match self.kind {
            SmoothKind::Lai(a) => Ok(ab_log(a, 2.0 - a, x, &tx, &self.t, want_grad)),
            SmoothKind::Lbi(b) => Ok(ab_log(1.0, b, x, &tx, &self.t, want_grad)),
            SmoothKind::Alpha(a) => {
                let v = alpha_sum(a, x, &tx);
                if !want_grad {
                    return Ok((v, Vec::new()));
                }
                let gq: Vec<f64> = x.iter().zip(&tx).map(|(&p, &q)| (1.0 - (p / q).powf(a)) / a).collect();
                let tg = self.t.adjoint(&gq);
                let g = x
                    .iter()
                    .zip(&tx)
                    .zip(tg)
                    .map(|((&p, &q), t)| ((p / q).powf(a - 1.0) - 1.0) / (a - 1.0) + t)
                    .collect();
                Ok((v, g))
            }
            kind => {
                let s: f64 = x.iter().sum();
                let p: Vec<f64> = x.iter().map(|v| v / s).collect();
                let q: Vec<f64> = tx.iter().map(|v| v / s).collect();
                let (phi, dp, dq): (fn(f64, f64) -> f64, fn(f64, f64) -> f64, fn(f64, f64) -> f64) = match kind {
                    SmoothKind::EqmI => (|p, q| (p - q) * (p - q), |p, q| 2.0 * (p - q), |p, q| 2.0 * (q - p)),
                    SmoothKind::KlI => (|p, q| p * (p / q).ln() - p + q, |p, q| (p / q).ln(), |p, q| 1.0 - p / q),
                    SmoothKind::NeymanI => {
                        (|p, q| (p - q) * (p - q) / q, |p, q| 2.0 * (p - q) / q, |p, q| 1.0 - p * p / (q * q))
                    }
                    _ => (|p, q| (q - p) * (q - p) / p, |p, q| 1.0 - q * q / (p * p), |p, q| 2.0 * (q - p) / p),
                };
                let v: f64 = p.iter().zip(&q).map(|(&a, &b)| phi(a, b)).sum();
                if !want_grad {
                    return Ok((v, Vec::new()));
                }
                let gq: Vec<f64> = p.iter().zip(&q).map(|(&a, &b)| dq(a, b)).collect();
                let tg = self.t.adjoint(&gq);
                let gbar: Vec<f64> = p.iter().zip(&q).zip(tg).map(|((&a, &b), t)| dp(a, b) + t).collect();
                // chain rule through x / sum x
                let m = dot(&p, &gbar);
                Ok((v, gbar.iter().map(|g| (g - m) / s).collect()))
            }
        }
    }
}

fn near(x: f64, v: f64) -> bool {
    (x - v).abs() < crate::LIMIT_TOL
}

fn alpha_sum(a: f64, p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&x, &y)| x.powf(a) * y.powf(1.0 - a) - a * x - (1.0 - a) * y)
        .sum::<f64>()
        / (a * (a - 1.0))
}

/// Logarithmic alpha-beta form between `p = x` and `q = T x`:
/// `[ln P - (c/a) ln N + ((b-1)/a) ln D] / ((b-1) c)` with `c = a + b - 1`,
/// `P = sum p^c`, `N = sum p^a q^(b-1)`, `D = sum q^c`.
fn ab_log(a: f64, b: f64, p: &[f64], q: &[f64], t: &Laplacian, want_grad: bool) -> (f64, Vec<f64>) {
    let c = a + b - 1.0;
    let pp: f64 = p.iter().map(|x| x.powf(c)).sum();
    let nn: f64 = p.iter().zip(q).map(|(x, y)| x.powf(a) * y.powf(b - 1.0)).sum();
    let dd: f64 = q.iter().map(|y| y.powf(c)).sum();
    let v = (pp.ln() - c / a * nn.ln() + (b - 1.0) / a * dd.ln()) / ((b - 1.0) * c);
    if !want_grad {
        return (v, Vec::new());
    }
    let gq: Vec<f64> =
        p.iter().zip(q).map(|(&x, &y)| (y.powf(c - 1.0) / dd - x.powf(a) * y.powf(b - 2.0) / nn) / a).collect();
    let tg = t.adjoint(&gq);
    let g = p
        .iter()
        .zip(q)
        .zip(tg)
        .map(|((&x, &y), t)| (x.powf(c - 1.0) / pp - x.powf(a - 1.0) * y.powf(b - 1.0) / nn) / (b - 1.0) + t)
        .collect();
    (v, g)
}

impl Objective for Smoothness {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value_grad(x, false)?.0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_grad(x, true)?.1)
    }
}

/// Square error to a reference `c` after the optimal rescaling of `x`:
/// `sum (c - K x)^2` with `K = sum c x / sum x^2`. Invariant in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drqi {
    pub c: Vec<f64>,
}

impl Drqi {
    pub fn factor(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) / dot(x, x)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.c.len() {
            return Err(Error::Shape(format!("DRQI reference has {} values, x has {}", self.c.len(), x.len())));
        }
        require(x, Positivity::Positive, "x")
    }
}

impl Objective for Drqi {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let k = self.factor(x);
        Ok(self.c.iter().zip(x).map(|(c, v)| (c - k * v).powi(2)).sum())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let k = self.factor(x);
        Ok(self.c.iter().zip(x).map(|(c, v)| 2.0 * k * (k * v - c)).collect())
    }
}

/// `1/2 sum (x - c)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drq {
    pub c: f64,
}

impl Objective for Drq {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(0.5 * x.iter().map(|v| (v - self.c).powi(2)).sum::<f64>())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.iter().map(|v| v - self.c).collect())
    }
}

/// `1/2 ||x - T x||^2`, gradient `x - 2 T x + T T x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drl {
    pub t: Laplacian,
}

impl Objective for Drl {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let tx = self.t.apply(x);
        Ok(0.5 * x.iter().zip(&tx).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let tx = self.t.apply(x);
        let ttx = self.t.apply(&tx);
        Ok(x.iter().zip(tx.iter().zip(&ttx)).map(|(a, (b, c))| a - 2.0 * b + c).collect())
    }
}

/// Tikhonov terms on a column of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tikhonov {
    /// `1/2 sum (h - 1/N)^2`.
    NormToConstant,
    /// `1/2 sum (h - T h)^2` with the 1-D mask.
    Laplacian,
}

impl Tikhonov {
    pub fn parse(s: &str) -> Result<Tikhonov> {
        match s {
            "const" | "norm_to_constant" => Ok(Tikhonov::NormToConstant),
            "lap" | "laplacian" => Ok(Tikhonov::Laplacian),
            _ => Err(Error::param("h-penalty", format!("'{s}' is not one of const, lap"))),
        }
    }

    pub fn value_grad(&self, h: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            Tikhonov::NormToConstant => {
                let d = Drq { c: 1.0 / h.len() as f64 };
                Ok((d.value(h)?, d.gradient(h)?))
            }
            Tikhonov::Laplacian => {
                let d = Drl { t: Laplacian::new_1d(h.len())? };
                Ok((d.value(h)?, d.gradient(h)?))
            }
        }
    }
}

impl Objective for Tikhonov {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value_grad(x)?.0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_grad(x)?.1)
    }
}

/// `(sqrt N - |x|_1 / |x|_2) / (sqrt N - 1)`, in `[0, 1]`.
pub fn hoyer_sparsity(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Shape("sparsity needs at least 2 entries".into()));
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let l2 = dot(x, x).sqrt();
    if l2 == 0.0 {
        return Err(Error::Domain { index: None, msg: "sparsity of a zero column".into() });
    }
    let n = (x.len() as f64).sqrt();
    Ok((n - l1 / l2) / (n - 1.0))
}

/// `|x|_2 / |x|_1` of a column of length `n` with sparsity `s`.
pub fn hoyer_target(s: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::param("sparsity", format!("need s in [0, 1], got {s}")));
    }
    let r = (n as f64).sqrt();
    Ok(1.0 / (r - s * (r - 1.0)))
}

/// Sparsity penalty on one column, with target ratio `a = |x|_2 / |x|_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hoyer {
    /// `[|x|_2^2 / 2 - a^2 |x|_1^2 / 2]^2`; its gradient changes sign.
    Plain { a: f64 },
    /// `1/2 [|x|_2^2 / |x|_1^2 - a^2]^2`, invariant under `x -> c x`.
    Invariant { a: f64 },
}

impl Hoyer {
    fn norms(x: &[f64]) -> Result<(f64, f64)> {
        require(x, Positivity::NonNegative, "x")?;
        let l1: f64 = x.iter().sum();
        if l1 == 0.0 {
            return Err(Error::Domain { index: None, msg: "sparsity penalty on a zero column".into() });
        }
        Ok((l1, dot(x, x)))
    }
}

impl Objective for Hoyer {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let (l1, l2s) = Hoyer::norms(x)?;
        Ok(match *self {
            Hoyer::Plain { a } => (0.5 * l2s - 0.5 * a * a * l1 * l1).powi(2),
            Hoyer::Invariant { a } => 0.5 * (l2s / (l1 * l1) - a * a).powi(2),
        })
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (l1, l2s) = Hoyer::norms(x)?;
        Ok(match *self {
            Hoyer::Plain { a } => {
                let u = l2s - a * a * l1 * l1;
                x.iter().map(|v| u * (v - a * a * l1)).collect()
            }
            Hoyer::Invariant { a } => {
                let r = l2s / (l1 * l1);
                x.iter().map(|v| 2.0 * (r - a * a) * (v / l1 - r) / l1).collect()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_examples() {
        let t = Laplacian::new_1d(5).unwrap();
        assert_eq!(t.apply(&[0.0, 0.0, 1.0, 0.0, 0.0]), vec![0.0, 0.5, 0.0, 0.5, 0.0]);
        assert_eq!(t.apply(&[3.0; 5]), vec![3.0; 5]);
        let m = Laplacian::new_2d(4, 3).unwrap().matrix();
        assert_eq!(m, m.transpose());
        assert!(m.col_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!(Laplacian::new_1d(2).is_err());
        assert!(Laplacian::new_2d(3, 2).is_err());
    }

    #[test]
    fn hoyer_examples() {
        assert_eq!(hoyer_sparsity(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(hoyer_sparsity(&[1.0; 4]).unwrap(), 0.0);
        assert!(hoyer_sparsity(&[0.0; 4]).is_err());
        // |x|_2 / |x|_1 = 1/2 for (1,1,1,1)
        let h = Hoyer::Plain { a: 0.5 };
        assert_eq!(h.value(&[1.0; 4]).unwrap(), 0.0);
        assert_eq!(hoyer_target(0.0, 4).unwrap(), 0.5);
        assert_eq!(hoyer_target(1.0, 4).unwrap(), 1.0);
    }

    #[test]
    fn tikhonov_at_rest() {
        let (v, g) = Tikhonov::NormToConstant.value_grad(&[0.25; 4]).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));
        assert_eq!(Tikhonov::Laplacian.value_grad(&[0.3; 5]).unwrap().0, 0.0);
    }

    #[test]
    fn singular_parameters_rejected() {
        let t = Laplacian::new_1d(4).unwrap();
        assert!(Smoothness::new(SmoothKind::Lai(1.0), t).is_err());
        assert!(Smoothness::new(SmoothKind::Lbi(0.0), t).is_err());
        assert!(SmoothKind::parse("lai").is_err());
        assert_eq!(SmoothKind::parse("lbi:2").unwrap(), SmoothKind::Lbi(2.0));
    }
}

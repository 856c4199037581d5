//! Scale factors `K(p, q)` and the invariant divergences `D(p || K q)`.
//!
//! Every family with a closed-form nominal factor is a multiple of an
//! alpha-beta divergence `m AB(a, b)` or one of its limits (KL, dual KL,
//! Itakura-Saito and its dual). [`ab_equivalent`] finds that form; the nominal
//! factor, the logarithmic form and its scale `S` all follow from `(a, b)`.
//!
//! | factor | `K(p, q)` |
//! |---|---|
//! | nominal | `argmin_K D(p || K q)` |
//! | kstar | `sum p / sum q` |
//! | general | `(sum p^a q^b / sum p^d q^g)^mu`, `a+b = d+g`, `mu (g-b) = 1` |

use crate::catalog::{near_param as near, DivergenceSpec, Family, Params};
use crate::error::{Error, Result};
use crate::field::{check_same_len, require, sum, Positivity};

/// Parameters of the general factor family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralFactor {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl GeneralFactor {
    pub fn new(alpha: f64, beta: f64, delta: f64, gamma: f64, mu: f64) -> Result<Self> {
        let all = [alpha, beta, delta, gamma, mu];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("general", "parameters must be finite"));
        }
        let scale = all.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if (alpha + beta - delta - gamma).abs() > 1e-12 * scale {
            return Err(Error::param("general", format!("need alpha + beta = delta + gamma, got {alpha} + {beta} vs {delta} + {gamma}")));
        }
        if (mu * (gamma - beta) - 1.0).abs() > 1e-12 * scale {
            return Err(Error::param("general", format!("need mu (gamma - beta) = 1, got {}", mu * (gamma - beta))));
        }
        Ok(GeneralFactor { alpha, beta, delta, gamma, mu })
    }

    /// Completes `delta` and `mu` from the two constraints.
    pub fn from_exponents(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if near(gamma, beta) {
            return Err(Error::param("gamma", "gamma = beta leaves mu undefined"));
        }
        Self::new(alpha, beta, alpha + beta - gamma, gamma, 1.0 / (gamma - beta))
    }

    fn sums(&self, p: &[f64], q: &[f64]) -> (f64, f64) {
        let n = p.iter().zip(q).map(|(&x, &y)| x.powf(self.alpha) * y.powf(self.beta)).sum();
        let d = p.iter().zip(q).map(|(&x, &y)| x.powf(self.delta) * y.powf(self.gamma)).sum();
        (n, d)
    }

    pub fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        let (n, d) = self.sums(p, q);
        (n / d).powf(self.mu)
    }

    pub fn grad_q(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        let (n, d) = self.sums(p, q);
        let k = (n / d).powf(self.mu);
        p.iter()
            .zip(q)
            .map(|(&x, &y)| {
                let dn = self.beta * x.powf(self.alpha) * y.powf(self.beta - 1.0);
                let dd = self.gamma * x.powf(self.delta) * y.powf(self.gamma - 1.0);
                self.mu * k * (dn / n - dd / d)
            })
            .collect()
    }
}

/// Requested factor kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    Nominal,
    KStar,
    General(GeneralFactor),
}

impl Factor {
    /// `nominal`, `kstar` or `general:alpha,beta,delta,gamma,mu`.
    pub fn parse(s: &str) -> Result<Factor> {
        match s.trim() {
            "nominal" => Ok(Factor::Nominal),
            "kstar" => Ok(Factor::KStar),
            t => {
                let body = t
                    .strip_prefix("general:")
                    .ok_or_else(|| Error::param("factor", format!("'{t}' is not one of nominal, kstar, general:a,b,d,g,mu")))?;
                let v: Vec<f64> = body
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| Error::param("factor", format!("'{x}' is not a number"))))
                    .collect::<Result<_>>()?;
                if v.len() != 5 {
                    return Err(Error::param("factor", "general needs 5 values alpha,beta,delta,gamma,mu"));
                }
                Ok(Factor::General(GeneralFactor::new(v[0], v[1], v[2], v[3], v[4])?))
            }
        }
    }

    /// Concrete factor for `spec`; `Nominal` needs a closed form.
    pub fn resolve(&self, spec: &DivergenceSpec) -> Result<ResolvedFactor> {
        match self {
            Factor::Nominal => nominal_resolved(spec),
            Factor::KStar => Ok(ResolvedFactor::KStar),
            Factor::General(g) => Ok(ResolvedFactor::General(*g)),
        }
    }
}

/// A factor ready for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedFactor {
    General(GeneralFactor),
    KStar,
    /// `exp(sum q ln(p/q) / sum q)`, the nominal factor of the dual KL divergence.
    ExpLogMean,
}

impl ResolvedFactor {
    pub fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            ResolvedFactor::General(g) => g.value(p, q),
            ResolvedFactor::KStar => sum(p) / sum(q),
            ResolvedFactor::ExpLogMean => {
                let sq = sum(q);
                (p.iter().zip(q).map(|(&x, &y)| y * (x / y).ln()).sum::<f64>() / sq).exp()
            }
        }
    }

    /// `dK/dq`.
    pub fn grad_q(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        match self {
            ResolvedFactor::General(g) => g.grad_q(p, q),
            ResolvedFactor::KStar => {
                let sq = sum(q);
                vec![-sum(p) / (sq * sq); q.len()]
            }
            ResolvedFactor::ExpLogMean => {
                let sq = sum(q);
                let k = self.value(p, q);
                p.iter().zip(q).map(|(&x, &y)| k * ((x / y).ln() - 1.0 - k.ln()) / sq).collect()
            }
        }
    }

    pub fn diffeq_residual(&self, p: &[f64], q: &[f64]) -> f64 {
        diffeq_residual(|p, q| self.value(p, q), p, q)
    }
}

/// `K + sum q dK/dq` with central differences of relative step `1e-6`.
/// Zero for every factor that makes `D(p || K q)` invariant.
pub fn diffeq_residual(k: impl Fn(&[f64], &[f64]) -> f64, p: &[f64], q: &[f64]) -> f64 {
    let mut y = q.to_vec();
    let mut s = k(p, q);
    for j in 0..q.len() {
        let h = 1e-6 * q[j];
        y[j] = q[j] + h;
        let kp = k(p, &y);
        y[j] = q[j] - h;
        let km = k(p, &y);
        y[j] = q[j];
        s += q[j] * (kp - km) / (2.0 * h);
    }
    s
}

/// Shape of a family relative to the alpha-beta divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbForm {
    Ab { a: f64, b: f64 },
    Kl,
    KlDual,
    ItakuraSaito,
    ItakuraSaitoDual,
}

/// `spec = mult * form`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbEquivalent {
    pub mult: f64,
    pub form: AbForm,
}

impl AbEquivalent {
    /// The equivalent catalog spec (without `mult`).
    pub fn spec(&self) -> DivergenceSpec {
        let none = Params::default();
        let r = match self.form {
            AbForm::Ab { a, b } => DivergenceSpec::new(Family::Ab, none.with("a", a).with("b", b)),
            AbForm::Kl => DivergenceSpec::simple(Family::Kl),
            AbForm::KlDual => DivergenceSpec::simple(Family::KlDual),
            AbForm::ItakuraSaito => DivergenceSpec::simple(Family::ItakuraSaito),
            AbForm::ItakuraSaitoDual => DivergenceSpec::new(Family::BetaDual, none.with("lambda", 0.0)),
        };
        r.expect("alpha-beta equivalents are admissible")
    }
}

/// The alpha-beta form of `spec`, if it has one.
pub fn ab_equivalent(spec: &DivergenceSpec) -> Option<AbEquivalent> {
    use Family::*;
    let (m, a, b) = match spec.family {
        Kl => (1.0, 1.0, 1.0),
        KlDual => (1.0, 0.0, 2.0),
        Alpha => {
            let l = spec.p("lambda");
            (1.0, l, 2.0 - l)
        }
        HavrdaCharvat => {
            let l = spec.p("alpha");
            (1.0, l, 2.0 - l)
        }
        AlphaDual => {
            let l = spec.p("lambda");
            (1.0, 1.0 - l, 1.0 + l)
        }
        Beta => (1.0, 1.0, spec.p("lambda")),
        BetaDual => (1.0, spec.p("lambda") - 1.0, 2.0),
        Ab => (1.0, spec.p("a"), spec.p("b")),
        AbDual => (1.0, spec.p("b") - 1.0, spec.p("a") + 1.0),
        Eqm => (2.0, 1.0, 2.0),
        ItakuraSaito => (1.0, 1.0, 0.0),
        NeymanChi2 => (2.0, 2.0, 0.0),
        PearsonChi2 => (2.0, -1.0, 3.0),
        Hellinger => (0.5, 0.5, 1.5),
        Rukhin if near(spec.p("alpha"), 1.0) => (2.0, 2.0, 0.0),
        Rukhin if near(spec.p("alpha"), 0.0) => (2.0, -1.0, 3.0),
        MAg => {
            let l = spec.p("alpha");
            (l, l, 2.0 - l)
        }
        _ => return None,
    };
    let form = if near(a, 0.0) {
        AbForm::KlDual
    } else if near(b, 1.0) {
        AbForm::Kl
    } else if near(a + b - 1.0, 0.0) {
        if a > 0.0 {
            AbForm::ItakuraSaito
        } else {
            AbForm::ItakuraSaitoDual
        }
    } else {
        AbForm::Ab { a, b }
    };
    Some(AbEquivalent { mult: m, form })
}

fn nominal_resolved(spec: &DivergenceSpec) -> Result<ResolvedFactor> {
    let eq = ab_equivalent(spec)
        .ok_or_else(|| Error::NoClosedForm(format!("{} has no closed-form nominal factor; use kstar", spec.id())))?;
    let g = |a, b, d, c, mu| ResolvedFactor::General(GeneralFactor { alpha: a, beta: b, delta: d, gamma: c, mu });
    Ok(match eq.form {
        AbForm::Ab { a, b } => g(a, b - 1.0, 0.0, a + b - 1.0, 1.0 / a),
        AbForm::Kl => g(1.0, 0.0, 0.0, 1.0, 1.0),
        AbForm::KlDual => ResolvedFactor::ExpLogMean,
        AbForm::ItakuraSaito => g(1.0, -1.0, 0.0, 0.0, 1.0),
        AbForm::ItakuraSaitoDual => g(-1.0, 1.0, 0.0, 0.0, -1.0),
    })
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    check_same_len(p, q)?;
    require(p, Positivity::Positive, "p")?;
    require(q, Positivity::Positive, "q")
}

/// `K_0 = argmin_K D(p || K q)` in closed form.
pub fn nominal_factor(spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(nominal_resolved(spec)?.value(p, q))
}

/// `K* = sum p / sum q`.
pub fn kstar_factor(p: &[f64], q: &[f64]) -> Result<f64> {
    check_same_len(p, q)?;
    let sq = sum(q);
    if sq <= 0.0 {
        return Err(Error::Domain { index: None, msg: format!("sum q = {sq}, need > 0") });
    }
    Ok(sum(p) / sq)
}

/// Minimizer of `K -> D(p || K q)` by golden-section search on `ln K`
/// (tolerance `1e-10`), bracketed around `K*`. For experimentation only;
/// the invariant forms never fall back to it.
pub fn numeric_factor(spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    // points outside the family's domain count as +inf
    let f = |t: f64| -> f64 {
        let kq: Vec<f64> = q.iter().map(|y| t.exp() * y).collect();
        spec.evaluate(p, &kq).unwrap_or(f64::INFINITY)
    };
    let t0 = (sum(p) / sum(q)).ln();
    if !f(t0).is_finite() {
        return Err(Error::Domain { index: None, msg: format!("{} undefined at K*", spec.id()) });
    }
    // downhill bracket a, b, c with f(b) <= f(a), f(c)
    let (mut a, mut b) = (t0, t0 + 0.1);
    if f(b) > f(a) {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b + 1.618 * (b - a);
    let mut steps = 0;
    while f(c) < f(b) {
        a = b;
        b = c;
        c = b + 1.618 * (b - a);
        steps += 1;
        if steps > 200 {
            return Err(Error::Stall(format!("no minimum of {} along K", spec.id())));
        }
    }
    let (lo, hi) = if a < c { (a, c) } else { (c, a) };
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// `D(p || K(p, q) q)`, optionally in logarithmic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantDivergence {
    pub base: DivergenceSpec,
    pub factor: Factor,
    pub log_form: bool,
    resolved: ResolvedFactor,
}

/// Attach a scale factor to `base`.
pub fn make_invariant(base: DivergenceSpec, factor: Factor) -> Result<InvariantDivergence> {
    let resolved = factor.resolve(&base)?;
    Ok(InvariantDivergence { base, factor, log_form: false, resolved })
}

fn is_mean_family(f: Family) -> bool {
    use Family::*;
    matches!(f, MSa | MSg | MSh | MAg | MAh)
}

fn log_mean_family(f: Family) -> Family {
    use Family::*;
    match f {
        MSa => LmSa,
        MSg => LmSg,
        MSh => LmSh,
        MAg => LmAg,
        MAh => LmAh,
        _ => unreachable!(),
    }
}

/// Logarithm applied to each of the two positive terms of `inv`.
///
/// Defined for nominal-factor alpha-beta shapes and for the mean families
/// under `kstar`; the result is invariant in both arguments.
pub fn log_form(inv: &InvariantDivergence) -> Result<InvariantDivergence> {
    let ok = match inv.factor {
        Factor::Nominal => ab_equivalent(&inv.base).is_some(),
        Factor::KStar => {
            is_mean_family(inv.base.family) || ab_equivalent(&inv.base).map(|e| e.form) == Some(AbForm::Kl)
        }
        Factor::General(_) => false,
    };
    if !ok {
        return Err(Error::NotDecomposable(format!(
            "{} with {:?} factor has no two-term split",
            inv.base.id(),
            inv.factor
        )));
    }
    Ok(InvariantDivergence { log_form: true, ..*inv })
}

impl InvariantDivergence {
    pub fn factor_value(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        check_pair(p, q)?;
        Ok(self.resolved.value(p, q))
    }

    pub fn resolved_factor(&self) -> ResolvedFactor {
        self.resolved
    }

    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        check_pair(p, q)?;
        if self.log_form {
            return Ok(self.log_value_grad(p, q, false)?.0);
        }
        let k = self.resolved.value(p, q);
        let kq: Vec<f64> = q.iter().map(|y| k * y).collect();
        self.base.evaluate(p, &kq)
    }

    /// Chain rule `K g(Kq) + (sum q g(Kq)) dK/dq`; the second term vanishes
    /// for the nominal factor and is dropped there.
    pub fn gradient_q(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        check_pair(p, q)?;
        if self.log_form {
            return Ok(self.log_value_grad(p, q, true)?.1);
        }
        let k = self.resolved.value(p, q);
        let kq: Vec<f64> = q.iter().map(|y| k * y).collect();
        let g = self.base.gradient_q(p, &kq)?;
        if self.factor == Factor::Nominal {
            return Ok(g.iter().map(|x| k * x).collect());
        }
        let qg: f64 = q.iter().zip(&g).map(|(a, b)| a * b).sum();
        let dk = self.resolved.grad_q(p, q);
        Ok(g.iter().zip(&dk).map(|(x, d)| k * x + qg * d).collect())
    }

    /// Scale `S` with `grad(non-log form) = S grad(log form)`, for shapes
    /// where only one of the two terms depends on `q`.
    pub fn log_scale(&self, p: &[f64], q: &[f64]) -> Result<Option<f64>> {
        check_pair(p, q)?;
        if self.factor != Factor::Nominal && !(self.factor == Factor::KStar && !is_mean_family(self.base.family)) {
            return Ok(None);
        }
        let eq = match ab_equivalent(&self.base) {
            Some(e) => e,
            None => return Ok(None),
        };
        let n = p.len() as f64;
        Ok(Some(match eq.form {
            AbForm::Ab { a, b } => {
                let c = a + b - 1.0;
                let nn: f64 = p.iter().zip(q).map(|(&x, &y)| x.powf(a) * y.powf(b - 1.0)).sum();
                let d: f64 = q.iter().map(|y| y.powf(c)).sum();
                nn.powf(c / a) * d.powf((1.0 - b) / a)
            }
            AbForm::Kl => sum(p),
            AbForm::KlDual => ResolvedFactor::ExpLogMean.value(p, q) * sum(q),
            AbForm::ItakuraSaito | AbForm::ItakuraSaitoDual => n,
        }))
    }

    fn log_value_grad(&self, p: &[f64], q: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        if is_mean_family(self.base.family) && self.factor == Factor::KStar {
            let (sp, sq) = (sum(p), sum(q));
            let pb: Vec<f64> = p.iter().map(|x| x / sp).collect();
            let qb: Vec<f64> = q.iter().map(|x| x / sq).collect();
            let lm = DivergenceSpec::new(log_mean_family(self.base.family), self.base.params)?;
            let v = lm.evaluate(&pb, &qb)?;
            if !want_grad {
                return Ok((v, Vec::new()));
            }
            let g = lm.gradient_q(&pb, &qb)?;
            let m: f64 = qb.iter().zip(&g).map(|(a, b)| a * b).sum();
            return Ok((v, g.iter().map(|x| (x - m) / sq).collect()));
        }
        let eq = ab_equivalent(&self.base).expect("checked by log_form");
        let m = eq.mult;
        let n = p.len() as f64;
        let (v, g): (f64, Vec<f64>) = match eq.form {
            AbForm::Ab { a, b } => {
                let c = a + b - 1.0;
                let pp: f64 = p.iter().map(|x| x.powf(c)).sum();
                let nn: f64 = p.iter().zip(q).map(|(&x, &y)| x.powf(a) * y.powf(b - 1.0)).sum();
                let d: f64 = q.iter().map(|y| y.powf(c)).sum();
                let v = (pp.ln() - (c / a) * nn.ln() + ((b - 1.0) / a) * d.ln()) / ((b - 1.0) * c);
                let g = p.iter().zip(q).map(|(&x, &y)| (y.powf(c - 1.0) / d - x.powf(a) * y.powf(b - 2.0) / nn) / a).collect();
                (v, g)
            }
            AbForm::Kl => {
                let (sp, sq) = (sum(p), sum(q));
                let v = p.iter().zip(q).map(|(&x, &y)| x / sp * ((x / sp) / (y / sq)).ln()).sum();
                (v, p.iter().zip(q).map(|(&x, &y)| 1.0 / sq - x / (sp * y)).collect())
            }
            AbForm::KlDual => {
                let (sp, sq) = (sum(p), sum(q));
                let v = p.iter().zip(q).map(|(&x, &y)| y / sq * ((y / sq) / (x / sp)).ln()).sum();
                let t: f64 = p.iter().zip(q).map(|(&x, &y)| y * (y / x).ln()).sum::<f64>() / sq;
                (v, p.iter().zip(q).map(|(&x, &y)| ((y / x).ln() - t) / sq).collect())
            }
            AbForm::ItakuraSaito => {
                let r: f64 = p.iter().zip(q).map(|(&x, &y)| x / y).sum();
                let l: f64 = p.iter().zip(q).map(|(&x, &y)| (x / y).ln()).sum();
                let v = (r / n).ln() - l / n;
                (v, p.iter().zip(q).map(|(&x, &y)| -x / (y * y) / r + 1.0 / (n * y)).collect())
            }
            AbForm::ItakuraSaitoDual => {
                let r: f64 = p.iter().zip(q).map(|(&x, &y)| y / x).sum();
                let l: f64 = p.iter().zip(q).map(|(&x, &y)| (x / y).ln()).sum();
                let v = (r / n).ln() + l / n;
                (v, p.iter().zip(q).map(|(&x, &y)| 1.0 / x / r - 1.0 / (n * y)).collect())
            }
        };
        Ok((m * v, g.into_iter().map(|x| m * x).collect()))
    }
}

/// `|sum q dDI/dq|`, zero for every invariant divergence.
pub fn fundamental_residual(grad: &[f64], q: &[f64]) -> f64 {
    grad.iter().zip(q).map(|(g, y)| g * y).sum::<f64>().abs()
}

/// `(D(p || K0 q), D(p || K1 q), D(p || q))`; the first is the smallest.
pub fn ordering_check(spec: &DivergenceSpec, p: &[f64], q: &[f64], k1: &Factor) -> Result<(f64, f64, f64)> {
    if *k1 == Factor::Nominal {
        return Err(Error::param("k1", "compare against a non-nominal factor"));
    }
    let k0 = nominal_factor(spec, p, q)?;
    let k1 = k1.resolve(spec)?.value(p, q);
    let scaled = |k: f64| -> Vec<f64> { q.iter().map(|y| k * y).collect() };
    Ok((spec.evaluate(p, &scaled(k0))?, spec.evaluate(p, &scaled(k1))?, spec.evaluate(p, q)?))
}

/// `D(p || K1 q) - D(p || K0 q)` for the squared distance: `sum q^2 (K1 - K0)^2`.
pub fn gap_eqm(q: &[f64], k0: f64, k1: f64) -> f64 {
    q.iter().map(|y| y * y).sum::<f64>() * (k1 - k0).powi(2)
}

/// The same gap for Neyman's chi-square: `sum q (K0 - K1)^2 / K1`.
pub fn gap_neyman(q: &[f64], k0: f64, k1: f64) -> f64 {
    sum(q) * (k0 - k1).powi(2) / k1
}

//! Property suite over the catalog: finite-difference gradients, zero at
//! identity, invariance, factor ordering, the factor differential equation
//! and special-case reductions. Each check produces one row of a table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{DivergenceSpec, Family, Params};
use crate::error::{Error, Result};
use crate::invariance::{
    diffeq_residual, fundamental_residual, gap_eqm, gap_neyman, kstar_factor, log_form, make_invariant, nominal_factor,
    ordering_check, Factor, GeneralFactor, InvariantDivergence, ResolvedFactor,
};
use crate::linalg::inf_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradient,
    Zero,
    Invariance,
    Ordering,
    DiffEq,
    Reductions,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Gradient, Suite::Zero, Suite::Invariance, Suite::Ordering, Suite::DiffEq, Suite::Reductions];

    pub fn id(self) -> &'static str {
        match self {
            Suite::Gradient => "gradient",
            Suite::Zero => "zero",
            Suite::Invariance => "invariance",
            Suite::Ordering => "ordering",
            Suite::DiffEq => "diffeq",
            Suite::Reductions => "reductions",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| Error::param("suite", format!("'{s}' is not one of gradient, zero, invariance, ordering, diffeq, reductions")))
    }
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub seed: u64,
    pub suites: Vec<Suite>,
    /// Restrict to these families; empty means all.
    pub families: Vec<Family>,
    /// Field length.
    pub n: usize,
    /// Random parameter settings per family.
    pub settings: usize,
    /// Random field pairs per setting.
    pub pairs: usize,
    /// Flip the sign of the closed-form gradient (negative control).
    pub inject_sign_error: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 42,
            suites: Suite::ALL.to_vec(),
            families: Vec::new(),
            n: 16,
            settings: 3,
            pairs: 20,
            inject_sign_error: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub suite: &'static str,
    pub subject: String,
    /// Worst observed error measure.
    pub metric: f64,
    pub tol: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    /// Header `suite, subject, metric, tol, status, detail`.
    pub fn table(&self, delim: char) -> String {
        let d = delim.to_string();
        let mut out = ["suite", "subject", "metric", "tol", "status", "detail"].join(&d);
        out.push('\n');
        for r in &self.rows {
            let status = if r.pass { "pass" } else { "fail" };
            let row = [r.suite.to_string(), r.subject.clone(), format!("{:e}", r.metric), format!("{:e}", r.tol), status.into(), r.detail.clone()];
            out.push_str(&row.join(&d));
            out.push('\n');
        }
        out
    }

    fn push(&mut self, suite: Suite, subject: impl Into<String>, metric: f64, tol: f64, detail: impl Into<String>) {
        self.rows.push(CheckRow {
            suite: suite.id(),
            subject: subject.into(),
            metric,
            tol,
            pass: metric <= tol,
            detail: detail.into(),
        });
    }
}

pub fn uniform_field(r: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}

/// Central differences of `f` at `x` with step `rel * |x_i|`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> Vec<f64> {
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

/// `||a - b||_inf / max(||b||_inf, floor)`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    inf_norm(&d) / inf_norm(b).max(floor)
}

/// Random admissible parameters for `f`, drawn from the sampling interval of
/// each parameter and refitted where the domain depends on the fields.
pub fn sample_spec(r: &mut impl Rng, f: Family, p: &[f64], q: &[f64]) -> Result<DivergenceSpec> {
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
            pr.set(s.name, v)?;
        }
        if let Ok(spec) = DivergenceSpec::new(f, pr) {
            if spec.evaluate(p, q).is_ok() {
                return Ok(spec);
            }
        }
    }
    Err(Error::param(f.id(), "no admissible parameters found for the sampled fields"))
}

/// Random pair accepted by `ok`. The range `[0.2, 3]` narrows towards 1 after
/// every 50 rejections, so that families with a bounded domain still get pairs.
fn fitted_pair(r: &mut impl Rng, n: usize, ok: impl Fn(&[f64], &[f64]) -> bool) -> (Vec<f64>, Vec<f64>) {
    for k in 0.. {
        let w = 0.5f64.powi(k / 50);
        let (lo, hi) = (1.0 - 0.8 * w, 1.0 + 2.0 * w);
        let p = uniform_field(r, n, lo, hi);
        let q = uniform_field(r, n, lo, hi);
        if ok(&p, &q) {
            return (p, q);
        }
    }
    unreachable!()
}

fn describe(p: &Params) -> String {
    let kv: Vec<String> = Params::NAMES.iter().filter_map(|n| p.get(n).map(|v| format!("{n}={v}"))).collect();
    kv.join(",")
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| c * x).collect()
}

pub fn run_checks(config: &CheckConfig) -> Result<CheckReport> {
    if config.n == 0 || config.settings == 0 || config.pairs == 0 {
        return Err(Error::param("n/settings/pairs", "need at least one of each"));
    }
    let mut r = ChaCha8Rng::seed_from_u64(config.seed);
    let families: Vec<Family> =
        if config.families.is_empty() { Family::ALL.to_vec() } else { config.families.clone() };
    let mut report = CheckReport::default();
    for &suite in &config.suites {
        match suite {
            Suite::Gradient => gradients(&mut r, &families, config, &mut report)?,
            Suite::Zero => zeros(&mut r, &families, config, &mut report)?,
            Suite::Invariance => invariance(&mut r, &families, config, &mut report)?,
            Suite::Ordering => ordering(&mut r, &families, config, &mut report)?,
            Suite::DiffEq => diffeq(&mut r, &families, config, &mut report)?,
            Suite::Reductions => reductions(&mut r, config, &mut report)?,
        }
    }
    Ok(report)
}

fn gradients(r: &mut ChaCha8Rng, families: &[Family], config: &CheckConfig, out: &mut CheckReport) -> Result<()> {
    let sign = if config.inject_sign_error { -1.0 } else { 1.0 };
    for &f in families {
        let mut worst = 0.0f64;
        let mut at = String::new();
        for _ in 0..config.settings {
            let p0 = uniform_field(r, config.n, 0.2, 3.0);
            let q0 = uniform_field(r, config.n, 0.2, 3.0);
            let s = sample_spec(r, f, &p0, &q0)?;
            for k in 0..config.pairs {
                let (p, q) = if k == 0 { (p0.clone(), q0.clone()) } else { fitted_pair(r, config.n, |p, q| s.evaluate(p, q).is_ok()) };
                let g: Vec<f64> = s.gradient_q(&p, &q)?.into_iter().map(|x| sign * x).collect();
                let fd = fd_gradient(|x| s.evaluate(&p, x).unwrap_or(f64::NAN), &q, 1e-6);
                let e = relative_error(&g, &fd, 1e-6);
                if !(e <= worst) {
                    worst = if e.is_nan() { f64::INFINITY } else { e };
                    at = describe(&s.params);
                }
            }
        }
        out.push(Suite::Gradient, f.id(), worst, 1e-6, at);
    }
    Ok(())
}

fn zeros(r: &mut ChaCha8Rng, families: &[Family], config: &CheckConfig, out: &mut CheckReport) -> Result<()> {
    for &f in families.iter().filter(|f| !f.meta().diagnostic) {
        let mut worst = 0.0f64;
        let mut value = 0.0f64;
        for _ in 0..config.settings {
            let p = uniform_field(r, config.n, 0.2, 3.0);
            let s = sample_spec(r, f, &p, &p)?;
            let v = s.evaluate(&p, &p)?;
            value = value.max(v.abs());
            // any nonzero value is a failure regardless of size
            let metric = if v != 0.0 { f64::INFINITY } else { inf_norm(&s.gradient_q(&p, &p)?) };
            worst = worst.max(metric);
        }
        out.push(Suite::Zero, f.id(), worst, 1e-10, format!("max |D(p||p)| = {value:e}"));
    }
    Ok(())
}

/// Invariant forms the suites cover for `f`: `kstar` always, the nominal
/// factor where it has a closed form, and their log forms.
fn invariant_forms(r: &mut ChaCha8Rng, f: Family, n: usize) -> Result<Vec<InvariantDivergence>> {
    let p = uniform_field(r, n, 0.2, 3.0);
    let s = sample_spec(r, f, &p, &p)?;
    let mut v = vec![make_invariant(s, Factor::KStar)?];
    if let Ok(inv) = make_invariant(s, Factor::Nominal) {
        v.push(inv);
    }
    let logs: Vec<_> = v.iter().filter_map(|i| log_form(i).ok()).collect();
    v.extend(logs);
    Ok(v)
}

fn form_name(inv: &InvariantDivergence) -> String {
    let k = match inv.factor {
        Factor::Nominal => "nominal",
        Factor::KStar => "kstar",
        Factor::General(_) => "general",
    };
    format!("{}/{k}{}", inv.base.id(), if inv.log_form { "/log" } else { "" })
}

fn invariance(r: &mut ChaCha8Rng, families: &[Family], config: &CheckConfig, out: &mut CheckReport) -> Result<()> {
    const SCALES: [f64; 4] = [1e-3, 1.0, 7.0, 1e3];
    for &f in families.iter().filter(|f| !f.meta().diagnostic) {
        for inv in invariant_forms(r, f, config.n)? {
            let mut worst = 0.0f64;
            let mut fund = 0.0f64;
            for _ in 0..config.settings {
                let (p, q) =
                    fitted_pair(r, config.n, |p, q| SCALES.iter().all(|&c| inv.evaluate(p, &scaled(q, c)).is_ok()));
                let d = inv.evaluate(&p, &q)?;
                for c in SCALES {
                    let dc = inv.evaluate(&p, &scaled(&q, c))?;
                    worst = worst.max((dc - d).abs() / d.abs().max(f64::MIN_POSITIVE));
                    if inv.log_form {
                        if let Ok(dp) = inv.evaluate(&scaled(&p, c), &q) {
                            worst = worst.max((dp - d).abs() / d.abs().max(f64::MIN_POSITIVE));
                        }
                    }
                }
                let g = inv.gradient_q(&p, &q)?;
                let scale = inf_norm(&g) * inf_norm(&q) * q.len() as f64;
                fund = fund.max(fundamental_residual(&g, &q) / scale.max(f64::MIN_POSITIVE));
            }
            out.push(Suite::Invariance, form_name(&inv), worst.max(fund), 1e-10, format!("fundamental {fund:e}"));
        }
    }
    Ok(())
}

fn ordering(r: &mut ChaCha8Rng, families: &[Family], config: &CheckConfig, out: &mut CheckReport) -> Result<()> {
    const INSTANCES: usize = 100;
    for &f in families.iter().filter(|f| !f.meta().diagnostic) {
        let p = uniform_field(r, config.n, 0.2, 3.0);
        let s = sample_spec(r, f, &p, &p)?;
        if make_invariant(s, Factor::Nominal).is_err() {
            continue;
        }
        let mut violations = 0usize;
        let mut gap = 0.0f64;
        let mut first = None;
        for _ in 0..INSTANCES {
            let (p, q) = fitted_pair(r, config.n, |p, q| ordering_check(&s, p, q, &Factor::KStar).is_ok());
            let (d0, d1, d) = ordering_check(&s, &p, &q, &Factor::KStar)?;
            let slack = 1e-12 * d1.abs().max(d.abs());
            if d0 > d1 + slack || d0 > d + slack {
                violations += 1;
            }
            first.get_or_insert((d0, d1, d));
            let k0 = nominal_factor(&s, &p, &q)?;
            let k1 = kstar_factor(&p, &q)?;
            let want = match f {
                Family::Eqm => Some(gap_eqm(&q, k0, k1)),
                Family::NeymanChi2 => Some(gap_neyman(&q, k0, k1)),
                _ => None,
            };
            if let Some(w) = want {
                gap = gap.max(((d1 - d0) - w).abs() / d1.abs().max(1.0));
            }
        }
        let (d0, d1, d) = first.unwrap_or_default();
        let detail = format!("D(p||K0 q) = {d0}, D(p||K* q) = {d1}, D(p||q) = {d}; {violations} violations in {INSTANCES}");
        let metric = if violations > 0 { f64::INFINITY } else { gap };
        out.push(Suite::Ordering, f.id(), metric, 1e-10, detail);
    }
    Ok(())
}

fn random_general(r: &mut ChaCha8Rng) -> Result<GeneralFactor> {
    loop {
        let (a, b, g): (f64, f64, f64) = (r.gen_range(-1.5..2.5), r.gen_range(-1.5..2.5), r.gen_range(-1.5..2.5));
        if (g - b).abs() > 0.3 {
            return GeneralFactor::from_exponents(a, b, g);
        }
    }
}

fn diffeq(r: &mut ChaCha8Rng, families: &[Family], config: &CheckConfig, out: &mut CheckReport) -> Result<()> {
    let mut ks: Vec<(String, ResolvedFactor)> = vec![("kstar".into(), ResolvedFactor::KStar)];
    for &f in families.iter().filter(|f| !f.meta().diagnostic) {
        let p = uniform_field(r, config.n, 0.2, 3.0);
        let s = sample_spec(r, f, &p, &p)?;
        if let Ok(k) = Factor::Nominal.resolve(&s) {
            if make_invariant(s, Factor::Nominal).is_ok() {
                ks.push((format!("nominal/{}", f.id()), k));
            }
        }
    }
    for i in 0..5 {
        ks.push((format!("general/{i}"), ResolvedFactor::General(random_general(r)?)));
    }
    for (name, k) in ks {
        let mut worst = 0.0f64;
        for _ in 0..config.settings {
            let (p, q) = fitted_pair(r, config.n, |p, q| k.value(p, q).is_finite());
            let v = k.value(&p, &q);
            worst = worst.max(diffeq_residual(|p, q| k.value(p, q), &p, &q).abs() / v.abs());
        }
        out.push(Suite::DiffEq, name, worst, 1e-6, "");
    }
    Ok(())
}

fn reductions(r: &mut ChaCha8Rng, config: &CheckConfig, out: &mut CheckReport) -> Result<()> {
    let spec = |f: Family, kv: &[(&str, f64)]| -> Result<DivergenceSpec> {
        let mut p = Params::default();
        for (k, v) in kv {
            p.set(k, *v)?;
        }
        DivergenceSpec::new(f, p)
    };
    let mut cases = vec![
        ("alpha(1) = kl", spec(Family::Alpha, &[("lambda", 1.0)])?, DivergenceSpec::simple(Family::Kl)?),
        ("alpha(0) = kl_dual", spec(Family::Alpha, &[("lambda", 0.0)])?, DivergenceSpec::simple(Family::KlDual)?),
        ("beta(0) = itakura_saito", spec(Family::Beta, &[("lambda", 0.0)])?, DivergenceSpec::simple(Family::ItakuraSaito)?),
    ];
    for b in [0.4, 1.7, 2.5] {
        cases.push(("ab(1, b) = beta(b)", spec(Family::Ab, &[("a", 1.0), ("b", b)])?, spec(Family::Beta, &[("lambda", b)])?));
    }
    for (name, a, b) in cases {
        let mut worst = 0.0f64;
        for _ in 0..config.pairs {
            let (p, q) = fitted_pair(r, config.n, |_, _| true);
            let (x, y) = (a.evaluate(&p, &q)?, b.evaluate(&p, &q)?);
            worst = worst.max((x - y).abs() / y.abs());
        }
        out.push(Suite::Reductions, name, worst, 1e-8, "");
    }
    let mut worst = 0.0f64;
    for _ in 0..config.pairs {
        let (p, q) = fitted_pair(r, config.n, |_, _| true);
        let (a, b) = (r.gen_range(0.3..2.0), r.gen_range(0.3..2.0));
        let g = crate::catalog::ghosh(a, b, &p, &q)?;
        worst = worst.max(crate::catalog::ghosh_conformance(a, b, &p, &q)? / g.abs());
    }
    out.push(Suite::Reductions, "ghosh", worst, 1e-8, "");
    Ok(())
}

//! Split-gradient minimization under non-negativity, with optional sum
//! constraint handled either by a change of variables or by scale invariance.
//!
//! Every update has the interior-point form `x + alpha * d` with
//! `d = x * (U/V - 1)` where `-grad = U - V`, `U, V > 0`. A unit step gives the
//! purely multiplicative update `x * U / V`.

use std::io::Write;

use crate::catalog::DivergenceSpec;
use crate::error::{Error, Result};
use crate::field::fmt_exact;
use crate::invariance::{Factor, InvariantDivergence};
use crate::linalg::{dot, inf_norm, LinearOperator};

/// Something to minimize over the positive orthant.
pub trait Objective {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// `-grad = U - V` with `U >= 0`, `V > 0`. Defaults to [`shift_split`].
    fn split(&self, x: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok(shift_split(&self.gradient(x)?, eps))
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(x)
    }
    fn split(&self, x: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        (**self).split(x, eps)
    }
}

/// Split `-g = U - V` by shifting: `U = -g - m + e`, `V = -m + e` with
/// `m = min(min(-g), 0)` and `e = eps * max|g|`.
pub fn shift_split(g: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>) {
    let e = eps * inf_norm(g).max(f64::MIN_POSITIVE);
    let m = g.iter().fold(0.0f64, |m, &x| m.min(-x));
    (g.iter().map(|&x| -x - m + e).collect(), vec![-m + e; g.len()])
}

/// Data divergence: a catalog family or a scale-invariant form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Plain(DivergenceSpec),
    Invariant(InvariantDivergence),
}

impl From<DivergenceSpec> for Divergence {
    fn from(s: DivergenceSpec) -> Self {
        Divergence::Plain(s)
    }
}

impl From<InvariantDivergence> for Divergence {
    fn from(s: InvariantDivergence) -> Self {
        Divergence::Invariant(s)
    }
}

impl Divergence {
    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            Divergence::Plain(s) => s.evaluate(p, q),
            Divergence::Invariant(s) => s.evaluate(p, q),
        }
    }

    pub fn gradient_q(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        match self {
            Divergence::Plain(s) => s.gradient_q(p, q),
            Divergence::Invariant(s) => s.gradient_q(p, q),
        }
    }

    /// `grad_q = pos - neg` when the family provides a natural split.
    pub fn gradient_split(&self, p: &[f64], q: &[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        match self {
            Divergence::Plain(s) => s.gradient_split(p, q),
            Divergence::Invariant(inv) if inv.factor == Factor::Nominal && !inv.log_form => {
                // K g(Kq), with K stationary
                let k = inv.factor_value(p, q)?;
                let kq: Vec<f64> = q.iter().map(|y| k * y).collect();
                Ok(inv.base.gradient_split(p, &kq)?.map(|(a, b)| {
                    (a.into_iter().map(|x| k * x).collect(), b.into_iter().map(|x| k * x).collect())
                }))
            }
            Divergence::Invariant(_) => Ok(None),
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, Divergence::Invariant(_))
    }

    pub fn id(&self) -> &'static str {
        match self {
            Divergence::Plain(s) => s.id(),
            Divergence::Invariant(s) => s.base.id(),
        }
    }
}

/// `D(y || H x)`.
pub struct LinearModel<O> {
    pub y: Vec<f64>,
    pub op: O,
    pub divergence: Divergence,
}

impl<O: LinearOperator> LinearModel<O> {
    pub fn new(y: Vec<f64>, op: O, divergence: impl Into<Divergence>) -> Result<Self> {
        if op.rows() != y.len() {
            return Err(Error::Shape(format!("operator has {} rows, data has {}", op.rows(), y.len())));
        }
        Ok(LinearModel { y, op, divergence: divergence.into() })
    }

    pub fn model(&self, x: &[f64]) -> Vec<f64> {
        self.op.apply(x)
    }
}

impl<O: LinearOperator> Objective for LinearModel<O> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.divergence.evaluate(&self.y, &self.op.apply(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.divergence.gradient_q(&self.y, &self.op.apply(x))?;
        Ok(self.op.adjoint(&g))
    }

    fn split(&self, x: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let q = self.op.apply(x);
        match self.divergence.gradient_split(&self.y, &q)? {
            Some((pos, neg)) => Ok((self.op.adjoint(&neg), self.op.adjoint(&pos))),
            None => Ok(shift_split(&self.op.adjoint(&self.divergence.gradient_q(&self.y, &q)?), eps)),
        }
    }
}

/// `J = data + gamma * penalty`. The penalty gradient is split on its own
/// (shift rule) and added to both sides, so the denominator stays positive
/// whatever the sign of the penalty gradient.
pub struct Composite<D, P> {
    pub data: D,
    pub penalty: P,
    pub gamma: f64,
}

impl<D: Objective, P: Objective> Composite<D, P> {
    pub fn new(data: D, penalty: P, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("need gamma >= 0, got {gamma}")));
        }
        Ok(Composite { data, penalty, gamma })
    }
}

impl<D: Objective, P: Objective> Objective for Composite<D, P> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let d = self.data.value(x)?;
        if self.gamma == 0.0 {
            return Ok(d);
        }
        Ok(d + self.gamma * self.penalty.value(x)?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.data.gradient(x)?;
        if self.gamma != 0.0 {
            for (a, b) in g.iter_mut().zip(self.penalty.gradient(x)?) {
                *a += self.gamma * b;
            }
        }
        Ok(g)
    }

    fn split(&self, x: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut u, mut v) = self.data.split(x, eps)?;
        if self.gamma != 0.0 {
            let (ur, vr) = self.penalty.split(x, eps)?;
            for i in 0..u.len() {
                u[i] += self.gamma * ur[i];
                v[i] += self.gamma * vr[i];
            }
        }
        Ok((u, v))
    }
}

/// `sum x_l dJ/dx_l`, zero for objectives invariant under `x -> c x`.
pub fn weighted_gradient_sum(x: &[f64], g: &[f64]) -> f64 {
    dot(x, g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Armijo { c1: f64, rho: f64 },
    /// Constant step; `Fixed(1.0)` is the purely multiplicative algorithm.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop when the relative objective decrease falls below this.
    pub objective_tol: f64,
    pub step: StepPolicy,
    /// Relative shift for splits without a natural form.
    pub shift_epsilon: f64,
    /// Exponent `n` of the accelerated direction `x ((U/V)^n - 1)`.
    pub accel: u32,
    /// Upper bound on the step when no component limits it.
    pub step_cap: f64,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            objective_tol: 1e-9,
            step: StepPolicy::Armijo { c1: 1e-4, rho: 0.5 },
            shift_epsilon: 1e-12,
            accel: 1,
            step_cap: 1e6,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shift_epsilon > 0.0) {
            return Err(Error::param("shift_epsilon", format!("need > 0, got {}", self.shift_epsilon)));
        }
        if self.accel < 1 {
            return Err(Error::param("accel", "need an integer >= 1"));
        }
        if !(self.objective_tol >= 0.0) {
            return Err(Error::param("tol", format!("need >= 0, got {}", self.objective_tol)));
        }
        match self.step {
            StepPolicy::Armijo { c1, rho } => {
                if !(c1 > 0.0 && c1 < 1.0) {
                    return Err(Error::param("c1", format!("need c1 in (0, 1), got {c1}")));
                }
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(Error::param("rho", format!("need rho in (0, 1), got {rho}")));
                }
            }
            StepPolicy::Fixed(s) => {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::param("step", format!("need a positive step, got {s}")));
                }
            }
        }
        Ok(())
    }

    fn fixed_warning(&self) -> Option<String> {
        match self.step {
            StepPolicy::Fixed(_) => Some("fixed step: convergence is not guaranteed".into()),
            _ => None,
        }
    }
}

/// Largest `alpha` keeping `x + alpha d >= 0`, capped at `cap`.
pub fn max_step(x: &[f64], d: &[f64], cap: f64) -> f64 {
    x.iter()
        .zip(d)
        .filter(|(_, &di)| di < 0.0)
        .map(|(&xi, &di)| xi / -di)
        .fold(cap, f64::min)
}

/// Accepted step of a line search.
#[derive(Debug, Clone, PartialEq)]
pub struct LineStep {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub value: f64,
}

/// Backtracking from `alpha0` by `rho` until
/// `f(x + a d) <= fx + c1 a slope`. Evaluation failures count as rejections.
#[allow(clippy::too_many_arguments)]
pub fn backtrack(
    f: impl Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    fx: f64,
    d: &[f64],
    slope: f64,
    alpha0: f64,
    c1: f64,
    rho: f64,
    max_backtracks: usize,
) -> Result<LineStep> {
    if !(slope < 0.0) {
        return Err(Error::param("direction", format!("not a descent direction, slope {slope}")));
    }
    let mut a = alpha0;
    for _ in 0..=max_backtracks {
        let xn: Vec<f64> = x.iter().zip(d).map(|(xi, di)| (xi + a * di).max(0.0)).collect();
        if let Ok(v) = f(&xn) {
            if v <= fx + c1 * a * slope {
                return Ok(LineStep { alpha: a, x: xn, value: v });
            }
        }
        a *= rho;
    }
    Err(Error::Stall(format!("no sufficient decrease after {max_backtracks} backtracks")))
}

/// Armijo step along `d` for `obj`, starting from `alpha_max`.
pub fn armijo_search(obj: &dyn Objective, x: &[f64], d: &[f64], alpha_max: f64, config: &SolverConfig) -> Result<f64> {
    let (c1, rho) = match config.step {
        StepPolicy::Armijo { c1, rho } => (c1, rho),
        StepPolicy::Fixed(_) => (1e-4, 0.5),
    };
    let slope = dot(&obj.gradient(x)?, d);
    let fx = obj.value(x)?;
    Ok(backtrack(|y| obj.value(y), x, fx, d, slope, alpha_max, c1, rho, config.max_backtracks)?.alpha)
}

fn check_denominator(v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Decomposition(format!("V[{i}] = {}, need > 0", v[i])));
    }
    Ok(())
}

/// `x ((U/V)^n - 1)`.
pub fn accelerated_direction(x: &[f64], u: &[f64], v: &[f64], n: u32) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::param("accel", "need an integer >= 1"));
    }
    check_denominator(v)?;
    Ok(x.iter().zip(u.iter().zip(v)).map(|(&xi, (&ui, &vi))| xi * ((ui / vi).powi(n as i32) - 1.0)).collect())
}

/// `x + step x (U/V - 1)`; `step = 1` gives `x U / V`.
pub fn multiplicative_step(x: &[f64], u: &[f64], v: &[f64], step: f64) -> Result<Vec<f64>> {
    check_denominator(v)?;
    Ok(x.iter()
        .zip(u.iter().zip(v))
        .map(|(&xi, (&ui, &vi))| if step == 1.0 { xi * ui / vi } else { xi + step * xi * (ui / vi - 1.0) })
        .collect())
}

/// Largest relative mismatch between `-grad` and `U - V`.
pub fn split_residual(g: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let scale = inf_norm(u).max(inf_norm(v)).max(f64::MIN_POSITIVE);
    g.iter().zip(u.iter().zip(v)).map(|(gi, (ui, vi))| (-gi - (ui - vi)).abs()).fold(0.0, f64::max) / scale
}

/// One split-gradient step. Returns the new iterate, its objective and the step.
pub fn sgm_step(obj: &dyn Objective, x: &[f64], config: &SolverConfig) -> Result<LineStep> {
    let (u, v) = obj.split(x, config.shift_epsilon)?;
    let d = accelerated_direction(x, &u, &v, config.accel)?;
    let g = obj.gradient(x)?;
    search(|y| obj.value(y), x, obj.value(x)?, &d, dot(&g, &d), config)
}

/// Step along `d` under the configured policy, keeping `x >= 0`. A direction
/// whose predicted decrease is below rounding of `fx` gives a zero step.
pub fn search(
    f: impl Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    fx: f64,
    d: &[f64],
    slope: f64,
    config: &SolverConfig,
) -> Result<LineStep> {
    let amax = max_step(x, d, config.step_cap);
    let stay = || LineStep { alpha: 0.0, x: x.to_vec(), value: fx };
    if d.iter().all(|&di| di == 0.0) {
        return Ok(stay());
    }
    match config.step {
        StepPolicy::Fixed(s) => {
            let a = s.min(amax);
            let xn: Vec<f64> = x.iter().zip(d).map(|(xi, di)| (xi + a * di).max(0.0)).collect();
            let value = f(&xn)?;
            Ok(LineStep { alpha: a, x: xn, value })
        }
        StepPolicy::Armijo { c1, rho } => {
            let a0 = 0.99 * amax;
            if !(slope < 0.0) || -slope * a0 <= 1e-15 * fx.abs() {
                return Ok(stay());
            }
            backtrack(f, x, fx, d, slope, a0, c1, rho, config.max_backtracks)
        }
    }
}

/// How a step keeps `sum x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumStep {
    /// Centered correction `x [S r - <x, r>]` from the change of variables.
    ChangeVar,
    /// `x * r`, for objectives invariant under `x -> c x`.
    Invariant,
    /// `x (U/V - 1)` with `U, V` from a split of the centered gradient, then
    /// rescaling to the sum. The line search runs on the rescaled objective.
    Multiplicative,
    /// As `Multiplicative` with the raw split, for invariant objectives.
    MultiplicativeInvariant,
}

/// One step that leaves `sum x` unchanged.
pub fn sum_step(obj: &dyn Objective, x: &[f64], mode: SumStep, config: &SolverConfig) -> Result<LineStep> {
    let c: f64 = x.iter().sum();
    let fx = obj.value(x)?;
    let g = obj.gradient(x)?;
    match mode {
        SumStep::ChangeVar | SumStep::Invariant => {
            let d = if mode == SumStep::ChangeVar {
                centered_direction(x, &g)
            } else {
                x.iter().zip(&g).map(|(xi, gi)| -xi * gi).collect()
            };
            search(|y| obj.value(y), x, fx, &d, dot(&g, &d), config)
        }
        SumStep::Multiplicative | SumStep::MultiplicativeInvariant => {
            let (mut u, mut v) = obj.split(x, config.shift_epsilon)?;
            if mode == SumStep::Multiplicative {
                (u, v) = centered_split(x, &u, &v, c);
            }
            let d = accelerated_direction(x, &u, &v, config.accel)?;
            let mut s = search(|y| obj.value(&rescaled(y, c)), x, fx, &d, centered_slope(x, &g, &d), config)?;
            if s.alpha > 0.0 {
                s.x = rescaled(&s.x, c);
            }
            Ok(s)
        }
    }
}

/// Split of the centered gradient `r - <x, r> / S` for a field with sum `S`,
/// from a split `r = U - V`. A uniform `V` gives `U` over `<x, U> / S`;
/// otherwise `<x, V> / S` and `<x, U> / S` are added to `U` and `V`.
pub fn centered_split(x: &[f64], u: &[f64], v: &[f64], s: f64) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    let xu = dot(x, u) / s;
    if hi - lo <= 1e-12 * hi {
        return (u.to_vec(), vec![xu; u.len()]);
    }
    let xv = dot(x, v) / s;
    (u.iter().map(|a| a + xv).collect(), v.iter().map(|b| b + xu).collect())
}

/// Slope of `f(S (x + a d) / sum(x + a d))` at `a = 0`, with `S = sum x`.
pub fn centered_slope(x: &[f64], g: &[f64], d: &[f64]) -> f64 {
    let s: f64 = x.iter().sum();
    let sd: f64 = d.iter().sum();
    dot(g, d) - sd * dot(x, g) / s
}

/// `x` rescaled to sum `c`.
pub fn rescaled(x: &[f64], c: f64) -> Vec<f64> {
    let s: f64 = x.iter().sum();
    x.iter().map(|v| v * c / s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Relative decrease fell below the tolerance.
    Converged,
    MaxIters,
    /// No descent left within rounding.
    Stationary,
}

/// Delimited per-iteration records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(columns: &[&str]) -> Trace {
        Trace { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_to(&self, w: &mut impl Write, delim: char) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(&delim.to_string()))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|&v| fmt_exact(v)).collect();
            writeln!(w, "{}", line.join(&delim.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub status: Status,
    /// Columns `iter, objective, step, residual`; row 0 is the start point.
    pub trace: Trace,
    pub warnings: Vec<String>,
}

fn check_start(x0: &[f64]) -> Result<()> {
    if x0.is_empty() {
        return Err(Error::Shape("empty starting point".into()));
    }
    if let Some(i) = x0.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain(i, format!("x0[{i}] = {}, need > 0", x0[i])));
    }
    Ok(())
}

/// Shared iteration loop: `step` maps an iterate to the next one.
fn iterate(
    obj: &dyn Objective,
    x0: &[f64],
    config: &SolverConfig,
    residual: impl Fn(&[f64]) -> f64,
    step: impl Fn(&[f64]) -> Result<LineStep>,
) -> Result<SolveReport> {
    config.validate()?;
    let mut x = x0.to_vec();
    let mut value = obj.value(&x)?;
    let mut trace = Trace::new(&["iter", "objective", "step", "residual"]);
    trace.push(vec![0.0, value, 0.0, residual(&x)]);
    let mut status = Status::MaxIters;
    let mut k = 0;
    let armijo = matches!(config.step, StepPolicy::Armijo { .. });
    while k < config.max_iters {
        let s = step(&x)?;
        if s.alpha == 0.0 {
            status = Status::Stationary;
            break;
        }
        k += 1;
        let prev = value;
        x = s.x;
        value = s.value;
        trace.push(vec![k as f64, value, s.alpha, residual(&x)]);
        if armijo && (prev - value) / prev.abs().max(f64::MIN_POSITIVE) < config.objective_tol {
            status = Status::Converged;
            break;
        }
    }
    let warnings = config.fixed_warning().into_iter().collect();
    Ok(SolveReport { x, value, iterations: k, status, trace, warnings })
}

/// Minimize over `x >= 0` from a strictly positive start.
pub fn solve(obj: &dyn Objective, x0: &[f64], config: &SolverConfig) -> Result<SolveReport> {
    check_start(x0)?;
    let neg = |x: &[f64]| x.iter().fold(0.0f64, |m, &v| m.max(-v));
    iterate(obj, x0, config, neg, |x| sgm_step(obj, x, config))
}

/// Minimize over `x >= 0`, `sum x = c`, through the change of variables
/// `x = c u / sum u`. With a line search the correction is
/// `x_l [S r_l - sum_m x_m r_m]` (`r = -grad`, `S = sum x`), which sums to
/// zero; a fixed step uses the multiplicative form followed by rescaling.
pub fn solve_sum_constrained(obj: &dyn Objective, x0: &[f64], c: f64, config: &SolverConfig) -> Result<SolveReport> {
    check_start(x0)?;
    let s0: f64 = x0.iter().sum();
    if (s0 - c).abs() > 1e-12 * c.abs() {
        return Err(Error::Constraint(format!("sum x0 = {s0}, expected {c}")));
    }
    let mode = match config.step {
        StepPolicy::Armijo { .. } => SumStep::ChangeVar,
        StepPolicy::Fixed(_) => SumStep::Multiplicative,
    };
    let resid = move |x: &[f64]| (x.iter().sum::<f64>() - c).abs();
    iterate(obj, x0, config, resid, |x| sum_step(obj, x, mode, config))
}

/// `x_l [S r_l - sum_m x_m r_m]` with `r = -g`, `S = sum x`.
pub fn centered_direction(x: &[f64], g: &[f64]) -> Vec<f64> {
    let s: f64 = x.iter().sum();
    let xr: f64 = -dot(x, g);
    x.iter().zip(g).map(|(&xi, &gi)| xi * (s * -gi - xr)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantVariant {
    /// `d = x * (-grad)`; sums to zero by the fundamental property.
    Gradient,
    /// `d = x (U/V - 1)` followed by rescaling to the original sum.
    Multiplicative,
}

/// Relative size of `sum x grad` at `x`.
pub fn invariance_residual(obj: &dyn Objective, x: &[f64]) -> Result<f64> {
    let g = obj.gradient(x)?;
    let scale: f64 = x.iter().zip(&g).map(|(a, b)| (a * b).abs()).sum();
    Ok(weighted_gradient_sum(x, &g).abs() / scale.max(f64::MIN_POSITIVE))
}

/// Minimize a scale-invariant objective; the sum of `x0` is kept without a
/// change of variables.
pub fn solve_invariant(
    obj: &dyn Objective,
    x0: &[f64],
    variant: InvariantVariant,
    config: &SolverConfig,
) -> Result<SolveReport> {
    check_start(x0)?;
    let r = invariance_residual(obj, x0)?;
    if r > 1e-8 {
        return Err(Error::Invariant(format!("sum x dJ/dx is {r:e} of its scale, objective is not scale invariant")));
    }
    let c: f64 = x0.iter().sum();
    let resid = move |x: &[f64]| (x.iter().sum::<f64>() - c).abs();
    let mode = match variant {
        InvariantVariant::Gradient => SumStep::Invariant,
        InvariantVariant::Multiplicative => SumStep::MultiplicativeInvariant,
    };
    iterate(obj, x0, config, resid, |x| sum_step(obj, x, mode, config))
}

/// Componentwise first-order optimality at a candidate minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub satisfied: bool,
    /// Largest `|grad_i| / scale` over components above the activity threshold.
    pub worst_free: f64,
    /// Most negative gradient over components at the bound.
    pub worst_bound: f64,
}

/// Components with `x > 1e-8` need `|grad| <= 1e-6 scale`; the others need
/// `grad >= -1e-6`.
pub fn kkt_check(x: &[f64], g: &[f64], scale: f64) -> KktReport {
    let mut worst_free = 0.0f64;
    let mut worst_bound = 0.0f64;
    for (&xi, &gi) in x.iter().zip(g) {
        if xi > 1e-8 {
            worst_free = worst_free.max(gi.abs() / scale);
        } else {
            worst_bound = worst_bound.min(gi);
        }
    }
    KktReport { satisfied: worst_free <= 1e-6 && worst_bound >= -1e-6, worst_free, worst_bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quad;

    // (x0 - 1)^2 + (x1 + 1)^2
    impl Objective for Quad {
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok((x[0] - 1.0).powi(2) + (x[1] + 1.0).powi(2))
        }
        fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] + 1.0)])
        }
    }

    #[test]
    fn max_step_examples() {
        assert_eq!(max_step(&[1.0, 2.0], &[-1.0, -4.0], 1e6), 0.5);
        assert_eq!(max_step(&[1.0, 1.0], &[-2.0, 1.0], 1e6), 0.5);
        assert_eq!(max_step(&[1.0, 1.0], &[0.0, 3.0], 1e6), 1e6);
    }

    #[test]
    fn accelerated_direction_examples() {
        let d = accelerated_direction(&[1.0], &[1.1], &[1.0], 2).unwrap();
        assert!((d[0] - 0.21).abs() < 1e-12);
        let d1 = accelerated_direction(&[1.0], &[1.1], &[1.0], 1).unwrap();
        assert!((d1[0] - 0.1).abs() < 1e-12);
        assert_eq!(accelerated_direction(&[2.0], &[3.0], &[3.0], 4).unwrap(), vec![0.0]);
        assert!(matches!(accelerated_direction(&[1.0], &[1.0], &[0.0], 1), Err(Error::Decomposition(_))));
    }

    #[test]
    fn multiplicative_step_fixed_point() {
        assert_eq!(multiplicative_step(&[1.0, 2.0], &[3.0, 4.0], &[3.0, 4.0], 1.0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(multiplicative_step(&[0.0, 2.0], &[3.0, 4.0], &[1.0, 4.0], 1.0).unwrap()[0], 0.0);
    }

    #[test]
    fn shift_split_is_positive_and_exact() {
        let g = [1.0, -2.0, 0.5];
        let (u, v) = shift_split(&g, 1e-12);
        assert!(u.iter().chain(&v).all(|&x| x > 0.0));
        assert!(split_residual(&g, &u, &v) < 1e-15);
    }

    #[test]
    fn armijo_on_one_dimensional_quadratic() {
        let f = |x: &[f64]| Ok((x[0] - 1.0).powi(2));
        let s = backtrack(f, &[0.0], 1.0, &[1.0], -2.0, 10.0, 1e-4, 0.5, 60).unwrap();
        assert!(s.value < 1.0 && s.alpha <= 10.0);
        assert!(backtrack(f, &[0.0], 1.0, &[1.0], 2.0, 10.0, 1e-4, 0.5, 60).is_err());
    }

    #[test]
    fn armijo_backtracks_on_steep_objective() {
        // 1e3 (x - 0.5)^2 from x = 1: the full step overshoots the c1 = 0.5
        // sufficient-decrease line, half of it lands next to the minimum
        let f = |x: &[f64]| Ok((x[0] - 0.5).powi(2) * 1e3);
        let s = backtrack(f, &[1.0], 250.0, &[-1.0], -1000.0, 0.99, 0.5, 0.5, 60).unwrap();
        assert_eq!(s.alpha, 0.495);
        assert!(s.value <= 250.0 - 0.5 * s.alpha * 1000.0);
    }

    #[test]
    fn solve_reaches_bound_constrained_minimum() {
        let r = solve(&Quad, &[0.5, 0.5], &SolverConfig { objective_tol: 0.0, max_iters: 500, ..Default::default() }).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && r.x[1] < 1e-6, "{:?}", r.x);
        let g = Quad.gradient(&r.x).unwrap();
        assert!(kkt_check(&r.x, &g, 1.0).satisfied || r.x[1] > 1e-8);
        let obj = r.trace.column("objective").unwrap();
        assert!(obj.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn sum_constraint_rejects_bad_start() {
        let e = solve_sum_constrained(&Quad, &[0.5, 0.5], 2.0, &SolverConfig::default()).unwrap_err();
        assert!(matches!(e, Error::Constraint(_)));
    }

    #[test]
    fn centered_direction_vanishes_for_constant_gradient() {
        let d = centered_direction(&[0.2, 0.3, 0.5], &[4.0, 4.0, 4.0]);
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.shift_epsilon = 0.0;
        assert!(c.validate().is_err());
        c = SolverConfig { step: StepPolicy::Armijo { c1: 1.5, rho: 0.5 }, ..Default::default() };
        assert!(c.validate().is_err());
    }
}

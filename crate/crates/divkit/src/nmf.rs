//! Non-negative matrix factorization `Y ~ H X` with column-stochastic `H` and
//! `X` whose columns carry the sums of the columns of `Y`.
//!
//! Both factors are updated column by column. `H` always uses the change of
//! variables; `X` uses it too, or relies on a per-column invariant divergence.
//! Penalty gradients enter multiplicative denominators only through a
//! positive split, never as a raw one-sided term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::DivergenceSpec;
use crate::error::{Error, Result};
use crate::invariance::nominal_factor;
use crate::linalg::{dot, Matrix};
use crate::penalty::{hoyer_target, Hoyer, Tikhonov};
use crate::sgm::{
    centered_direction, centered_slope, centered_split, rescaled, search, shift_split, Divergence, LineStep, Objective,
    SolverConfig, StepPolicy, Trace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XUpdate {
    /// Sum constraint through `x = S u / sum u`.
    ChangeVar,
    /// Per-column invariant divergence; the sum is kept by the fundamental property.
    Invariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    /// `x + a x * (centered -grad)`.
    Gradient,
    /// `x + a x (U/V - 1)` followed by rescaling to the column sum.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XPenalty {
    /// Hoyer penalty aiming at sparsity `s` in every column.
    Hoyer { s: f64 },
    HoyerInvariant { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfConfig {
    pub rank: usize,
    /// Number of alternations (one `H` sweep plus one `X` sweep).
    pub max_iters: usize,
    /// Stop when the relative decrease of the objective over one alternation
    /// is below this.
    pub tol: f64,
    pub step: StepPolicy,
    pub mode: UpdateMode,
    pub x_update: XUpdate,
    pub gamma: f64,
    pub h_penalty: Option<Tikhonov>,
    pub mu: f64,
    pub x_penalty: Option<XPenalty>,
    pub shift_epsilon: f64,
    pub max_backtracks: usize,
    pub seed: u64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            rank: 2,
            max_iters: 2000,
            tol: 1e-9,
            step: StepPolicy::Armijo { c1: 1e-4, rho: 0.5 },
            mode: UpdateMode::Gradient,
            x_update: XUpdate::ChangeVar,
            gamma: 0.0,
            h_penalty: None,
            mu: 0.0,
            x_penalty: None,
            shift_epsilon: 1e-12,
            max_backtracks: 60,
            seed: 42,
        }
    }
}

/// Data and divergence. Plain divergences are applied to the whole matrix,
/// invariant ones column by column with their own factor.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfProblem {
    pub y: Matrix,
    pub divergence: Divergence,
    ycols: Vec<Vec<f64>>,
    ysums: Vec<f64>,
}

impl NmfProblem {
    pub fn new(y: Matrix, divergence: impl Into<Divergence>) -> Result<NmfProblem> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::Shape("empty data matrix".into()));
        }
        if let Some(i) = y.as_slice().iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::domain(i, format!("Y entry {i} = {}, need >= 0", y.as_slice()[i])));
        }
        let ycols: Vec<Vec<f64>> = (0..y.ncols()).map(|j| y.col(j)).collect();
        let ysums = ycols.iter().map(|c| c.iter().sum()).collect();
        Ok(NmfProblem { y, divergence: divergence.into(), ycols, ysums })
    }

    /// Whether `M < L C / (L + C)`, i.e. more data than unknowns.
    pub fn rank_is_advisable(&self, m: usize) -> bool {
        let (l, c) = (self.y.nrows() as f64, self.y.ncols() as f64);
        (m as f64) < l * c / (l + c)
    }

    pub fn column_sums(&self) -> &[f64] {
        &self.ysums
    }

    pub fn data_term(&self, q: &Matrix) -> Result<f64> {
        match &self.divergence {
            Divergence::Plain(s) => s.evaluate(self.y.as_slice(), q.as_slice()),
            Divergence::Invariant(inv) => {
                let mut t = 0.0;
                for j in 0..q.ncols() {
                    t += inv.evaluate(&self.ycols[j], &q.col(j))?;
                }
                Ok(t)
            }
        }
    }

    /// `A = dD/dQ`, same shape as `Y`.
    pub fn data_gradient(&self, q: &Matrix) -> Result<Matrix> {
        match &self.divergence {
            Divergence::Plain(s) => Matrix::from_vec(q.nrows(), q.ncols(), s.gradient_q(self.y.as_slice(), q.as_slice())?),
            Divergence::Invariant(inv) => {
                let mut a = Matrix::zeros(q.nrows(), q.ncols());
                for j in 0..q.ncols() {
                    a.set_col(j, &inv.gradient_q(&self.ycols[j], &q.col(j))?);
                }
                Ok(a)
            }
        }
    }

    /// `A = pos - neg` from the family's natural split, if any.
    pub fn data_split(&self, q: &Matrix) -> Result<Option<(Matrix, Matrix)>> {
        let (l, c) = q.shape();
        match &self.divergence {
            Divergence::Plain(s) => Ok(s
                .gradient_split(self.y.as_slice(), q.as_slice())?
                .map(|(a, b)| (Matrix::from_vec(l, c, a).unwrap(), Matrix::from_vec(l, c, b).unwrap()))),
            d => {
                let (mut pos, mut neg) = (Matrix::zeros(l, c), Matrix::zeros(l, c));
                for j in 0..c {
                    match d.gradient_split(&self.ycols[j], &q.col(j))? {
                        Some((a, b)) => {
                            pos.set_col(j, &a);
                            neg.set_col(j, &b);
                        }
                        None => return Ok(None),
                    }
                }
                Ok(Some((pos, neg)))
            }
        }
    }
}

/// `H^T A` at `Q = H X`.
pub fn grad_wrt_x(problem: &NmfProblem, h: &Matrix, x: &Matrix) -> Result<Matrix> {
    let a = problem.data_gradient(&h.matmul(x)?)?;
    h.transpose().matmul(&a)
}

/// `A X^T` at `Q = H X`.
pub fn grad_wrt_h(problem: &NmfProblem, h: &Matrix, x: &Matrix) -> Result<Matrix> {
    let a = problem.data_gradient(&h.matmul(x)?)?;
    a.matmul(&x.transpose())
}

/// Nominal factor of column `m`: `argmin_K D(Y_m || K Q_m)`.
pub fn per_column_factor(spec: &DivergenceSpec, y: &Matrix, q: &Matrix, m: usize) -> Result<f64> {
    nominal_factor(spec, &y.col(m), &q.col(m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfState {
    pub h: Matrix,
    pub x: Matrix,
    pub k: usize,
}

impl NmfState {
    /// `H` uniform-positive with unit column sums, `X` uniform-positive
    /// scaled to the column sums of `Y`.
    pub fn init(problem: &NmfProblem, rank: usize, seed: u64) -> Result<NmfState> {
        if rank == 0 {
            return Err(Error::param("rank", "need rank >= 1"));
        }
        let (l, c) = problem.y.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Matrix::from_fn(l, rank, |_, _| rng.gen_range(0.1..1.0));
        h.normalize_columns()?;
        let mut x = Matrix::from_fn(rank, c, |_, _| rng.gen_range(0.1..1.0));
        for j in 0..c {
            let col = x.col(j);
            let s: f64 = col.iter().sum();
            let t = problem.ysums[j];
            let v: Vec<f64> = if t > 0.0 { col.iter().map(|v| v * t / s).collect() } else { vec![1e-12 / rank as f64; rank] };
            x.set_col(j, &v);
        }
        Ok(NmfState { h, x, k: 0 })
    }

    /// Largest `|sum H_m - 1|`.
    pub fn h_residual(&self) -> f64 {
        self.h.col_sums().iter().fold(0.0, |m, s| m.max((s - 1.0).abs()))
    }

    /// Largest `|sum X_j - sum Y_j| / sum Y_j` over non-degenerate columns.
    pub fn x_residual(&self, problem: &NmfProblem) -> f64 {
        self.x
            .col_sums()
            .iter()
            .zip(&problem.ysums)
            .filter(|(_, &t)| t > 0.0)
            .fold(0.0, |m, (s, t)| m.max((s - t).abs() / t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfReport {
    pub state: NmfState,
    pub objective: f64,
    pub data_term: f64,
    pub converged: bool,
    /// Columns `iter, objective, data, h_residual, x_residual`; row 0 is the start.
    pub trace: Trace,
    pub warnings: Vec<String>,
}

/// The full objective `D + gamma sum_m DH(H_m) + mu sum_j DX(X_j)`.
pub struct NmfObjective<'a> {
    pub problem: &'a NmfProblem,
    pub config: &'a NmfConfig,
    pub hoyer_a: f64,
}

impl<'a> NmfObjective<'a> {
    pub fn new(problem: &'a NmfProblem, config: &'a NmfConfig) -> Result<Self> {
        let hoyer_a = match config.x_penalty {
            Some(XPenalty::Hoyer { s }) | Some(XPenalty::HoyerInvariant { s }) => hoyer_target(s, config.rank)?,
            None => 0.0,
        };
        Ok(NmfObjective { problem, config, hoyer_a })
    }

    fn x_pen(&self) -> Option<Hoyer> {
        match self.config.x_penalty {
            _ if self.config.mu == 0.0 => None,
            Some(XPenalty::Hoyer { .. }) => Some(Hoyer::Plain { a: self.hoyer_a }),
            Some(XPenalty::HoyerInvariant { .. }) => Some(Hoyer::Invariant { a: self.hoyer_a }),
            None => None,
        }
    }

    fn h_pen(&self) -> Option<Tikhonov> {
        if self.config.gamma == 0.0 {
            None
        } else {
            self.config.h_penalty
        }
    }

    pub fn h_penalty(&self, h: &Matrix) -> Result<f64> {
        match self.h_pen() {
            None => Ok(0.0),
            Some(t) => (0..h.ncols()).map(|m| t.value(&h.col(m))).sum::<Result<f64>>().map(|v| self.config.gamma * v),
        }
    }

    pub fn x_penalty(&self, x: &Matrix) -> Result<f64> {
        match self.x_pen() {
            None => Ok(0.0),
            Some(p) => (0..x.ncols())
                .filter(|&j| self.problem.ysums[j] > 0.0)
                .map(|j| p.value(&x.col(j)))
                .sum::<Result<f64>>()
                .map(|v| self.config.mu * v),
        }
    }

    pub fn value(&self, h: &Matrix, x: &Matrix) -> Result<f64> {
        Ok(self.problem.data_term(&h.matmul(x)?)? + self.h_penalty(h)? + self.x_penalty(x)?)
    }

    /// `U, V` for column `m` of `H`: data split (or shift) plus the shifted penalty split.
    pub fn h_split(&self, q: &Matrix, h: &Matrix, x: &Matrix, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let xm = x.row(m);
        let (mut u, mut v) = match self.problem.data_split(q)? {
            Some((pos, neg)) => (mat_row_dot(&neg, xm), mat_row_dot(&pos, xm)),
            None => shift_split(&mat_row_dot(&self.problem.data_gradient(q)?, xm), self.config.shift_epsilon),
        };
        if let Some(t) = self.h_pen() {
            let (ur, vr) = shift_split(&t.gradient(&h.col(m))?, self.config.shift_epsilon);
            add_scaled(&mut u, &ur, self.config.gamma);
            add_scaled(&mut v, &vr, self.config.gamma);
        }
        Ok(positive(u, v, self.config.shift_epsilon))
    }

    /// `U, V` for column `j` of `X`.
    pub fn x_split(&self, q: &Matrix, h: &Matrix, x: &Matrix, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut u, mut v) = match self.problem.data_split(q)? {
            Some((pos, neg)) => (h_t_col(h, &neg, j), h_t_col(h, &pos, j)),
            None => shift_split(&h_t_col(h, &self.problem.data_gradient(q)?, j), self.config.shift_epsilon),
        };
        if let Some(p) = self.x_pen() {
            let (ur, vr) = shift_split(&p.gradient(&x.col(j))?, self.config.shift_epsilon);
            add_scaled(&mut u, &ur, self.config.mu);
            add_scaled(&mut v, &vr, self.config.mu);
        }
        Ok(positive(u, v, self.config.shift_epsilon))
    }
}

fn add_scaled(a: &mut [f64], b: &[f64], s: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// Add `eps * max` to both sides so that neither has zeros.
fn positive(mut u: Vec<f64>, mut v: Vec<f64>, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let e = eps * u.iter().chain(&v).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    for (a, b) in u.iter_mut().zip(v.iter_mut()) {
        *a += e;
        *b += e;
    }
    (u, v)
}

/// `(A x_m^T)`: column `m` of `A X^T` given row `m` of `X`.
fn mat_row_dot(a: &Matrix, xm: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|i| dot(a.row(i), xm)).collect()
}

/// Column `j` of `H^T A`.
fn h_t_col(h: &Matrix, a: &Matrix, j: usize) -> Vec<f64> {
    let mut out = vec![0.0; h.ncols()];
    for i in 0..h.nrows() {
        let aij = a.get(i, j);
        for (o, hv) in out.iter_mut().zip(h.row(i)) {
            *o += hv * aij;
        }
    }
    out
}

/// Multiplicative direction `x (U/V - 1)`.
fn ratio_direction(x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
    x.iter().zip(u.iter().zip(v)).map(|(&a, (&b, &c))| a * (b / c - 1.0)).collect()
}

struct ColumnStep<'c> {
    col: &'c [f64],
    target: f64,
    d: Vec<f64>,
    /// Rescale trial points to `target` before evaluating.
    rescale: bool,
}

fn run_column_step(
    cs: ColumnStep,
    f: impl Fn(&[f64]) -> Result<f64>,
    f0: f64,
    slope: f64,
    config: &NmfConfig,
) -> Result<Option<LineStep>> {
    let sc = SolverConfig { step: config.step, max_backtracks: config.max_backtracks, ..Default::default() };
    let eval = |y: &[f64]| if cs.rescale { f(&rescaled(y, cs.target)) } else { f(y) };
    let mut s = match search(eval, cs.col, f0, &cs.d, slope, &sc) {
        Ok(s) if s.alpha > 0.0 => s,
        Ok(_) => return Ok(None),
        // no decrease left within rounding on this column
        Err(Error::Stall(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if cs.rescale {
        s.x = rescaled(&s.x, cs.target);
    }
    // a gain below rounding would only reorder the last bits of the objective
    if f0 - s.value <= 1e-12 * f0.abs() {
        return Ok(None);
    }
    Ok(Some(s))
}

/// One sweep over the columns of `H`. Returns the objective afterwards.
pub fn update_h(obj: &NmfObjective, state: &mut NmfState) -> Result<f64> {
    let config = obj.config;
    let mut q = state.h.matmul(&state.x)?;
    let mut hpen = obj.h_penalty(&state.h)?;
    let xpen = obj.x_penalty(&state.x)?;
    let mut total = obj.problem.data_term(&q)? + hpen + xpen;
    for m in 0..state.h.ncols() {
        let h_old = state.h.col(m);
        let xm = state.x.row(m).to_vec();
        let pen_m = |h: &[f64]| -> Result<f64> {
            match obj.h_pen() {
                Some(t) => Ok(config.gamma * t.value(h)?),
                None => Ok(0.0),
            }
        };
        let rest = hpen - pen_m(&h_old)?;
        let f = |h: &[f64]| -> Result<f64> {
            let mut qt = q.clone();
            for i in 0..qt.nrows() {
                let dh = h[i] - h_old[i];
                if dh != 0.0 {
                    for (j, v) in xm.iter().enumerate() {
                        qt.set(i, j, qt.get(i, j) + dh * v);
                    }
                }
            }
            Ok(obj.problem.data_term(&qt)? + rest + pen_m(h)? + xpen)
        };
        let mut g = mat_row_dot(&obj.problem.data_gradient(&q)?, &xm);
        if let Some(t) = obj.h_pen() {
            add_scaled(&mut g, &t.gradient(&h_old)?, config.gamma);
        }
        let (d, rescale) = match config.mode {
            UpdateMode::Gradient => (centered_direction(&h_old, &g), false),
            UpdateMode::Multiplicative => {
                let (u, v) = obj.h_split(&q, &state.h, &state.x, m)?;
                let (u, v) = centered_split(&h_old, &u, &v, h_old.iter().sum());
                (ratio_direction(&h_old, &u, &v), true)
            }
        };
        let slope = if rescale { centered_slope(&h_old, &g, &d) } else { dot(&g, &d) };
        let cs = ColumnStep { col: &h_old, target: 1.0, d, rescale };
        if let Some(s) = run_column_step(cs, f, total, slope, config)? {
            for i in 0..q.nrows() {
                let dh = s.x[i] - h_old[i];
                for (j, v) in xm.iter().enumerate() {
                    q.set(i, j, q.get(i, j) + dh * v);
                }
            }
            state.h.set_col(m, &s.x);
            hpen = rest + pen_m(&s.x)?;
            total = s.value;
        }
    }
    Ok(total)
}

/// One sweep over the columns of `X`. Returns the objective afterwards.
pub fn update_x(obj: &NmfObjective, state: &mut NmfState) -> Result<f64> {
    let config = obj.config;
    let problem = obj.problem;
    let invariant = config.x_update == XUpdate::Invariant;
    if invariant && !problem.divergence.is_invariant() {
        return Err(Error::Invariant(format!(
            "invariant X update needs an invariant divergence, got plain {}",
            problem.divergence.id()
        )));
    }
    let mut q = state.h.matmul(&state.x)?;
    let hpen = obj.h_penalty(&state.h)?;
    let mut xpen = obj.x_penalty(&state.x)?;
    let mut total = problem.data_term(&q)? + hpen + xpen;
    let pen = obj.x_pen();
    for j in 0..state.x.ncols() {
        let target = problem.ysums[j];
        if target <= 0.0 {
            continue;
        }
        let x_old = state.x.col(j);
        let pen_j = |x: &[f64]| -> Result<f64> {
            match pen {
                Some(p) => Ok(config.mu * p.value(x)?),
                None => Ok(0.0),
            }
        };
        let rest = xpen - pen_j(&x_old)?;
        let h = &state.h;
        let f = |x: &[f64]| -> Result<f64> {
            let mut qt = q.clone();
            qt.set_col(j, &h_apply(h, x));
            Ok(problem.data_term(&qt)? + hpen + rest + pen_j(x)?)
        };
        let mut g = h_t_col(h, &problem.data_gradient(&q)?, j);
        if let Some(p) = pen {
            add_scaled(&mut g, &p.gradient(&x_old)?, config.mu);
        }
        let (d, rescale) = match (config.mode, invariant) {
            (UpdateMode::Gradient, false) => (centered_direction(&x_old, &g), false),
            (UpdateMode::Gradient, true) => (x_old.iter().zip(&g).map(|(x, g)| -x * g).collect(), false),
            (UpdateMode::Multiplicative, inv) => {
                let (mut u, mut v) = obj.x_split(&q, h, &state.x, j)?;
                if !inv {
                    (u, v) = centered_split(&x_old, &u, &v, x_old.iter().sum());
                }
                (ratio_direction(&x_old, &u, &v), true)
            }
        };
        let slope = if rescale { centered_slope(&x_old, &g, &d) } else { dot(&g, &d) };
        let cs = ColumnStep { col: &x_old, target, d, rescale };
        if let Some(s) = run_column_step(cs, f, total, slope, config)? {
            q.set_col(j, &h_apply(&state.h, &s.x));
            state.x.set_col(j, &s.x);
            xpen = rest + pen_j(&s.x)?;
            total = s.value;
        }
    }
    Ok(total)
}

fn h_apply(h: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..h.nrows()).map(|i| dot(h.row(i), x)).collect()
}

/// Alternate `H` and `X` sweeps from the seeded initialization.
pub fn nmf_run(problem: &NmfProblem, config: &NmfConfig) -> Result<NmfReport> {
    let state = NmfState::init(problem, config.rank, config.seed)?;
    nmf_run_from(problem, config, state)
}

pub fn nmf_run_from(problem: &NmfProblem, config: &NmfConfig, mut state: NmfState) -> Result<NmfReport> {
    let (l, c) = problem.y.shape();
    if state.h.shape() != (l, config.rank) || state.x.shape() != (config.rank, c) {
        return Err(Error::Shape(format!(
            "state is H {:?}, X {:?} for Y {l}x{c} and rank {}",
            state.h.shape(),
            state.x.shape(),
            config.rank
        )));
    }
    if !(config.gamma >= 0.0) || !(config.mu >= 0.0) {
        return Err(Error::param("gamma/mu", "regularization weights must be >= 0"));
    }
    let mut warnings = Vec::new();
    if !problem.rank_is_advisable(config.rank) {
        warnings.push(format!("rank {} is not below L C / (L + C) = {:.3}", config.rank, (l * c) as f64 / (l + c) as f64));
    }
    let degenerate = problem.ysums.iter().filter(|&&s| s <= 0.0).count();
    if degenerate > 0 {
        warnings.push(format!("{degenerate} all-zero column(s) of Y excluded from X updates"));
    }
    if matches!(config.step, StepPolicy::Fixed(_)) {
        warnings.push("fixed step: convergence is not guaranteed".into());
    }
    let obj = NmfObjective::new(problem, config)?;
    let mut trace = Trace::new(&["iter", "objective", "data", "h_residual", "x_residual"]);
    let record = |trace: &mut Trace, st: &NmfState, total: f64| -> Result<f64> {
        let data = problem.data_term(&st.h.matmul(&st.x)?)?;
        trace.push(vec![st.k as f64, total, data, st.h_residual(), st.x_residual(problem)]);
        Ok(data)
    };
    let mut total = obj.value(&state.h, &state.x)?;
    let mut data = record(&mut trace, &state, total)?;
    let mut converged = false;
    while state.k < config.max_iters {
        update_h(&obj, &mut state)?;
        update_x(&obj, &mut state)?;
        // evaluated afresh so that an unchanged state records the same value
        let new_total = obj.value(&state.h, &state.x)?;
        state.k += 1;
        data = record(&mut trace, &state, new_total)?;
        let dec = (total - new_total) / total.abs().max(f64::MIN_POSITIVE);
        total = new_total;
        if matches!(config.step, StepPolicy::Armijo { .. }) && dec < config.tol {
            converged = true;
            break;
        }
    }
    Ok(NmfReport { state, objective: total, data_term: data, converged, trace, warnings })
}

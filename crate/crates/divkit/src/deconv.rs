//! Circular convolution through the 2-D FFT, and known-PSF / blind
//! deconvolution by alternating flux-preserving updates on `h` and `x`.
//!
//! Images are [`Matrix`] grids read lexicographically. The PSF lives on the
//! full frame with its centre at the origin, so a kernel is wrapped around the
//! corners of the grid.

use std::cell::Cell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{require, Positivity};
use crate::invariance::fundamental_residual;
use crate::linalg::{LinearOperator, Matrix};
use crate::penalty::{Drl, Drq, Drqi, Laplacian, SmoothKind, Smoothness};
use crate::sgm::{sum_step, Composite, Divergence, LineStep, LinearModel, Objective, SolverConfig, StepPolicy, SumStep, Trace};

/// Forward and inverse 2-D transforms for one grid size.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.rows, self.cols)
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Fft2 {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn pass(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (r, c) = (self.rows, self.cols);
        let (rf, cf) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        rf.process(buf);
        let mut t = vec![Complex::new(0.0, 0.0); r * c];
        for i in 0..r {
            for j in 0..c {
                t[j * r + i] = buf[i * c + j];
            }
        }
        cf.process(&mut t);
        for i in 0..r {
            for j in 0..c {
                buf[i * c + j] = t[j * r + i];
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.pass(&mut buf, false);
        buf
    }

    /// Real part of the normalized inverse transform.
    pub fn inverse_real(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        self.pass(&mut spec, true);
        let n = (self.rows * self.cols) as f64;
        spec.into_iter().map(|z| z.re / n).collect()
    }
}

/// `x -> a ⊛ x` with a fixed real kernel `a`; the adjoint is correlation.
#[derive(Debug, Clone)]
pub struct Convolution {
    fft: Fft2,
    kernel_hat: Vec<Complex<f64>>,
}

impl Convolution {
    pub fn new(fft: &Fft2, kernel: &[f64]) -> Result<Convolution> {
        let (r, c) = fft.shape();
        if kernel.len() != r * c {
            return Err(Error::Shape(format!("kernel has {} values for a {r}x{c} grid", kernel.len())));
        }
        Ok(Convolution { fft: fft.clone(), kernel_hat: fft.forward(kernel) })
    }

    fn product(&self, x: &[f64], conj: bool) -> Vec<f64> {
        let xh = self.fft.forward(x);
        let prod = xh
            .into_iter()
            .zip(&self.kernel_hat)
            .map(|(a, k)| if conj { a * k.conj() } else { a * k })
            .collect();
        self.fft.inverse_real(prod)
    }
}

impl LinearOperator for Convolution {
    fn rows(&self) -> usize {
        self.kernel_hat.len()
    }

    fn cols(&self) -> usize {
        self.kernel_hat.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.product(x, false)
    }

    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        self.product(u, true)
    }
}

/// Convolution whose output is floored at `eps` where rounding pushed a
/// positive model below it. Floored entries are counted.
struct Floored {
    conv: Convolution,
    eps: f64,
    count: Cell<usize>,
}

impl LinearOperator for Floored {
    fn rows(&self) -> usize {
        self.conv.rows()
    }

    fn cols(&self) -> usize {
        self.conv.cols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut q = self.conv.apply(x);
        for v in q.iter_mut() {
            if *v < self.eps {
                *v = self.eps;
                self.count.set(self.count.get() + 1);
            }
        }
        q
    }

    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        self.conv.adjoint(u)
    }
}

fn same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("grids are {:?} and {:?}", a.shape(), b.shape())));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Shape("empty grid".into()));
    }
    Ok(())
}

/// Circular convolution `a ⊛ b`.
pub fn convolve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    same_shape(a, b)?;
    let fft = Fft2::new(a.nrows(), a.ncols());
    let out = Convolution::new(&fft, a.as_slice())?.apply(b.as_slice());
    Matrix::from_vec(a.nrows(), a.ncols(), out)
}

/// `flip(a) ⊛ u`, the adjoint of `x -> a ⊛ x`.
pub fn correlate(a: &Matrix, u: &Matrix) -> Result<Matrix> {
    same_shape(a, u)?;
    let fft = Fft2::new(a.nrows(), a.ncols());
    let out = Convolution::new(&fft, a.as_slice())?.adjoint(u.as_slice());
    Matrix::from_vec(a.nrows(), a.ncols(), out)
}

/// Coordinate negation modulo the grid size.
pub fn flip(a: &Matrix) -> Matrix {
    let (r, c) = a.shape();
    Matrix::from_fn(r, c, |i, j| a.get((r - i) % r, (c - j) % c))
}

/// Signed offset of index `i` on a periodic axis of length `n`.
fn wrap(i: usize, n: usize) -> f64 {
    if 2 * i < n {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Normalized Gaussian PSF centred at the origin.
pub fn gaussian_psf(rows: usize, cols: usize, sigma: f64) -> Result<Matrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("need sigma > 0, got {sigma}")));
    }
    let mut h = Matrix::from_fn(rows, cols, |i, j| {
        let (a, b) = (wrap(i, rows), wrap(j, cols));
        (-(a * a + b * b) / (2.0 * sigma * sigma)).exp()
    });
    h.normalize_all()?;
    Ok(h)
}

/// Unit mass at the origin.
pub fn delta_psf(rows: usize, cols: usize) -> Matrix {
    let mut h = Matrix::zeros(rows, cols);
    h.set(0, 0, 1.0);
    h
}

/// Centroid of a PSF in signed periodic coordinates.
pub fn centroid(h: &Matrix) -> (f64, f64) {
    let (r, c) = h.shape();
    let (mut s, mut a, mut b) = (0.0, 0.0, 0.0);
    for i in 0..r {
        for j in 0..c {
            let v = h.get(i, j);
            s += v;
            a += v * wrap(i, r);
            b += v * wrap(j, c);
        }
    }
    (a / s, b / s)
}

/// Zero `h` outside a disc of the given radius about the origin, then
/// renormalize.
pub fn apply_support(h: &mut Matrix, radius: f64) -> Result<()> {
    let (r, c) = h.shape();
    for i in 0..r {
        for j in 0..c {
            let (a, b) = (wrap(i, r), wrap(j, c));
            if a * a + b * b > radius * radius {
                h.set(i, j, 0.0);
            }
        }
    }
    h.normalize_all()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    KnownPsf,
    Blind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `d = f * (-grad)`, relying on invariance of the objective.
    Invariant,
    /// Centered correction from the change of variables `f = C u / sum u`.
    ChangeVar,
    /// `f * U / V` followed by renormalization.
    Multiplicative,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "invariant" => Ok(Variant::Invariant),
            "changevar" => Ok(Variant::ChangeVar),
            "multiplicative" => Ok(Variant::Multiplicative),
            _ => Err(Error::param("variant", format!("'{s}' is not one of invariant, changevar, multiplicative"))),
        }
    }
}

/// Regularizers for `h` or `x`. References (`DRQI`, `DRQ`) are the flat field
/// with the same sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImagePenalty {
    Drqi,
    Lai(f64),
    Lbi(f64),
    Drq,
    Drl,
}

impl ImagePenalty {
    pub fn parse(s: &str) -> Result<ImagePenalty> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.and_then(|v| v.parse().ok()).ok_or_else(|| Error::param("penalty", format!("'{s}' needs a numeric argument")))
        };
        match name {
            "drqi" => Ok(ImagePenalty::Drqi),
            "lai" => Ok(ImagePenalty::Lai(num(arg)?)),
            "lbi" => Ok(ImagePenalty::Lbi(num(arg)?)),
            "drq" => Ok(ImagePenalty::Drq),
            "drl" => Ok(ImagePenalty::Drl),
            _ => Err(Error::param("penalty", format!("'{s}' is not one of drqi, lai:a, lbi:b, drq, drl"))),
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, ImagePenalty::Drqi | ImagePenalty::Lai(_) | ImagePenalty::Lbi(_))
    }

    /// The penalty on a `rows x cols` field whose entries sum to `total`.
    pub fn build(&self, rows: usize, cols: usize, total: f64) -> Result<Box<dyn Objective>> {
        let n = rows * cols;
        let c = total / n as f64;
        Ok(match *self {
            ImagePenalty::Drqi => Box::new(Drqi { c: vec![c; n] }),
            ImagePenalty::Lai(a) => Box::new(Smoothness::new(SmoothKind::Lai(a), Laplacian::new_2d(rows, cols)?)?),
            ImagePenalty::Lbi(b) => Box::new(Smoothness::new(SmoothKind::Lbi(b), Laplacian::new_2d(rows, cols)?)?),
            ImagePenalty::Drq => Box::new(Drq { c }),
            ImagePenalty::Drl => Box::new(Drl { t: Laplacian::new_2d(rows, cols)? }),
        })
    }
}

struct NoPenalty;

impl Objective for NoPenalty {
    fn value(&self, _: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; x.len()])
    }
}

#[derive(Debug, Clone)]
pub struct DeconvProblem {
    pub y: Matrix,
    pub mode: Mode,
    pub h0: Matrix,
    pub x0: Matrix,
    pub divergence: Divergence,
    fft: Fft2,
}

impl DeconvProblem {
    pub fn new(y: Matrix, mode: Mode, h0: Matrix, x0: Matrix, divergence: impl Into<Divergence>) -> Result<Self> {
        same_shape(&y, &h0)?;
        same_shape(&y, &x0)?;
        let (r, c) = y.shape();
        if r < 4 || c < 4 {
            return Err(Error::Shape(format!("images must be at least 4x4, got {r}x{c}")));
        }
        require(y.as_slice(), Positivity::NonNegative, "y")?;
        require(h0.as_slice(), Positivity::NonNegative, "h0")?;
        require(x0.as_slice(), Positivity::NonNegative, "x0")?;
        let sy: f64 = y.as_slice().iter().sum();
        let sh: f64 = h0.as_slice().iter().sum();
        let sx: f64 = x0.as_slice().iter().sum();
        if (sh - 1.0).abs() > 1e-12 {
            return Err(Error::Constraint(format!("sum h0 = {sh}, expected 1")));
        }
        if (sx - sy).abs() > 1e-10 * sy {
            return Err(Error::Constraint(format!("sum x0 = {sx}, expected sum y = {sy}")));
        }
        Ok(DeconvProblem { y, mode, h0, x0, divergence: divergence.into(), fft: Fft2::new(r, c) })
    }

    /// `x0` flat at the data mean.
    pub fn flat_start(y: &Matrix) -> Matrix {
        let (r, c) = y.shape();
        let m = y.as_slice().iter().sum::<f64>() / (r * c) as f64;
        Matrix::from_fn(r, c, |_, _| m)
    }

    pub fn flux(&self) -> f64 {
        self.y.as_slice().iter().sum()
    }

    pub fn model(&self, h: &Matrix, x: &Matrix) -> Result<Vec<f64>> {
        Ok(Convolution::new(&self.fft, h.as_slice())?.apply(x.as_slice()))
    }

    pub fn data_term(&self, h: &Matrix, x: &Matrix) -> Result<f64> {
        self.divergence.evaluate(self.y.as_slice(), &self.model(h, x)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvConfig {
    /// Alternations in blind mode, `x` updates with a known PSF.
    pub max_iters: usize,
    /// Stop when the relative decrease over one alternation is below this;
    /// 0 runs to `max_iters`.
    pub tol: f64,
    pub step: StepPolicy,
    pub variant: Variant,
    pub gamma: f64,
    pub h_penalty: Option<ImagePenalty>,
    pub mu: f64,
    pub x_penalty: Option<ImagePenalty>,
    /// Radius of the PSF support about the origin.
    pub support_radius: Option<f64>,
    /// Floor for the model `h ⊛ x` inside ratio kernels.
    pub floor: f64,
    pub shift_epsilon: f64,
    pub max_backtracks: usize,
    pub accel: u32,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        DeconvConfig {
            max_iters: 3000,
            tol: 0.0,
            step: StepPolicy::Armijo { c1: 1e-4, rho: 0.5 },
            variant: Variant::Invariant,
            gamma: 0.0,
            h_penalty: None,
            mu: 0.0,
            x_penalty: None,
            support_radius: None,
            floor: 1e-12,
            shift_epsilon: 1e-12,
            max_backtracks: 60,
            accel: 1,
        }
    }
}

impl DeconvConfig {
    fn solver(&self) -> SolverConfig {
        SolverConfig {
            step: self.step,
            shift_epsilon: self.shift_epsilon,
            max_backtracks: self.max_backtracks,
            accel: self.accel,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("need gamma >= 0, got {}", self.gamma)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::param("mu", format!("need mu >= 0, got {}", self.mu)));
        }
        if !(self.floor > 0.0) {
            return Err(Error::param("floor", format!("need floor > 0, got {}", self.floor)));
        }
        if let Some(r) = self.support_radius {
            if !(r >= 0.0) {
                return Err(Error::param("support_radius", format!("need radius >= 0, got {r}")));
            }
        }
        self.solver().validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvState {
    pub h: Matrix,
    pub x: Matrix,
    /// Model entries floored so far.
    pub floored: usize,
}

impl DeconvState {
    pub fn h_residual(&self) -> f64 {
        (self.h.as_slice().iter().sum::<f64>() - 1.0).abs()
    }

    pub fn x_residual(&self, flux: f64) -> f64 {
        (self.x.as_slice().iter().sum::<f64>() - flux).abs() / flux
    }
}

/// Objective in one factor with the other held fixed.
struct Partial {
    data: LinearModel<Floored>,
    penalty: Box<dyn Objective>,
    weight: f64,
}

impl Partial {
    fn new(problem: &DeconvProblem, kernel: &Matrix, penalty: Option<ImagePenalty>, weight: f64, total: f64, floor: f64) -> Result<Partial> {
        let conv = Convolution::new(&problem.fft, kernel.as_slice())?;
        let op = Floored { conv, eps: floor, count: Cell::new(0) };
        let data = LinearModel::new(problem.y.as_slice().to_vec(), op, problem.divergence)?;
        let (r, c) = problem.y.shape();
        let (penalty, weight): (Box<dyn Objective>, f64) = match penalty {
            Some(p) if weight > 0.0 => (p.build(r, c, total)?, weight),
            _ => (Box::new(NoPenalty), 0.0),
        };
        Ok(Partial { data, penalty, weight })
    }

    fn step(&self, f: &[f64], variant: Variant, invariant: bool, config: &DeconvConfig) -> Result<LineStep> {
        let obj = Composite::new(&self.data, &*self.penalty, self.weight)?;
        let mode = match variant {
            Variant::Invariant => {
                if !invariant {
                    return Err(Error::Invariant(
                        "the invariant update needs an invariant divergence and invariant penalties".into(),
                    ));
                }
                SumStep::Invariant
            }
            Variant::ChangeVar => SumStep::ChangeVar,
            Variant::Multiplicative if invariant => SumStep::MultiplicativeInvariant,
            Variant::Multiplicative => SumStep::Multiplicative,
        };
        sum_step(&obj, f, mode, &config.solver())
    }

    fn floored(&self) -> usize {
        self.data.op.count.get()
    }
}

fn objective_is_invariant(problem: &DeconvProblem, penalty: Option<ImagePenalty>, weight: f64) -> bool {
    problem.divergence.is_invariant() && (weight == 0.0 || penalty.map_or(true, |p| p.is_invariant()))
}

/// One step on `h` with `x` fixed; returns the step length.
pub fn update_h(problem: &DeconvProblem, state: &mut DeconvState, config: &DeconvConfig) -> Result<f64> {
    let part = Partial::new(problem, &state.x, config.h_penalty, config.gamma, 1.0, config.floor)?;
    let inv = objective_is_invariant(problem, config.h_penalty, config.gamma);
    let s = part.step(state.h.as_slice(), config.variant, inv, config)?;
    state.floored += part.floored();
    if s.alpha > 0.0 {
        state.h = Matrix::from_vec(state.h.nrows(), state.h.ncols(), s.x)?;
    }
    Ok(s.alpha)
}

/// One step on `x` with `h` fixed; returns the step length.
pub fn update_x(problem: &DeconvProblem, state: &mut DeconvState, config: &DeconvConfig) -> Result<f64> {
    let part = Partial::new(problem, &state.h, config.x_penalty, config.mu, problem.flux(), config.floor)?;
    let inv = objective_is_invariant(problem, config.x_penalty, config.mu);
    let s = part.step(state.x.as_slice(), config.variant, inv, config)?;
    state.floored += part.floored();
    if s.alpha > 0.0 {
        state.x = Matrix::from_vec(state.x.nrows(), state.x.ncols(), s.x)?;
    }
    Ok(s.alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvReport {
    pub state: DeconvState,
    pub objective: f64,
    pub data_term: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Columns `iter, objective, data, h_residual, x_residual, h_step,
    /// x_step, fundamental, centroid_row, centroid_col, floored`; row 0 is
    /// the initialization. `fundamental` is `|sum q dD/dq|` relative to its
    /// scale (NaN for a plain divergence).
    pub trace: Trace,
    pub warnings: Vec<String>,
}

/// Composite objective `D(y || h ⊛ x) + gamma R_h(h) + mu R_x(x)`.
/// The model is floored as in the updates.
pub fn composite_value(problem: &DeconvProblem, state: &DeconvState, config: &DeconvConfig) -> Result<(f64, f64)> {
    let q = floored_model(problem, state, config.floor)?;
    let data = problem.divergence.evaluate(problem.y.as_slice(), &q)?;
    let (r, c) = problem.y.shape();
    let mut total = data;
    if let (Some(p), true) = (config.h_penalty, config.gamma > 0.0) {
        total += config.gamma * p.build(r, c, 1.0)?.value(state.h.as_slice())?;
    }
    if let (Some(p), true) = (config.x_penalty, config.mu > 0.0) {
        total += config.mu * p.build(r, c, problem.flux())?.value(state.x.as_slice())?;
    }
    Ok((total, data))
}

fn floored_model(problem: &DeconvProblem, state: &DeconvState, floor: f64) -> Result<Vec<f64>> {
    let mut q = problem.model(&state.h, &state.x)?;
    for v in q.iter_mut() {
        *v = v.max(floor);
    }
    Ok(q)
}

fn fundamental(problem: &DeconvProblem, state: &DeconvState, floor: f64) -> Result<f64> {
    if !problem.divergence.is_invariant() {
        return Ok(f64::NAN);
    }
    let q = floored_model(problem, state, floor)?;
    let g = problem.divergence.gradient_q(problem.y.as_slice(), &q)?;
    let scale: f64 = g.iter().zip(&q).map(|(a, b)| (a * b).abs()).sum();
    Ok(fundamental_residual(&g, &q) / scale.max(f64::MIN_POSITIVE))
}

/// Alternate `h` and `x` steps (`x` only with a known PSF).
pub fn blind_deconv_run(problem: &DeconvProblem, config: &DeconvConfig) -> Result<DeconvReport> {
    config.validate()?;
    let mut h = problem.h0.clone();
    if let Some(r) = config.support_radius {
        apply_support(&mut h, r)?;
    }
    let mut state = DeconvState { h, x: problem.x0.clone(), floored: 0 };
    let flux = problem.flux();
    let mut warnings = Vec::new();
    if let StepPolicy::Fixed(s) = config.step {
        warnings.push(format!("fixed step {s}: the objective is not guaranteed to decrease"));
    }
    let mut trace = Trace::new(&[
        "iter",
        "objective",
        "data",
        "h_residual",
        "x_residual",
        "h_step",
        "x_step",
        "fundamental",
        "centroid_row",
        "centroid_col",
        "floored",
    ]);
    let record = |trace: &mut Trace, k: usize, st: &DeconvState, obj: f64, data: f64, hs: f64, xs: f64| -> Result<()> {
        let (cr, cc) = centroid(&st.h);
        trace.push(vec![
            k as f64,
            obj,
            data,
            st.h_residual(),
            st.x_residual(flux),
            hs,
            xs,
            fundamental(problem, st, config.floor)?,
            cr,
            cc,
            st.floored as f64,
        ]);
        Ok(())
    };
    let (mut value, mut data) = composite_value(problem, &state, config)?;
    record(&mut trace, 0, &state, value, data, 0.0, 0.0)?;
    let armijo = matches!(config.step, StepPolicy::Armijo { .. });
    let mut converged = false;
    let mut k = 0;
    while k < config.max_iters {
        let hs = match problem.mode {
            Mode::Blind => update_h(problem, &mut state, config)?,
            Mode::KnownPsf => 0.0,
        };
        let xs = update_x(problem, &mut state, config)?;
        k += 1;
        let prev = value;
        (value, data) = composite_value(problem, &state, config)?;
        record(&mut trace, k, &state, value, data, hs, xs)?;
        if armijo && hs == 0.0 && xs == 0.0 {
            converged = true;
            break;
        }
        if armijo && config.tol > 0.0 && (prev - value) / prev.abs().max(f64::MIN_POSITIVE) < config.tol {
            converged = true;
            break;
        }
    }
    if state.floored > 0 {
        warnings.push(format!("model floored at {} in {} entries", config.floor, state.floored));
    }
    Ok(DeconvReport { state, objective: value, data_term: data, iterations: k, converged, trace, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r: usize, c: usize, seed: u64) -> Matrix {
        let mut s = seed;
        Matrix::from_fn(r, c, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            0.1 + (s >> 33) as f64 / (1u64 << 31) as f64
        })
    }

    #[test]
    fn delta_is_identity() {
        let b = grid(6, 5, 1);
        let out = convolve(&delta_psf(6, 5), &b).unwrap();
        for (a, e) in out.as_slice().iter().zip(b.as_slice()) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn correlate_is_flipped_convolution() {
        let a = grid(8, 8, 2);
        let u = grid(8, 8, 3);
        let c1 = correlate(&a, &u).unwrap();
        let c2 = convolve(&flip(&a), &u).unwrap();
        for (x, y) in c1.as_slice().iter().zip(c2.as_slice()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_is_normalized_and_centred() {
        let h = gaussian_psf(16, 16, 1.5).unwrap();
        assert!((h.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let (a, b) = centroid(&h);
        // even grid: the Nyquist row is counted at -N/2
        assert!(a.abs() < 1e-3 && b.abs() < 1e-3);
    }

    #[test]
    fn support_mask() {
        let mut h = gaussian_psf(8, 8, 2.0).unwrap();
        apply_support(&mut h, 1.0).unwrap();
        assert_eq!(h.as_slice().iter().filter(|&&v| v > 0.0).count(), 5);
        assert!((h.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn problem_checks_sums() {
        let y = grid(6, 6, 4);
        let x = DeconvProblem::flat_start(&y);
        let kl = crate::catalog::DivergenceSpec::parse("kl", &[]).unwrap();
        assert!(DeconvProblem::new(y.clone(), Mode::Blind, delta_psf(6, 6), x.clone(), kl).is_ok());
        let mut h = delta_psf(6, 6);
        h.set(1, 1, 0.1);
        assert!(matches!(DeconvProblem::new(y, Mode::Blind, h, x, kl), Err(Error::Constraint(_))));
    }
}

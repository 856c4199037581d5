//! C interface to divkit.
//!
//! Every function returns a [`DivkitStatus`]; on failure the message is
//! available from [`divkit_last_error`] on the same thread. Arrays are
//! caller-owned and row-major. Handles come from a `*_new` function and must
//! be released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use divkit::deconv::{blind_deconv_run, DeconvConfig, DeconvProblem, Mode, Variant};
use divkit::invariance::{log_form, make_invariant, Factor};
use divkit::linalg::Matrix;
use divkit::nmf::{nmf_run, NmfConfig, NmfProblem};
use divkit::sgm::Divergence;
use divkit::{DivergenceSpec, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivkitStatus {
    Ok = 0,
    Shape = 1,
    Domain = 2,
    Param = 3,
    NoClosedForm = 4,
    NotDecomposable = 5,
    Stall = 6,
    Decomposition = 7,
    Constraint = 8,
    Invariant = 9,
    Io = 10,
    NullPointer = 11,
    Panic = 12,
}

impl From<&Error> for DivkitStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Shape(_) => DivkitStatus::Shape,
            Error::Domain { .. } => DivkitStatus::Domain,
            Error::Param { .. } => DivkitStatus::Param,
            Error::NoClosedForm(_) => DivkitStatus::NoClosedForm,
            Error::NotDecomposable(_) => DivkitStatus::NotDecomposable,
            Error::Stall(_) => DivkitStatus::Stall,
            Error::Decomposition(_) => DivkitStatus::Decomposition,
            Error::Constraint(_) => DivkitStatus::Constraint,
            Error::Invariant(_) => DivkitStatus::Invariant,
            Error::Io(_) => DivkitStatus::Io,
        }
    }
}

/// Opaque divergence handle.
pub struct DivkitDivergence(Divergence);

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Fail(DivkitStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(DivkitStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DivkitStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DivkitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DivkitStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("panic inside divkit".into());
            DivkitStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(DivkitStatus::Param, format!("{what} is not UTF-8")))
}

unsafe fn input<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn handle<'a>(h: *const DivkitDivergence) -> Result<&'a Divergence, Fail> {
    h.as_ref().map(|d| &d.0).ok_or_else(|| null("divergence"))
}

/// Message of the last failed call on this thread, or null. Release it with
/// [`divkit_string_free`].
#[no_mangle]
pub extern "C" fn divkit_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(m) => CString::new(m.replace('\0', " ")).map_or(std::ptr::null_mut(), CString::into_raw),
        None => std::ptr::null_mut(),
    })
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn divkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a divergence. `names`/`values` hold `nparams` family parameters;
/// `factor` is null for the plain divergence, or `nominal`, `kstar`,
/// `general:a,b,d,g,mu`.
///
/// # Safety
/// Pointers must be valid for the stated lengths; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn divkit_divergence_new(
    family: *const c_char,
    names: *const *const c_char,
    values: *const f64,
    nparams: usize,
    factor: *const c_char,
    log_form_flag: bool,
    out: *mut *mut DivkitDivergence,
) -> DivkitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fam = text(family, "family")?;
        let mut kv = Vec::with_capacity(nparams);
        if nparams > 0 {
            if names.is_null() {
                return Err(null("names"));
            }
            let vals = input(values, nparams, "values")?;
            for (i, &v) in vals.iter().enumerate() {
                kv.push((text(*names.add(i), "parameter name")?.to_string(), v));
            }
        }
        let spec = DivergenceSpec::parse(fam, &kv)?;
        let div = if factor.is_null() {
            if log_form_flag {
                return Err(Fail(DivkitStatus::Param, "log form needs a factor".into()));
            }
            Divergence::Plain(spec)
        } else {
            let inv = make_invariant(spec, Factor::parse(text(factor, "factor")?)?)?;
            Divergence::Invariant(if log_form_flag { log_form(&inv)? } else { inv })
        };
        *out = Box::into_raw(Box::new(DivkitDivergence(div)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`divkit_divergence_new`], or be null.
#[no_mangle]
pub unsafe extern "C" fn divkit_divergence_free(h: *mut DivkitDivergence) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// `*out = D(p || q)` for fields of length `n`.
///
/// # Safety
/// `p`, `q` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn divkit_divergence_eval(
    h: *const DivkitDivergence,
    p: *const f64,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> DivkitStatus {
    guard(|| {
        let d = handle(h)?;
        let v = d.evaluate(input(p, n, "p")?, input(q, n, "q")?)?;
        *output(out, 1, "out")?.first_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// Gradient with respect to `q` into `out[n]`.
///
/// # Safety
/// `p`, `q`, `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn divkit_divergence_gradient(
    h: *const DivkitDivergence,
    p: *const f64,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> DivkitStatus {
    guard(|| {
        let d = handle(h)?;
        let g = d.gradient_q(input(p, n, "p")?, input(q, n, "q")?)?;
        output(out, n, "out")?.copy_from_slice(&g);
        Ok(())
    })
}

/// Factor `y[rows x cols] ~ H X` with the default solver settings.
/// `h_out` receives `rows x rank`, `x_out` `rank x cols`; `objective` may be null.
///
/// # Safety
/// Arrays must have the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn divkit_nmf(
    h: *const DivkitDivergence,
    y: *const f64,
    rows: usize,
    cols: usize,
    rank: usize,
    max_iters: usize,
    seed: u64,
    h_out: *mut f64,
    x_out: *mut f64,
    objective: *mut f64,
) -> DivkitStatus {
    guard(|| {
        let d = *handle(h)?;
        let y = Matrix::from_vec(rows, cols, input(y, rows * cols, "y")?.to_vec())?;
        let problem = NmfProblem::new(y, d)?;
        let config = NmfConfig { rank, max_iters, seed, ..Default::default() };
        let rep = nmf_run(&problem, &config)?;
        output(h_out, rows * rank, "h_out")?.copy_from_slice(rep.state.h.as_slice());
        output(x_out, rank * cols, "x_out")?.copy_from_slice(rep.state.x.as_slice());
        if !objective.is_null() {
            *objective = rep.objective;
        }
        Ok(())
    })
}

/// Deconvolve `y[rows x cols]`. `psf` holds the PSF (known mode) or the
/// starting PSF (blind) and receives the final PSF; `x_out` the object,
/// started flat. The divergence must be invariant for `variant` 0.
/// `variant`: 0 invariant, 1 change of variables, 2 multiplicative.
///
/// # Safety
/// Arrays must hold `rows * cols` values; `data_term` may be null.
#[no_mangle]
pub unsafe extern "C" fn divkit_deconv(
    h: *const DivkitDivergence,
    y: *const f64,
    rows: usize,
    cols: usize,
    psf: *mut f64,
    blind: bool,
    variant: u32,
    max_iters: usize,
    x_out: *mut f64,
    data_term: *mut f64,
) -> DivkitStatus {
    guard(|| {
        let d = *handle(h)?;
        let n = rows * cols;
        let y = Matrix::from_vec(rows, cols, input(y, n, "y")?.to_vec())?;
        let psf = output(psf, n, "psf")?;
        let mut h0 = Matrix::from_vec(rows, cols, psf.to_vec())?;
        h0.normalize_all()?;
        let x0 = DeconvProblem::flat_start(&y);
        let mode = if blind { Mode::Blind } else { Mode::KnownPsf };
        let variant = match variant {
            0 => Variant::Invariant,
            1 => Variant::ChangeVar,
            2 => Variant::Multiplicative,
            v => return Err(Fail(DivkitStatus::Param, format!("variant {v} is not 0, 1 or 2"))),
        };
        let problem = DeconvProblem::new(y, mode, h0, x0, d)?;
        let rep = blind_deconv_run(&problem, &DeconvConfig { max_iters, variant, ..Default::default() })?;
        psf.copy_from_slice(rep.state.h.as_slice());
        output(x_out, n, "x_out")?.copy_from_slice(rep.state.x.as_slice());
        if !data_term.is_null() {
            *data_term = rep.data_term;
        }
        Ok(())
    })
}

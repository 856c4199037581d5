//! Divergences generated by convex functions, their scale-invariant forms,
//! split-gradient solvers, and two applications: constrained NMF and
//! (blind) deconvolution.
//!
//! | module | contents |
//! |---|---|
//! | [`convex`] | generators, Csiszar / Bregman / Jensen constructors, generalized log and means |
//! | [`catalog`] | named divergence families with closed-form values and `q`-gradients |
//! | [`invariance`] | scale factors, invariant forms, log forms, gap formulas |
//! | [`sgm`] | split-gradient solvers with Armijo line search |
//! | [`penalty`] | smoothness and sparsity penalties |
//! | [`nmf`] | sum-constrained NMF |
//! | [`deconv`] | FFT convolution, known-PSF and blind deconvolution |
//! | [`io`] | vector, matrix and image files |
//!
//! Fields are plain `&[f64]` slices; `q` always denotes the model argument
//! and every gradient is taken with respect to it.

pub mod catalog;
pub mod check;
pub mod convex;
pub mod deconv;
pub mod error;
pub mod field;
pub mod invariance;
pub mod io;
pub mod linalg;
pub mod nmf;
pub mod penalty;
pub mod sgm;

pub use catalog::{DivergenceSpec, Family, Params};
pub use error::{Error, Result};
pub use invariance::{Factor, InvariantDivergence};

/// Distance to a singular parameter value below which the limit form is used.
pub const LIMIT_TOL: f64 = 1e-8;

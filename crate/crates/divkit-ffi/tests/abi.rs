use std::ffi::{CStr, CString};
use std::ptr::{null, null_mut};

use divkit::deconv::{convolve, gaussian_psf};
use divkit::linalg::Matrix;
use divkit_ffi::*;

fn new_div(family: &str, factor: Option<&str>) -> *mut DivkitDivergence {
    let fam = CString::new(family).unwrap();
    let fac = factor.map(|f| CString::new(f).unwrap());
    let mut h = null_mut();
    let s = unsafe {
        divkit_divergence_new(fam.as_ptr(), null(), null(), 0, fac.as_ref().map_or(null(), |f| f.as_ptr()), false, &mut h)
    };
    assert_eq!(s, DivkitStatus::Ok);
    h
}

fn last_error() -> String {
    let p = divkit_last_error();
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { divkit_string_free(p) };
    s
}

#[test]
fn invariant_handle_gradient_has_zero_flux() {
    let h = new_div("kl", Some("nominal"));
    let (p, q) = ([0.4, 1.3, 2.2], [1.0, 0.5, 3.0]);
    let mut g = [0.0; 3];
    assert_eq!(unsafe { divkit_divergence_gradient(h, p.as_ptr(), q.as_ptr(), 3, g.as_mut_ptr()) }, DivkitStatus::Ok);
    let flux: f64 = g.iter().zip(&q).map(|(a, b)| a * b).sum();
    assert!(flux.abs() <= 1e-12);
    let (mut a, mut b) = (0.0, 0.0);
    let q7: Vec<f64> = q.iter().map(|v| 7.0 * v).collect();
    unsafe {
        divkit_divergence_eval(h, p.as_ptr(), q.as_ptr(), 3, &mut a);
        divkit_divergence_eval(h, p.as_ptr(), q7.as_ptr(), 3, &mut b);
        divkit_divergence_free(h);
    }
    assert!((a - b).abs() <= 1e-12 * a);
}

#[test]
fn nmf_through_the_abi_keeps_the_sums() {
    let h = new_div("kl", None);
    let (rows, cols, rank) = (6, 5, 2);
    let y: Vec<f64> = (0..rows * cols).map(|k| 1.0 + ((k * 7) % 5) as f64).collect();
    let (mut ho, mut xo, mut obj) = (vec![0.0; rows * rank], vec![0.0; rank * cols], 0.0);
    let s = unsafe { divkit_nmf(h, y.as_ptr(), rows, cols, rank, 50, 1, ho.as_mut_ptr(), xo.as_mut_ptr(), &mut obj) };
    assert_eq!(s, DivkitStatus::Ok);
    for m in 0..rank {
        let c: f64 = (0..rows).map(|i| ho[i * rank + m]).sum();
        assert!((c - 1.0).abs() <= 1e-10);
    }
    for j in 0..cols {
        let (xs, ys): (f64, f64) = ((0..rank).map(|m| xo[m * cols + j]).sum(), (0..rows).map(|i| y[i * cols + j]).sum());
        assert!((xs - ys).abs() <= 1e-10 * ys);
    }
    // this data factorizes exactly, so the objective ends at rounding level
    assert!(obj.is_finite() && obj >= -1e-12 * y.iter().sum::<f64>(), "{obj}");

    // a wrong length for rank 0 surfaces as an error code, not a crash
    let s = unsafe { divkit_nmf(h, y.as_ptr(), rows, cols, 0, 5, 1, ho.as_mut_ptr(), xo.as_mut_ptr(), null_mut()) };
    assert_ne!(s, DivkitStatus::Ok);
    assert!(!last_error().is_empty());
    unsafe { divkit_divergence_free(h) };
}

#[test]
fn deconv_through_the_abi() {
    let n = 8;
    let mut obj = Matrix::from_fn(n, n, |_, _| 1.0);
    obj.set(2, 3, 20.0);
    let psf = gaussian_psf(n, n, 1.0).unwrap();
    let y = convolve(&psf, &obj).unwrap();
    let h = new_div("kl", Some("nominal"));
    let mut h0 = gaussian_psf(n, n, 2.0).unwrap().as_slice().to_vec();
    let (mut x, mut data) = (vec![0.0; n * n], 0.0);
    let s = unsafe { divkit_deconv(h, y.as_slice().as_ptr(), n, n, h0.as_mut_ptr(), true, 0, 30, x.as_mut_ptr(), &mut data) };
    assert_eq!(s, DivkitStatus::Ok);
    assert!((h0.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
    let ys: f64 = y.as_slice().iter().sum();
    assert!((x.iter().sum::<f64>() - ys).abs() <= 1e-8 * ys);

    let s = unsafe { divkit_deconv(h, y.as_slice().as_ptr(), n, n, h0.as_mut_ptr(), true, 7, 3, x.as_mut_ptr(), null_mut()) };
    assert_eq!(s, DivkitStatus::Param);
    assert!(last_error().contains("variant"));
    unsafe { divkit_divergence_free(h) };
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/divkit.h")).unwrap();
    for name in [
        "divkit_last_error",
        "divkit_string_free",
        "divkit_divergence_new",
        "divkit_divergence_free",
        "divkit_divergence_eval",
        "divkit_divergence_gradient",
        "divkit_nmf",
        "divkit_deconv",
        "DivkitStatus",
        "DivkitDivergence",
    ] {
        assert!(header.contains(name), "{name} missing from the header");
    }
}

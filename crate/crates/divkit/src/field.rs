//! Field validation and small numeric helpers shared across modules.

use crate::error::{Error, Result};

/// Positivity class a field must belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positivity {
    NonNegative,
    Positive,
}

pub fn check_same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("p has {} entries, q has {}", p.len(), q.len())));
    }
    if p.is_empty() {
        return Err(Error::Shape("empty field".into()));
    }
    Ok(())
}

pub fn require(v: &[f64], class: Positivity, which: &str) -> Result<()> {
    for (i, &x) in v.iter().enumerate() {
        let ok = match class {
            Positivity::Positive => x > 0.0 && x.is_finite(),
            Positivity::NonNegative => x >= 0.0 && x.is_finite(),
        };
        if !ok {
            let need = match class {
                Positivity::Positive => "> 0",
                Positivity::NonNegative => ">= 0",
            };
            return Err(Error::domain(i, format!("{which}[{i}] = {x}, need {need}")));
        }
    }
    Ok(())
}

/// Replace every entry below `eps` by `eps`.
pub fn floor_field(v: &[f64], eps: f64) -> Vec<f64> {
    v.iter().map(|&x| if x < eps { eps } else { x }).collect()
}

/// `n` logarithmically spaced points on `[lo, hi]`.
pub fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// `x ln(x / y)` with the `0 ln 0 = 0` convention.
pub fn xlogxy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Format a value with 15 significant digits, `%.15g` style.
/// Shortest text that reads back to `x`, in exponent form outside
/// `[1e-4, 1e15)`.
pub fn fmt_exact(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_sig15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*e}", 14, x);
    let (mant, exp) = s.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let t = format!("{:.*}", decimals, x);
        trim_zeros(&t)
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig15_matches_printf() {
        assert_eq!(fmt_sig15(0.386294361119890_6), "0.386294361119891");
        assert_eq!(fmt_sig15(1.0), "1");
        assert_eq!(fmt_sig15(-2.5e-9), "-2.5e-09");
        assert_eq!(fmt_sig15(123456.0), "123456");
        assert_eq!(fmt_exact(2.220446049250313e-16), "2.220446049250313e-16");
        assert_eq!(fmt_exact(0.25), "0.25");
        assert_eq!(fmt_exact(1e300).parse::<f64>().unwrap(), 1e300);
    }

    #[test]
    fn floor_and_grid() {
        assert_eq!(floor_field(&[0.0, 2.0, -1.0], 1e-12), vec![1e-12, 2.0, 1e-12]);
        let g = log_grid(64, 1e-3, 1e3);
        assert_eq!(g.len(), 64);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[63] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn require_reports_index() {
        let e = require(&[1.0, 0.0], Positivity::Positive, "q").unwrap_err();
        assert!(matches!(e, Error::Domain { index: Some(1), .. }));
        assert!(require(&[1.0, 0.0], Positivity::NonNegative, "p").is_ok());
    }
}

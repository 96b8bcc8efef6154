//! Adaptive Simpson quadrature and cumulative primitives.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("tolerance {tol:e} not reached on [{a}, {b}] within recursion depth {depth}")]
    ToleranceNotReached { a: f64, b: f64, tol: f64, depth: usize },
    #[error("non-finite integrand value at {x}")]
    NonFinite { x: f64 },
}

const MAX_DEPTH: usize = 48;

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `a > b` is allowed and yields the signed integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };
    let (fa, fb) = (eval(a)?, eval(b)?);
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&eval, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<E: Fn(f64) -> Result<f64, QuadratureError>>(
    eval: &E,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64, QuadratureError> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (eval(lm)?, eval(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadratureError::ToleranceNotReached { a, b, tol, depth: MAX_DEPTH });
    }
    Ok(recurse(eval, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + recurse(eval, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Values of `z ↦ ∫₀^z f` at every entry of `points`.
///
/// Points are visited in sorted order and the primitive is accumulated
/// interval by interval, so the total cost is one pass over the range.
pub fn primitive_at<F: Fn(f64) -> f64 + ?Sized>(f: &F, points: &[f64], tol: f64) -> Result<Vec<f64>, QuadratureError> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
    let mut out = vec![0.0; points.len()];
    // split into the part below zero (walk downwards) and above zero (walk upwards)
    let split = order.partition_point(|&i| points[i] < 0.0);
    let per_piece = tol / (points.len().max(1) as f64);
    let (mut at, mut acc) = (0.0, 0.0);
    for &i in &order[split..] {
        acc += adaptive_simpson(f, at, points[i], per_piece)?;
        at = points[i];
        out[i] = acc;
    }
    let (mut at, mut acc) = (0.0, 0.0);
    for &i in order[..split].iter().rev() {
        acc += adaptive_simpson(f, at, points[i], per_piece)?;
        at = points[i];
        out[i] = acc;
    }
    Ok(out)
}

/// Composite trapezoid rule on `m` uniform panels. Used as an independent
/// reference in tests.
pub fn trapezoid<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m).map(|k| f(a + k as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_transcendental() {
        let v = adaptive_simpson(&|t: f64| 2.0 * t + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
        let v = adaptive_simpson(&|t: f64| t.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(&|t: f64| t.cos(), 1.0, 0.0, 1e-12).unwrap();
        assert!((v + 1f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn primitive_handles_unsorted_and_negative_points() {
        let pts = [0.5, -0.25, 2.0, 0.0, 1.0];
        let got = primitive_at(&|t: f64| 3.0 * t * t, &pts, 1e-12).unwrap();
        for (p, g) in pts.iter().zip(&got) {
            assert!((g - p.powi(3)).abs() < 1e-12, "{p}: {g}");
        }
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = adaptive_simpson(&|t: f64| 1.0 / t, 0.0, 1.0, 1e-10);
        assert!(r.is_err());
    }
}

//! Bracketed scalar root finding (Illinois regula falsi with a bisection guard).

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 500;

/// Finds a sign change of `f` on `[lo, hi]`.
///
/// Stops when `|f(x)| <= f_tol` or the bracket is narrower than `x_tol`.
/// Every iterate lies inside the current bracket.
pub fn bracketed_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, f_tol: f64) -> Result<RootResult> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if !(fa * fb <= 0.0) {
        return Err(Error::NoBracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    if fa == 0.0 {
        return Ok(RootResult { root: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(RootResult { root: b, residual: 0.0, iterations: 0 });
    }

    // Which endpoint was retained last step (-1 = a, 1 = b), for the Illinois halving.
    let mut side = 0i8;
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for it in 1..=MAX_ITER {
        let width = b - a;
        let mut x = b - fb * width / (fb - fa);
        // Fall back to bisection when the secant point is unusable or hugs an endpoint.
        let margin = 0.01 * width;
        if !x.is_finite() || x <= a + margin || x >= b - margin || it % 8 == 0 {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 || fx.abs() <= f_tol {
            return Ok(RootResult { root: x, residual: fx, iterations: it });
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= x_tol {
            return Ok(RootResult {
                root: best.0,
                residual: best.1,
                iterations: it,
            });
        }
    }
    Ok(RootResult {
        root: best.0,
        residual: best.1,
        iterations: MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_root() {
        let r = bracketed_root(|x| x - 0.5, 0.0, 1.0, 1e-14, 1e-15).unwrap();
        assert!((r.root - 0.5).abs() < 1e-14);
    }

    #[test]
    fn no_sign_change() {
        assert!(matches!(
            bracketed_root(|x| x * x, 1.0, 2.0, 1e-12, 1e-12),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn cosine_root_is_half_pi() {
        let r = bracketed_root(f64::cos, 1.0, 2.0, 1e-13, 0.0).unwrap();
        assert!((r.root - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
        // same constant by 200 steps of plain bisection
        let (mut a, mut b) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m.cos() > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        assert!((r.root - a).abs() < 1e-13);
    }

    #[test]
    fn residual_is_reported() {
        let r = bracketed_root(|x| x.powi(3) - 2.0, 0.0, 3.0, 1e-15, 1e-12).unwrap();
        assert!(r.residual.abs() <= 1e-12 || r.iterations > 0);
        assert!((r.root - 2f64.cbrt()).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn root_sits_on_a_sign_change(c in -0.9..0.9f64, p in 1u32..7) {
            let f = |x: f64| (x - c).powi(p as i32 * 2 - 1) + 1e-3 * (x - c);
            let r = bracketed_root(f, -1.0, 1.0, 1e-12, 0.0).unwrap();
            prop_assert!((-1.0..=1.0).contains(&r.root));
            let h = 1e-9;
            prop_assert!(f(r.root - h) * f(r.root + h) <= 0.0);
        }
    }
}

//! Exponent-scaled hyperbolic kernels.
//!
//! Barrier formulas are ratios like `e^a sinh(b) / sinh(c)` whose pieces
//! overflow long before the ratio does. Everything here factors out
//! `e^{|b| - |c|}` first and works with `1 - e^{-2|x|}` afterwards.

use crate::error::{Error, Result};

/// Largest exponent `exp` can take without overflowing.
const MAX_EXP: f64 = 709.0;

/// `sqrt(2r / sigma^2 + mu^2 / sigma^4)`.
pub fn xi_exponent(r: f64, mu: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let m = mu / s2;
    (2.0 * r / s2 + m * m).sqrt()
}

/// `e^a * sinh(b) / sinh(c)` evaluated as
/// `exp(a + |b| - |c|) * sign(b) (1 - e^{-2|b|}) / (sign(c) (1 - e^{-2|c|}))`.
pub fn exp_sinh_ratio(a: f64, b: f64, c: f64) -> Result<f64> {
    if c == 0.0 || c.is_nan() {
        return Err(Error::Config(format!("exp_sinh_ratio: sinh denominator argument {c}")));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    let exponent = a + b.abs() - c.abs();
    if exponent > MAX_EXP {
        return Err(Error::Overflow { exponent });
    }
    let num = -(-2.0 * b.abs()).exp_m1();
    let den = -(-2.0 * c.abs()).exp_m1();
    Ok(exponent.exp() * b.signum() * c.signum() * num / den)
}

/// `e^a * cosh(b) / sinh(c)`, scaled the same way.
pub fn exp_cosh_ratio(a: f64, b: f64, c: f64) -> Result<f64> {
    if c == 0.0 || c.is_nan() {
        return Err(Error::Config(format!("exp_cosh_ratio: sinh denominator argument {c}")));
    }
    let exponent = a + b.abs() - c.abs();
    if exponent > MAX_EXP {
        return Err(Error::Overflow { exponent });
    }
    let num = 1.0 + (-2.0 * b.abs()).exp();
    let den = -(-2.0 * c.abs()).exp_m1();
    Ok(exponent.exp() * c.signum() * num / den)
}

/// Natural log of `|e^a sinh(b) / sinh(c)|`, for ratios outside the f64 range.
pub fn ln_exp_sinh_ratio(a: f64, b: f64, c: f64) -> f64 {
    a + b.abs() - c.abs() + (-(-2.0 * b.abs()).exp_m1()).ln() - (-(-2.0 * c.abs()).exp_m1()).ln()
}

/// `e^a sinh(xi * num_len) / sinh(xi * den_len)` for lengths `0 <= num_len`,
/// `0 < den_len`, falling back to the `xi -> 0` expansion when both sinh
/// arguments are tiny.
pub fn scaled_sinh_quotient(a: f64, xi: f64, num_len: f64, den_len: f64) -> Result<f64> {
    let x = xi * den_len;
    if x.abs() < 1e-5 {
        let q = num_len / den_len;
        let correction = 1.0 + xi * xi * (num_len * num_len - den_len * den_len) / 6.0;
        return Ok(a.exp() * q * correction);
    }
    exp_sinh_ratio(a, xi * num_len, x)
}

/// `x / sinh(x)`, continuous at zero.
pub fn x_over_sinh(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else if x.abs() > MAX_EXP {
        0.0
    } else {
        x / x.sinh()
    }
}

/// `(e^x - 1 - x) / x^2`, continuous at zero where it equals 1/2.
pub fn expm1_minus_x_over_x2(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        // Taylor tail is below 1e-17 at |x| = 1e-2 after these terms.
        let mut term = 0.5;
        let mut sum = 0.0;
        for j in 0..8 {
            sum += term;
            term *= x / (j as f64 + 3.0);
        }
        sum
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

/// `(e^{c h} - 1) / c`, the integral of `e^{c v}` over `[0, h]`, continuous at `c = 0`.
pub fn exp_integral(c: f64, h: f64) -> f64 {
    let x = c * h;
    if x.abs() < 1e-8 {
        h * (1.0 + 0.5 * x)
    } else {
        x.exp_m1() / c
    }
}

/// `coth(x)` for `x > 0` without forming cosh or sinh.
pub fn coth(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    x.signum() * (1.0 + e) / (1.0 - e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn xi_exponent_limits() {
        assert!((xi_exponent(0.0, -0.045, 0.3) - 0.5).abs() < 1e-15);
        assert!((xi_exponent(0.02, 0.0, 0.2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xi_exponent_matches_extended_precision() {
        // sqrt(0.04/0.09 + 0.000625/0.0081) evaluated with 50-digit arithmetic
        let reference = 0.722_222_222_222_222_2_f64;
        assert!(rel(xi_exponent(0.02, -0.025, 0.3), reference) < 1e-15);
        // bound |mu| / sigma^2
        assert!(xi_exponent(0.02, -0.025, 0.3) >= 0.025 / 0.09);
    }

    #[test]
    fn sinh_ratio_trivial_cases() {
        assert_eq!(exp_sinh_ratio(0.0, 5.0, 5.0).unwrap(), 1.0);
        assert_eq!(exp_sinh_ratio(0.0, 0.0, 3.0).unwrap(), 0.0);
        assert!(exp_sinh_ratio(0.0, 1.0, 0.0).is_err());
        assert!(matches!(exp_sinh_ratio(800.0, 1.0, 1.0), Err(Error::Overflow { .. })));
        // odd in b and c
        assert_eq!(exp_sinh_ratio(0.3, -2.0, 1.0).unwrap(), -exp_sinh_ratio(0.3, 2.0, 1.0).unwrap());
        assert_eq!(exp_sinh_ratio(0.3, 2.0, -1.0).unwrap(), -exp_sinh_ratio(0.3, 2.0, 1.0).unwrap());
    }

    #[test]
    fn sinh_ratio_huge_arguments() {
        // e^{-1000} sinh(1000)/sinh(1001) = e^{-1001}(1-e^{-2000})/(1-e^{-2002}); in log space -1001
        // to 50-digit precision, the correction terms are below 1e-800.
        let ln = ln_exp_sinh_ratio(-1000.0, 1000.0, 1001.0);
        assert!(rel(ln, -1001.0) < 1e-12);
        // The value itself is below the f64 range and flushes to zero.
        assert_eq!(exp_sinh_ratio(-1000.0, 1000.0, 1001.0).unwrap(), 0.0);
        // In-range result from out-of-range pieces: e^{1000} sinh(1000)/sinh(1999) = e^1 (to 1e-800).
        let v = exp_sinh_ratio(1000.0, 1000.0, 1999.0).unwrap();
        assert!(rel(v, std::f64::consts::E) < 1e-12);
    }

    #[test]
    fn sinh_ratio_agrees_with_direct_evaluation_on_grid() {
        let n = 50;
        let grid = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let a = grid(i, -20.0, 20.0);
            for j in 0..n {
                let b = grid(j, -20.0, 20.0);
                for l in 0..n {
                    // skip c == 0 (grid contains no exact zero, but keep the guard)
                    let c = grid(l, -20.0, 20.0);
                    if c == 0.0 {
                        continue;
                    }
                    let direct = a.exp() * b.sinh() / c.sinh();
                    let scaled = exp_sinh_ratio(a, b, c).unwrap();
                    if direct != 0.0 {
                        worst = worst.max(rel(scaled, direct));
                    }
                }
            }
        }
        assert!(worst < 1e-12, "worst relative deviation {worst}");
    }

    #[test]
    fn cosh_ratio_matches_direct() {
        for &(a, b, c) in &[(0.1, 0.5, 1.5), (-2.0, 3.0, 4.0), (1.0, -2.0, 0.5), (0.0, 0.0, 2.0)] {
            let direct = f64::exp(a) * f64::cosh(b) / f64::sinh(c);
            assert!(rel(exp_cosh_ratio(a, b, c).unwrap(), direct) < 1e-13);
        }
    }

    #[test]
    fn small_argument_helpers_are_continuous() {
        for &x in &[1e-9, 1e-5, 9.99e-3, 1.01e-2, 0.5, -0.5, -1e-3] {
            let direct = ((x as f64).exp_m1() - x) / (x * x);
            if x.abs() > 1e-4 {
                assert!(rel(expm1_minus_x_over_x2(x), direct) < 1e-9, "x = {x}");
            }
        }
        assert!((expm1_minus_x_over_x2(0.0) - 0.5).abs() < 1e-16);
        assert!((x_over_sinh(0.0) - 1.0).abs() < 1e-16);
        assert!(rel(x_over_sinh(2.0), 2.0 / 2f64.sinh()) < 1e-15);
        assert!((exp_integral(0.0, 2.0) - 2.0).abs() < 1e-16);
        assert!(rel(exp_integral(0.3, 2.0), (0.6f64.exp() - 1.0) / 0.3) < 1e-15);
        assert!(rel(coth(0.7), 1.0 / 0.7f64.tanh()) < 1e-15);
    }

    #[test]
    fn sinh_quotient_small_xi_branch() {
        let exact = |xi: f64| (0.1 * xi).sinh() / (0.3 * xi).sinh();
        for &xi in &[1e-7, 1e-5, 3e-5, 1e-3, 1.0] {
            let v = scaled_sinh_quotient(0.0, xi, 0.1, 0.3).unwrap();
            assert!(rel(v, exact(xi)) < 1e-12, "xi = {xi}");
        }
        assert!((scaled_sinh_quotient(0.0, 0.0, 0.1, 0.3).unwrap() - 1.0 / 3.0).abs() < 1e-16);
    }
}

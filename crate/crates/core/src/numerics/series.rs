//! Guarded series summation and closed-form discounted integrals of
//! `(A + B t) e^{-lam t}` terms.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_N_MAX: usize = 4096;
/// Number of consecutive small terms required before stopping.
const SMALL_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
}

impl SeriesResult {
    /// The value, or `NotConverged` tagged with `what`.
    pub fn require(self, what: &'static str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NotConverged {
                what,
                terms: self.terms_used,
            })
        }
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Sums `term(1) + term(2) + ...` until three consecutive terms satisfy
/// `|term| < tol (1 + |partial sum|)`, or `n_max` terms have been used.
pub fn sum_series<F: FnMut(usize) -> f64>(mut term: F, tol: f64, n_max: usize) -> SeriesResult {
    debug_assert!(tol > 0.0 && n_max >= 1);
    let mut acc = KahanSum::new();
    let mut small = 0;
    for n in 1..=n_max {
        let t = term(n);
        acc.add(t);
        if !t.is_finite() {
            return SeriesResult {
                value: acc.value(),
                terms_used: n,
                converged: false,
            };
        }
        if t.abs() < tol * (1.0 + acc.value().abs()) {
            small += 1;
            if small >= SMALL_RUN {
                return SeriesResult {
                    value: acc.value(),
                    terms_used: n,
                    converged: true,
                };
            }
        } else {
            small = 0;
        }
    }
    SeriesResult {
        value: acc.value(),
        terms_used: n_max,
        converged: false,
    }
}

/// `(1 - e^{-x}) / x`, continuous at zero.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `int_0^T e^{-r t} (A + B t) e^{-lam t} dt`; `t_end = None` means `T = inf`.
pub fn discounted_linear_exp_integral(a: f64, b: f64, lam: f64, r: f64, t_end: Option<f64>) -> Result<f64> {
    let s = r + lam;
    match t_end {
        None => {
            if s <= 0.0 {
                return Err(Error::DegenerateDenominator {
                    what: "discounted integral over infinite horizon",
                    value: s,
                });
            }
            Ok(a / s + b / (s * s))
        }
        Some(t) => {
            let x = s * t;
            let i0 = t * phi1(x);
            let i1 = t * t * first_moment_kernel(x);
            Ok(a * i0 + b * i1)
        }
    }
}

/// `(1 - e^{-x}(1 + x)) / x^2`, continuous at zero where it equals 1/2.
fn first_moment_kernel(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        // 1/2 - x/3 + x^2/8 - x^3/30 + ... ; coefficient of x^j is (-1)^j (j+1) / (j+2)!
        let mut sum = 0.0;
        let mut fact = 2.0; // (j+2)!
        let mut pow = 1.0;
        for j in 0..10 {
            sum += pow * (j as f64 + 1.0) / fact;
            pow *= -x;
            fact *= j as f64 + 3.0;
        }
        sum
    } else {
        (-(-x).exp_m1() - x * (-x).exp()) / (x * x)
    }
}

/// `int_T^inf e^{-s t} (A + B t) dt` with `s = r + lam > 0`, i.e. the part a
/// finite-horizon integral leaves out: `e^{-sT} [A/s + B (T/s + 1/s^2)]`.
pub fn discounted_linear_exp_tail(a: f64, b: f64, lam: f64, r: f64, t: f64) -> Result<f64> {
    let s = r + lam;
    if s <= 0.0 {
        return Err(Error::DegenerateDenominator {
            what: "discounted tail integral",
            value: s,
        });
    }
    Ok((-s * t).exp() * (a / s + b * (t / s + 1.0 / (s * s))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_series_converges() {
        let r = sum_series(|_| 0.0, DEFAULT_TOL, DEFAULT_N_MAX);
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
        assert_eq!(r.terms_used, 3);
    }

    #[test]
    fn geometric_series() {
        let r = sum_series(|n| 0.5f64.powi(n as i32), DEFAULT_TOL, DEFAULT_N_MAX);
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < DEFAULT_TOL);
    }

    #[test]
    fn gaussian_weighted_series_matches_long_sum() {
        let term = |n: usize| {
            let x = n as f64;
            x * (-0.01 * x * x).exp()
        };
        let r = sum_series(term, DEFAULT_TOL, DEFAULT_N_MAX);
        assert!(r.converged);
        let brute: KahanSum = (1..=1_000_000).map(term).collect();
        assert!((r.value - brute.value()).abs() < DEFAULT_TOL * brute.value());
        // 40-digit reference value
        assert!((r.value - 49.916_583_134_223_016).abs() < 1e-10);
    }

    #[test]
    fn non_convergent_series_is_flagged() {
        let r = sum_series(|n| 1.0 / n as f64, 1e-12, 100);
        assert!(!r.converged);
        assert_eq!(r.terms_used, 100);
        assert!(r.require("harmonic").is_err());
    }

    #[test]
    fn integral_trivial_cases() {
        assert!((discounted_linear_exp_integral(1.0, 0.0, 0.0, 1.0, None).unwrap() - 1.0).abs() < 1e-15);
        assert!((discounted_linear_exp_integral(0.0, 1.0, 0.0, 1.0, None).unwrap() - 1.0).abs() < 1e-15);
        assert!(discounted_linear_exp_integral(1.0, 0.0, 0.0, 0.0, None).is_err());
        // s = 0 with finite horizon is fine: int_0^2 (1 + t) dt = 4
        assert!((discounted_linear_exp_integral(1.0, 1.0, 0.0, 0.0, Some(2.0)).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn integral_matches_quadrature() {
        // Adaptive quadrature at 40 digits.
        let v = discounted_linear_exp_integral(0.3, -0.2, 2.5, 0.02, Some(1.7)).unwrap();
        assert!((v - 0.088_206_609_116_150_536).abs() < 1e-10);
    }

    #[test]
    fn finite_plus_tail_is_perpetual() {
        for &(a, b, lam, r, t) in &[(0.3, -0.2, 2.5, 0.02, 1.7), (1.0, 2.0, 1e-9, 1e-9, 3.0), (0.0, 1.0, 40.0, 0.1, 0.001)] {
            let fin = discounted_linear_exp_integral(a, b, lam, r, Some(t)).unwrap();
            let tail = discounted_linear_exp_tail(a, b, lam, r, t).unwrap();
            let perp = discounted_linear_exp_integral(a, b, lam, r, None).unwrap();
            assert!((fin + tail - perp).abs() < 1e-12 * perp.abs().max(1.0), "{a} {b} {lam} {r} {t}");
        }
    }

    #[test]
    fn moment_kernel_is_continuous() {
        for &x in &[0.0099, 0.0101, -0.0099, -0.0101] {
            let direct = (-(-x as f64).exp_m1() - x * (-x as f64).exp()) / (x * x);
            assert!((first_moment_kernel(x) - direct).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn integral_is_linear(
            a1 in -5.0..5.0f64, b1 in -5.0..5.0f64,
            a2 in -5.0..5.0f64, b2 in -5.0..5.0f64,
            lam in 0.0..50.0f64, r in 0.0..1.0f64, t in 0.0..10.0f64,
        ) {
            let f = |a, b| discounted_linear_exp_integral(a, b, lam, r, Some(t)).unwrap();
            let lhs = f(a1 + a2, b1 + b2);
            let rhs = f(a1, b1) + f(a2, b2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}

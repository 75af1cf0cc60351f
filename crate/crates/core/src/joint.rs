//! Joint law of the drawdown and drawup of the log-price: which of the two
//! reaches `k` first, and when.
//!
//! The density of "drawdown reaches `k` at `t`, drawup still below `k`" is an
//! eigenfunction series whose terms all have the shape
//! `(A_n + B_n t) e^{-lam_n t}` with `lam_n = sigma^2 C_n / (2 k^2)` and
//! `C_n = n^2 pi^2 + a^2 k^2`, `a = drift / sigma^2`.
//!
//! Finite-horizon transforms are computed as the closed-form perpetual
//! transform minus the term-wise tail over `(T, inf)`. The tail converges
//! exponentially fast for any `T > 0`, whereas the term-wise integrals
//! over `(0, T)` only converge like `1/n`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::Diffusion;
use crate::numerics::{
    discounted_linear_exp_tail, expm1_minus_x_over_x2, scaled_sinh_quotient, sum_series, x_over_sinh,
    DEFAULT_N_MAX, DEFAULT_TOL, DRIFT_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesConfig {
    pub tol: f64,
    pub n_max: usize,
    /// Smallest time at which raw densities are evaluated.
    pub t_floor: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            n_max: DEFAULT_N_MAX,
            t_floor: 1e-6,
        }
    }
}

impl SeriesConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid("tol", "series tolerance must be > 0", self.tol);
        }
        if !(self.t_floor > 0.0) {
            return invalid("t_floor", "t_floor must be > 0", self.t_floor);
        }
        if self.n_max < 1 {
            return invalid("n_max", "n_max must be >= 1", self.n_max as f64);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Series coefficients
// ---------------------------------------------------------------------------

/// `e^{expo} (a + b t) e^{-lam t}`; the exponent is kept apart so that large
/// drift factors meet the time decay before being exponentiated.
#[derive(Debug, Clone, Copy)]
struct Term {
    expo: f64,
    a: f64,
    b: f64,
    lam: f64,
}

impl Term {
    fn density(&self, t: f64) -> f64 {
        (self.expo - self.lam * t).exp() * (self.a + self.b * t)
    }

    fn tail(&self, rho: f64, t: f64) -> Result<f64> {
        Ok(self.expo.exp() * discounted_linear_exp_tail(self.a, self.b, self.lam, rho, t)?)
    }
}

struct Modes {
    a: f64,
    sigma2: f64,
    k: f64,
}

impl Modes {
    fn new(d: Diffusion, k: f64) -> Self {
        Self {
            a: d.drift_ratio(),
            sigma2: d.sigma * d.sigma,
            k,
        }
    }

    /// `(n pi, C_n, lam_n, sigma^2 n pi / k^2)`
    fn basics(&self, n: usize) -> (f64, f64, f64, f64) {
        let npi = n as f64 * PI;
        let c = npi * npi + self.a * self.a * self.k * self.k;
        let lam = self.sigma2 * c / (2.0 * self.k * self.k);
        (npi, c, lam, self.sigma2 * npi / (self.k * self.k))
    }

    fn f_term(&self, n: usize, y: f64) -> Term {
        let (npi, _, lam, pre) = self.basics(n);
        Term {
            expo: self.a * (y - self.k),
            a: pre * (npi * (self.k - y) / self.k).sin(),
            b: 0.0,
            lam,
        }
    }

    fn g_term(&self, n: usize, w: f64) -> Term {
        let (npi, c, lam, pre) = self.basics(n);
        let (a, k) = (self.a, self.k);
        let bn = npi / k;
        let (sn, cs) = (bn * w).sin_cos();
        let comb = bn * cs + a * sn;
        let b = pre * npi * npi * self.sigma2 / (c * k) * comb;
        let ak2 = a * k * k / c;
        let a_coef = pre
            * (-2.0 * k / c * comb
                + (npi / c) * (bn * (w + 2.0 * ak2) * sn + (1.0 - a * w - 2.0 * a * ak2) * cs));
        Term {
            expo: -a * w,
            a: a_coef,
            b,
            lam,
        }
    }

    /// Terms of `F_y + G_z - G_{k-y}` at index `n`.
    fn dd_first_terms(&self, n: usize, y: f64, z: f64) -> [Term; 3] {
        let mut gw = self.g_term(n, self.k - y);
        gw.a = -gw.a;
        gw.b = -gw.b;
        [self.f_term(n, y), self.g_term(n, z), gw]
    }

    /// Term `n` of the density of `Q(tau_D < tau_U ^ t)` from the origin.
    fn origin_term(&self, n: usize) -> Term {
        let (npi, c, lam, _) = self.basics(n);
        let (a, k) = (self.a, self.k);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let e = (-a * k).exp();
        let kappa = 2.0 * npi * npi / (c * c);
        let p = 1.0 - sign * e;
        let u = p * (1.0 - 4.0 * a * a * k * k / c) + sign * a * k * e;
        let v = p * npi * npi * self.sigma2 / (k * k);
        Term {
            expo: 0.0,
            a: kappa * (lam * u - v),
            b: kappa * lam * v,
            lam,
        }
    }

    /// `Q(tau_D < tau_U)` from the origin: `h(-2ak) (ak / sinh(ak))^2`.
    fn origin_limit(&self) -> f64 {
        let ak = self.a * self.k;
        expm1_minus_x_over_x2(-2.0 * ak) * x_over_sinh(ak).powi(2)
    }

    fn origin_cdf_term(&self, n: usize, t: f64) -> f64 {
        let (npi, c, lam, _) = self.basics(n);
        let (a, k) = (self.a, self.k);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let e = (-a * k).exp();
        let p = 1.0 - sign * e;
        let u = p * (1.0 - 4.0 * a * a * k * k / c) + sign * a * k * e;
        let v = p * npi * npi * self.sigma2 / (k * k);
        2.0 * npi * npi / (c * c) * (u + v * t) * (-lam * t).exp()
    }
}

fn check_diffusion_k(d: Diffusion, k: f64) -> Result<()> {
    if !(d.sigma > 0.0 && d.sigma.is_finite()) {
        return invalid("sigma", "sigma must be > 0", d.sigma);
    }
    if !d.drift.is_finite() {
        return invalid("mu", "drift must be finite", d.drift);
    }
    if !(k > 0.0 && k.is_finite()) {
        return invalid("k", "k must be > 0", k);
    }
    Ok(())
}

fn check_state(y: f64, z: f64, k: f64) -> Result<()> {
    if !(y >= 0.0 && y < k) {
        return invalid("y", "need 0 <= y < k", y);
    }
    if !(z >= 0.0 && z < k) {
        return invalid("z", "need 0 <= z < k", z);
    }
    if y + z >= k {
        return invalid("z", "y + z must be < k", y + z);
    }
    Ok(())
}

fn check_time(t: f64, cfg: &SeriesConfig) -> Result<()> {
    cfg.check()?;
    if !(t >= cfg.t_floor) || !t.is_finite() {
        return invalid("t", "density time must be finite and >= t_floor", t);
    }
    Ok(())
}

fn series<F: FnMut(usize) -> f64>(term: F, cfg: &SeriesConfig, what: &'static str) -> Result<f64> {
    sum_series(term, cfg.tol, cfg.n_max).require(what)
}

/// Runs `f` on every index, remembering the first error and returning NaN
/// in its place so the summation aborts as non-convergent.
fn series_fallible<F: FnMut(usize) -> Result<f64>>(mut f: F, cfg: &SeriesConfig, what: &'static str) -> Result<f64> {
    let mut first: Option<Error> = None;
    let r = sum_series(
        |n| match f(n) {
            Ok(v) => v,
            Err(e) => {
                first.get_or_insert(e);
                f64::NAN
            }
        },
        cfg.tol,
        cfg.n_max,
    );
    if let Some(e) = first {
        return Err(e);
    }
    r.require(what)
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// `F_y(t) = (sigma^2/k^2) sum n pi e^{a(y-k)} e^{-lam_n t} sin(n pi (k - y) / k)`.
pub fn f_series(y: f64, t: f64, d: Diffusion, k: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_diffusion_k(d, k)?;
    check_time(t, cfg)?;
    if !(0.0..=k).contains(&y) {
        return invalid("y", "need 0 <= y <= k", y);
    }
    let m = Modes::new(d, k);
    series(|n| m.f_term(n, y).density(t), cfg, "F series")
}

/// `G_z(t)`, each term of the form `(A_n + B_n t) e^{-lam_n t}`.
pub fn g_series(z: f64, t: f64, d: Diffusion, k: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_diffusion_k(d, k)?;
    check_time(t, cfg)?;
    if !(0.0..=k).contains(&z) {
        return invalid("z", "need 0 <= z <= k", z);
    }
    let m = Modes::new(d, k);
    series(|n| m.g_term(n, z).density(t), cfg, "G series")
}

/// Coefficients `(A_n, B_n, lam_n)` of term `n` of `G_z`, with the drift
/// factor `e^{-a z}` folded in.
pub fn g_series_term(n: usize, z: f64, d: Diffusion, k: f64) -> (f64, f64, f64) {
    let t = Modes::new(d, k).g_term(n, z);
    let s = t.expo.exp();
    (s * t.a, s * t.b, t.lam)
}

/// Density of the drawdown reaching `k` at `t` while the drawup stays below `k`.
pub fn dd_first_density(y: f64, z: f64, t: f64, d: Diffusion, k: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_diffusion_k(d, k)?;
    check_state(y, z, k)?;
    check_time(t, cfg)?;
    if y == 0.0 && z == 0.0 {
        return invalid("y", "the origin state has no pointwise series here; use dd_first_prob_origin", y);
    }
    let m = Modes::new(d, k);
    series(
        |n| m.dd_first_terms(n, y, z).iter().map(|tm| tm.density(t)).sum(),
        cfg,
        "drawdown-first density",
    )
}

/// `Q(tau_D < tau_U ^ t)` started from zero drawdown and zero drawup.
pub fn dd_first_prob_origin(t: f64, d: Diffusion, k: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_diffusion_k(d, k)?;
    cfg.check()?;
    if !(t >= 0.0) {
        return invalid("t", "t must be >= 0", t);
    }
    if t < cfg.t_floor {
        return Ok(0.0);
    }
    let m = Modes::new(d, k);
    let limit = m.origin_limit();
    if t.is_infinite() {
        return Ok(limit);
    }
    let s = series(|n| m.origin_cdf_term(n, t), cfg, "origin series")?;
    Ok((limit - s).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Laplace transforms
// ---------------------------------------------------------------------------

/// `e^{shift} int_z^w e^{c v} dv`, never forming a large exponential.
fn scaled_exp_integral(shift: f64, c: f64, z: f64, w: f64) -> f64 {
    let h = w - z;
    if h <= 0.0 {
        return 0.0;
    }
    let phi1 = |x: f64| if x.abs() < 1e-8 { h * (1.0 - 0.5 * x) } else { -h * (-x).exp_m1() / x };
    if c >= 0.0 {
        (shift + c * w).exp() * phi1(c * h)
    } else {
        (shift + c * z).exp() * phi1(-c * h)
    }
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// `(Xi / sinh(k Xi))^2 int_z^w e^{-a v} sinh(Xi v) / Xi dv`, the
/// `G_z - G_w` part of the perpetual transform.
fn g_difference(a: f64, big_xi: f64, k: f64, z: f64, w: f64) -> f64 {
    if w <= z {
        return 0.0;
    }
    if big_xi * w < 0.1 {
        // |a| <= Xi, so every exponent in the integrand is below 0.1 here and
        // an 8-point rule is exact to rounding.
        let (mid, half) = (0.5 * (w + z), 0.5 * (w - z));
        let f = |v: f64| {
            let x = big_xi * v;
            let shs = if x == 0.0 { v } else { x_over_sinh(x).recip() * v };
            (-a * v).exp() * shs
        };
        let integral: f64 = GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&x, wt)| wt * (f(mid - half * x) + f(mid + half * x)))
            .sum::<f64>()
            * half;
        let xs = x_over_sinh(big_xi * k) / k;
        return xs * xs * integral;
    }
    // (Xi / sinh(k Xi))^2 = 4 Xi^2 e^{-2 k Xi} / (1 - e^{-2 k Xi})^2
    let xk = big_xi * k;
    let den = -(-2.0 * xk).exp_m1();
    let scale = 4.0 * big_xi * big_xi / (den * den);
    let up = scaled_exp_integral(-2.0 * xk, big_xi - a, z, w);
    let down = scaled_exp_integral(-2.0 * xk, -big_xi - a, z, w);
    scale * (up - down) / (2.0 * big_xi)
}

/// `E[e^{-rho tau_D} 1{tau_D < tau_U}]` in closed form; `rho = 0` gives the probability.
pub fn perpetual_l(y: f64, z: f64, rho: f64, d: Diffusion, k: f64) -> Result<f64> {
    check_diffusion_k(d, k)?;
    check_state(y, z, k)?;
    if !(rho >= 0.0) {
        return invalid("discount_rate", "discount rate must be >= 0", rho);
    }
    let s2 = d.sigma * d.sigma;
    let a = d.drift_ratio();
    let big_xi = (2.0 * rho / s2 + a * a).sqrt();
    let f = if y == 0.0 {
        0.0
    } else {
        scaled_sinh_quotient(a * (y - k), big_xi, y, k)?
    };
    Ok(f + g_difference(a, big_xi, k, z, k - y))
}

/// `E[e^{-rho tau_U} 1{tau_U < tau_D}]`, the drawup counterpart of [`perpetual_l`].
pub fn perpetual_r(y: f64, z: f64, rho: f64, d: Diffusion, k: f64) -> Result<f64> {
    perpetual_l(z, y, rho, d.reflected(), k)
}

/// Sum over `n` of the tails `int_T^inf e^{-rho t} (A_n + B_n t) e^{-lam_n t} dt`.
fn tail_sum(y: f64, z: f64, rho: f64, t: f64, m: &Modes, cfg: &SeriesConfig) -> Result<f64> {
    if y == 0.0 && z == 0.0 {
        series_fallible(|n| m.origin_term(n).tail(rho, t), cfg, "origin tail series")
    } else {
        series_fallible(
            |n| {
                let mut s = 0.0;
                for tm in m.dd_first_terms(n, y, z) {
                    s += tm.tail(rho, t)?;
                }
                Ok(s)
            },
            cfg,
            "drawdown-first tail series",
        )
    }
}

/// `L^T = E[e^{-rho tau_D} 1{tau_D <= tau_U ^ T}]`; `t_end = None` is the perpetual case.
pub fn truncated_laplace_l(
    y: f64,
    z: f64,
    t_end: Option<f64>,
    rho: f64,
    d: Diffusion,
    k: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    cfg.check()?;
    let perp = perpetual_l(y, z, rho, d, k)?;
    let Some(t) = t_end else {
        return Ok(perp);
    };
    if !(t >= 0.0) {
        return invalid("maturity", "maturity must be >= 0", t);
    }
    if t == 0.0 || (y == 0.0 && z == 0.0 && t < cfg.t_floor) {
        return Ok(0.0);
    }
    if t.is_infinite() {
        return Ok(perp);
    }
    let tail = tail_sum(y, z, rho, t, &Modes::new(d, k), cfg)?;
    Ok((perp - tail).max(0.0))
}

/// `R^T`, by reflecting the log-price: `R(y, z, mu) = L(z, y, -mu)`.
pub fn truncated_laplace_r(
    y: f64,
    z: f64,
    t_end: Option<f64>,
    rho: f64,
    d: Diffusion,
    k: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    truncated_laplace_l(z, y, t_end, rho, d.reflected(), k, cfg)
}

/// `Q(tau_D ^ tau_U > T)`.
pub fn survival_prob(y: f64, z: f64, t: f64, d: Diffusion, k: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_diffusion_k(d, k)?;
    check_state(y, z, k)?;
    cfg.check()?;
    if !(t >= 0.0) {
        return invalid("maturity", "maturity must be >= 0", t);
    }
    if t == 0.0 || (y == 0.0 && z == 0.0 && t < cfg.t_floor) {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    // 1 - P(dd first by T) - P(du first by T) = the undiscounted tails of both densities.
    let l_tail = tail_sum(y, z, 0.0, t, &Modes::new(d, k), cfg)?;
    let r_tail = tail_sum(z, y, 0.0, t, &Modes::new(d.reflected(), k), cfg)?;
    Ok((l_tail + r_tail).clamp(0.0, 1.0))
}

/// Probability that the drawdown reaches `k` before the drawup does, from the
/// two-term closed form with `b = drift / sigma^2`:
/// `e^{b(y-k)} sinh(by)/sinh(bk) + (bk/sinh(bk))^2 [(k-y)^2 h(-2b(k-y)) - z^2 h(-2bz)] / k^2`,
/// `h(x) = (e^x - 1 - x)/x^2`.
pub fn prob_dd_first(y: f64, z: f64, d: Diffusion, k: f64) -> Result<f64> {
    check_diffusion_k(d, k)?;
    check_state(y, z, k)?;
    let w = k - y;
    if d.drift.abs() < DRIFT_EPS {
        return Ok(y / k + (w * w - z * z) / (2.0 * k * k));
    }
    let b = d.drift_ratio();
    let first = if y == 0.0 { 0.0 } else { scaled_sinh_quotient(b * (y - k), b, y, k)? };
    let bracket = w * w * expm1_minus_x_over_x2(-2.0 * b * w) - z * z * expm1_minus_x_over_x2(-2.0 * b * z);
    Ok(first + x_over_sinh(b * k).powi(2) * bracket / (k * k))
}

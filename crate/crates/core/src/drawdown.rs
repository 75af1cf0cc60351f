//! Laws of the drawdown process alone: the discounted hitting transform
//! `xi`, the two-sided factor `beta`, the diagnostic `Lambda`, hitting
//! probabilities and expected times under the physical measure.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::{Diffusion, MarketParams};
use crate::numerics::{
    exp_cosh_ratio, exp_sinh_ratio, expm1_minus_x_over_x2, scaled_sinh_quotient, DRIFT_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    RiskNeutral,
    Physical,
}

/// Market, barrier width and the measure the log-price drift is taken under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceContext {
    pub market: MarketParams,
    pub k: f64,
    pub measure: Measure,
}

impl LaplaceContext {
    pub fn new(market: MarketParams, k: f64, measure: Measure) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return invalid("k", "k must be > 0", k);
        }
        if measure == Measure::Physical {
            market.physical()?;
        }
        Ok(Self { market, k, measure })
    }

    pub fn risk_neutral(market: MarketParams, k: f64) -> Result<Self> {
        Self::new(market, k, Measure::RiskNeutral)
    }

    pub fn physical(market: MarketParams, k: f64) -> Result<Self> {
        Self::new(market, k, Measure::Physical)
    }

    pub fn diffusion(&self) -> Diffusion {
        match self.measure {
            Measure::RiskNeutral => self.market.risk_neutral(),
            // checked in `new`
            Measure::Physical => self.market.physical().expect("physical drift"),
        }
    }

    /// The discounted transform kernel at the market rate.
    pub fn kernel(&self) -> XiKernel {
        XiKernel::new(self.diffusion(), self.market.r(), self.k)
    }
}

// ---------------------------------------------------------------------------
// Discounted drawdown transform
// ---------------------------------------------------------------------------

/// `E[e^{-rate tau_D(k)} | D_0 = y]` for a log-price with the given drift and
/// volatility, with every sinh ratio evaluated in exponent-scaled form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiKernel {
    /// drift / sigma^2
    a: f64,
    /// sqrt(2 rate / sigma^2 + a^2)
    big_xi: f64,
    k: f64,
    rate: f64,
    xi0: f64,
}

impl XiKernel {
    pub fn new(diffusion: Diffusion, rate: f64, k: f64) -> Self {
        let s2 = diffusion.sigma * diffusion.sigma;
        let a = diffusion.drift_ratio();
        let big_xi = (2.0 * rate / s2 + a * a).sqrt();
        let xi0 = if rate == 0.0 { 1.0 } else { xi_at_zero(a, big_xi, k) };
        Self {
            a,
            big_xi,
            k,
            rate,
            xi0,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn big_xi(&self) -> f64 {
        self.big_xi
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    fn check_y(&self, y: f64) -> Result<()> {
        if !(0.0..=self.k).contains(&y) {
            return invalid("y", "y must lie in [0, k]", y);
        }
        Ok(())
    }

    pub fn xi(&self, y: f64) -> Result<f64> {
        self.check_y(y)?;
        if self.rate == 0.0 {
            return Ok(1.0);
        }
        if y == self.k {
            return Ok(1.0);
        }
        let (a, x, k) = (self.a, self.big_xi, self.k);
        let up = scaled_sinh_quotient(a * (y - k), x, y, k)?;
        let down = scaled_sinh_quotient(a * y, x, k - y, k)?;
        Ok(up + down * self.xi0)
    }

    /// Analytic derivative of `xi` in `y`.
    pub fn xi_prime(&self, y: f64) -> Result<f64> {
        self.check_y(y)?;
        if self.rate == 0.0 {
            return Ok(0.0);
        }
        let (a, x, k) = (self.a, self.big_xi, self.k);
        let xk = x * k;
        let up = a * exp_sinh_ratio(a * (y - k), x * y, xk)? + x * exp_cosh_ratio(a * (y - k), x * y, xk)?;
        let down =
            a * exp_sinh_ratio(a * y, x * (k - y), xk)? - x * exp_cosh_ratio(a * y, x * (k - y), xk)?;
        Ok(up + self.xi0 * down)
    }

    /// `E[e^{-rate tau_D^-(theta)} 1{tau_D^-(theta) < tau_D(k)} | D_0 = y]`,
    /// the transform of the drawdown falling to `theta` before rising to `k`.
    pub fn beta(&self, y: f64, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta <= y && y <= self.k && theta < self.k) {
            return invalid("theta", "need 0 < theta <= y <= k", theta);
        }
        if y == self.k {
            return Ok(0.0);
        }
        scaled_sinh_quotient(self.a * (y - theta), self.big_xi, self.k - y, self.k - theta)
    }

    /// `Lambda(y) = e^{-a y} xi(y) / sinh(Xi (k - y))`.
    pub fn lambda_diag(&self, y: f64) -> Result<f64> {
        if !(0.0..self.k).contains(&y) {
            return invalid("y", "y must lie in [0, k)", y);
        }
        if self.big_xi == 0.0 {
            return invalid("r", "Lambda needs a positive discount rate", self.rate);
        }
        let h = self.big_xi * (self.k - y);
        // 1 / sinh(h) = 2 e^{-h} / (1 - e^{-2h})
        let inv_sinh = 2.0 * (-self.a * y - h).exp() / -(-2.0 * h).exp_m1();
        Ok(self.xi(y)? * inv_sinh)
    }
}

/// `xi(0) = e^{-ak} Xi / (Xi cosh(Xi k) - a sinh(Xi k))`, scaled by `2 e^{-Xi k}`
/// top and bottom and divided through by `Xi`.
fn xi_at_zero(a: f64, big_xi: f64, k: f64) -> f64 {
    let xk = big_xi * k;
    let e = (-2.0 * xk).exp();
    // (1 - e^{-2 Xi k}) / Xi, which tends to 2k as Xi -> 0
    let one_minus_over_xi = if xk < 1e-8 {
        2.0 * k * (1.0 - xk)
    } else {
        -(-2.0 * xk).exp_m1() / big_xi
    };
    2.0 * (-a * k - xk).exp() / ((1.0 + e) - a * one_minus_over_xi)
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

pub fn xi(y: f64, ctx: &LaplaceContext) -> Result<f64> {
    ctx.kernel().xi(y)
}

pub fn xi_prime(y: f64, ctx: &LaplaceContext) -> Result<f64> {
    ctx.kernel().xi_prime(y)
}

pub fn beta_factor(y: f64, theta: f64, ctx: &LaplaceContext) -> Result<f64> {
    ctx.kernel().beta(y, theta)
}

pub fn lambda_diag(y: f64, ctx: &LaplaceContext) -> Result<f64> {
    ctx.kernel().lambda_diag(y)
}

/// Constant term used for the expected drawdown time from the running maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroStateConstant {
    /// `(e^{2bk} - 1 - 2bk) / (2 mu~^2 / sigma^2)`, which tends to `k^2 / sigma^2`.
    #[default]
    Corrected,
    /// `(e^{2bk} - 1 - 2bk) / (2 mu~ / sigma^2)^2`, which tends to `k^2 / 2`.
    AsPrinted,
}

fn physical_drift(ctx: &LaplaceContext) -> Result<Diffusion> {
    if ctx.measure != Measure::Physical {
        return invalid("measure", "expected times are taken under the physical measure", f64::NAN);
    }
    ctx.market.physical()
}

/// `e^{b y} sinh(b (k - y)) / sinh(b k)` with `b = mu~ / sigma^2`: probability
/// that the log-price rises by `y` before it falls by `k - y`.
pub fn rho_tau(y: f64, k: f64, ctx: &LaplaceContext) -> Result<f64> {
    let d = physical_drift(ctx)?;
    rho_with(y, k, d)
}

fn rho_with(y: f64, k: f64, d: Diffusion) -> Result<f64> {
    if !(k > 0.0 && (0.0..=k).contains(&y)) {
        return invalid("y", "need 0 <= y <= k", y);
    }
    if d.drift.abs() < DRIFT_EPS {
        return Ok((k - y) / k);
    }
    let b = d.drift_ratio();
    scaled_sinh_quotient(b * y, b, k - y, k)
}

/// Mean exit time of the log-price from `(x - v, x + u)`:
/// `(u rho(u; u+v) - v e^{-2bv} rho(v; u+v)) / mu~`, or `u v / sigma^2` without drift.
fn exit_mean(u: f64, v: f64, d: Diffusion) -> Result<f64> {
    if d.drift.abs() < DRIFT_EPS {
        return Ok(u * v / (d.sigma * d.sigma));
    }
    let b = d.drift_ratio();
    let w = u + v;
    Ok((u * rho_with(u, w, d)? - v * (-2.0 * b * v).exp() * rho_with(v, w, d)?) / d.drift)
}

/// Expected time until the drawdown reaches `k`, starting from drawdown `y`.
pub fn expected_drawdown_time(y: f64, ctx: &LaplaceContext, constant: ZeroStateConstant) -> Result<f64> {
    let d = physical_drift(ctx)?;
    let k = ctx.k;
    if !(0.0..=k).contains(&y) {
        return invalid("y", "need 0 <= y <= k", y);
    }
    if y == k {
        return Ok(0.0);
    }
    let b = d.drift_ratio();
    let h = expm1_minus_x_over_x2(2.0 * b * k);
    let t0 = match constant {
        ZeroStateConstant::Corrected => 2.0 * k * k * h / (d.sigma * d.sigma),
        ZeroStateConstant::AsPrinted => k * k * h,
    };
    Ok(exit_mean(y, k - y, d)? + rho_with(y, k, d)? * t0)
}

/// Expected time until the drawdown either falls to `theta` or reaches `k`.
pub fn expected_termination_time(y: f64, theta: f64, ctx: &LaplaceContext) -> Result<f64> {
    let d = physical_drift(ctx)?;
    let k = ctx.k;
    if !(0.0 < theta && theta < y && y < k) {
        return invalid("y", "need 0 < theta < y < k", y);
    }
    exit_mean(y - theta, k - y, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> LaplaceContext {
        LaplaceContext::risk_neutral(MarketParams::new(0.02, 0.3).unwrap(), 0.3).unwrap()
    }

    fn physical(nu: f64) -> LaplaceContext {
        let m = MarketParams::new(0.02, 0.3).unwrap().with_growth(nu).unwrap();
        LaplaceContext::physical(m, 0.3).unwrap()
    }

    #[test]
    fn xi_boundary_and_zero_rate() {
        let ctx = base();
        assert_eq!(xi(0.3, &ctx).unwrap(), 1.0);
        let m = MarketParams::new(0.0, 0.3).unwrap();
        let ctx0 = LaplaceContext::risk_neutral(m, 0.3).unwrap();
        assert_eq!(xi(0.1, &ctx0).unwrap(), 1.0);
        assert!(xi(-0.01, &ctx).is_err());
        assert!(xi(0.31, &ctx).is_err());
    }

    #[test]
    fn xi_matches_ode_shooting_oracle() {
        // 30-digit ODE integration of the boundary value problem.
        let ctx = base();
        assert!((xi(0.1, &ctx).unwrap() - 0.983_499_714_183_155_6).abs() < 1e-14);
        assert!((ctx.kernel().xi0() - 0.981_357_958_974_170_6).abs() < 1e-14);
    }

    #[test]
    fn xi_shape_on_grid() {
        let ctx = base();
        let k = ctx.k;
        let n = 200;
        let v: Vec<f64> = (0..=n).map(|i| xi(k * i as f64 / n as f64, &ctx).unwrap()).collect();
        for i in 0..n {
            assert!(v[i] > 0.0 && v[i] < 1.0);
            assert!(v[i + 1] > v[i] || i == 0, "increasing at {i}");
        }
        for i in 1..n {
            assert!(v[i + 1] - 2.0 * v[i] + v[i - 1] > 0.0, "convex at {i}");
        }
    }

    #[test]
    fn xi_solves_the_ode() {
        let ctx = base();
        let (mu, s2, r) = (ctx.market.mu(), 0.09, 0.02);
        let h = 1e-5;
        for i in 1..=50 {
            let y = 0.3 * i as f64 / 51.0;
            let f = |x| xi(x, &ctx).unwrap();
            let d2 = (f(y + h) - 2.0 * f(y) + f(y - h)) / (h * h);
            let d1 = (f(y + h) - f(y - h)) / (2.0 * h);
            let res = 0.5 * s2 * d2 - mu * d1 - r * f(y);
            assert!(res.abs() < 1e-6, "residual {res} at {y}");
        }
    }

    #[test]
    fn neumann_condition_at_zero() {
        let ctx = base();
        let h = 1e-7;
        let slope = (xi(h, &ctx).unwrap() - xi(0.0, &ctx).unwrap()) / h;
        assert!(slope.abs() < 1e-5);
        assert!(xi_prime(0.0, &ctx).unwrap().abs() < 1e-13);
    }

    #[test]
    fn analytic_derivative_matches_differences() {
        let ctx = base();
        for &y in &[0.02, 0.1, 0.2, 0.29] {
            let h = 1e-6;
            let fd = (xi(y + h, &ctx).unwrap() - xi(y - h, &ctx).unwrap()) / (2.0 * h);
            assert!((xi_prime(y, &ctx).unwrap() - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn beta_boundaries() {
        let ctx = base();
        assert!((beta_factor(0.1, 0.1, &ctx).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(beta_factor(0.3, 0.1, &ctx).unwrap(), 0.0);
        assert!(beta_factor(0.3 - 1e-12, 0.1, &ctx).unwrap() < 1e-9);
        assert!(beta_factor(0.05, 0.1, &ctx).is_err());
        let mut prev = 1.0;
        for i in 1..50 {
            let b = beta_factor(0.05 + 0.25 * i as f64 / 50.0, 0.05, &ctx).unwrap();
            assert!(b < prev && b > 0.0);
            prev = b;
        }
    }

    #[test]
    fn lambda_at_zero_and_monotone() {
        let ctx = base();
        let kern = ctx.kernel();
        let x = kern.big_xi();
        assert!((lambda_diag(0.0, &ctx).unwrap() - kern.xi0() / (x * 0.3).sinh()).abs() < 1e-12);
        let h = 1e-6;
        assert!(lambda_diag(0.15 + h, &ctx).unwrap() > lambda_diag(0.15 - h, &ctx).unwrap());
        let mut prev = 0.0;
        for i in 0..300 {
            let l = lambda_diag(0.3 * i as f64 / 300.0, &ctx).unwrap();
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn rho_limits_and_oracle() {
        let m = MarketParams::new(0.02, 0.3).unwrap().with_growth(0.045).unwrap();
        let ctx = LaplaceContext::physical(m, 0.3).unwrap();
        assert!((rho_tau(0.1, 0.3, &ctx).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let ctx = physical(0.11);
        assert!((rho_tau(0.0, 0.3, &ctx).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rho_tau(0.3, 0.3, &ctx).unwrap(), 0.0);
        // mu~ = 0.065: 30-digit direct evaluation
        assert!((rho_tau(0.1, 0.3, &ctx).unwrap() - 0.713_495_034_062_074_9).abs() < 1e-14);
        assert!(rho_tau(0.1, 0.3, &base()).is_err());
    }

    #[test]
    fn expected_times_match_quadrature_oracles() {
        // Oracles: 30-digit quadrature of the boundary value problems for the mean exit time.
        let ctx = physical(0.07);
        let c = ZeroStateConstant::Corrected;
        assert!((expected_drawdown_time(0.1, &ctx, c).unwrap() - 0.944_752_103_589_485_3).abs() < 1e-12);
        assert!((expected_drawdown_time(0.0, &ctx, c).unwrap() - 1.057_949_726_326_510_6).abs() < 1e-12);
        assert_eq!(expected_drawdown_time(0.3, &ctx, c).unwrap(), 0.0);
        let ctx = physical(0.05);
        assert!((expected_termination_time(0.1, 0.05, &ctx).unwrap() - 0.110_801_331_911_024_89).abs() < 1e-12);
    }

    #[test]
    fn driftless_expected_time_variants() {
        let m = MarketParams::new(0.02, 1.0).unwrap().with_growth(0.5).unwrap();
        let ctx = LaplaceContext::physical(m, 0.5).unwrap();
        let corrected = expected_drawdown_time(0.0, &ctx, ZeroStateConstant::Corrected).unwrap();
        let printed = expected_drawdown_time(0.0, &ctx, ZeroStateConstant::AsPrinted).unwrap();
        assert!((corrected - 0.25).abs() < 1e-15);
        assert!((printed - 0.125).abs() < 1e-15);
        // (k^2 - y^2) / sigma^2
        assert!((expected_drawdown_time(0.2, &ctx, ZeroStateConstant::Corrected).unwrap() - 0.21).abs() < 1e-15);
        // drift just above the switch agrees with the limit
        let m = MarketParams::new(0.02, 1.0).unwrap().with_growth(0.5 + 1e-6).unwrap();
        let ctx_eps = LaplaceContext::physical(m, 0.5).unwrap();
        let near = expected_drawdown_time(0.2, &ctx_eps, ZeroStateConstant::Corrected).unwrap();
        assert!((near - 0.21).abs() < 1e-6);
    }

    #[test]
    fn termination_time_limits() {
        let ctx = physical(0.05);
        assert!(expected_termination_time(0.05 + 1e-10, 0.05, &ctx).unwrap() < 1e-8);
        assert!(expected_termination_time(0.3 - 1e-10, 0.05, &ctx).unwrap() < 1e-8);
        assert!(expected_termination_time(0.05, 0.05, &ctx).is_err());
        let m = MarketParams::new(0.02, 0.3).unwrap().with_growth(0.045).unwrap();
        let ctx0 = LaplaceContext::physical(m, 0.3).unwrap();
        let v = expected_termination_time(0.1, 0.05, &ctx0).unwrap();
        assert!((v - 0.05 * 0.2 / 0.09).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn markov_consistency(u1 in 0.0..1.0f64, u2 in 0.0..1.0f64) {
            let ctx = base();
            let kern = ctx.kernel();
            let k = ctx.k;
            let (y1, y2) = if u1 < u2 { (u1 * k, u2 * k) } else { (u2 * k, u1 * k) };
            prop_assume!(k - y1 > 1e-6);
            let (a, x) = (kern.a(), kern.big_xi());
            let rebuilt = exp_sinh_ratio(a * (y2 - k), x * (y2 - y1), x * (k - y1)).unwrap()
                + exp_sinh_ratio(a * (y2 - y1), x * (k - y2), x * (k - y1)).unwrap() * kern.xi(y1).unwrap();
            prop_assert!((rebuilt - kern.xi(y2).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn lambda_increment_identity(u1 in 0.0..0.99f64, u2 in 0.0..0.99f64) {
            let ctx = base();
            let kern = ctx.kernel();
            let k = ctx.k;
            let (y1, y2) = (u1 * k, u2 * k);
            let (a, x) = (kern.a(), kern.big_xi());
            let lhs = kern.lambda_diag(y2).unwrap() - kern.lambda_diag(y1).unwrap();
            let rhs = (-a * k).exp() * (x * (y2 - y1)).sinh() / ((x * (k - y1)).sinh() * (x * (k - y2)).sinh());
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }
}

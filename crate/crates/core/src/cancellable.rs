//! Perpetual drawdown insurance that the buyer may cancel for a fee `c`.
//!
//! Cancelling at drawdown `y` stops the premium stream, forfeits the
//! protection and costs `c`, which is worth
//! `f~(y) = p/r - (alpha + p/r) xi(y) - c` to the buyer. The optimal rule is
//! to cancel once the drawdown falls to a threshold `theta*`, the unique root
//! of the smooth-pasting residual `F`.

use serde::Serialize;

use crate::drawdown::{LaplaceContext, XiKernel};
use crate::error::{invalid, Error, Result};
use crate::model::{ContractSpec, MarketParams};
use crate::numerics::{bracketed_root, coth, scaled_sinh_quotient};
use crate::vanilla;

/// Offset of the `theta*` bracket from `0` and `theta0`, as a fraction of `k`.
const BRACKET_OFFSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CancellationPolicy {
    /// Cancel when the drawdown first falls to `theta_star`. `theta0` is the
    /// zero of the reward and `residual` is `F(theta_star)`.
    Threshold {
        theta_star: f64,
        theta0: f64,
        residual: f64,
    },
    NeverCancel,
}

impl CancellationPolicy {
    pub fn theta_star(&self) -> Option<f64> {
        match *self {
            CancellationPolicy::Threshold { theta_star, .. } => Some(theta_star),
            CancellationPolicy::NeverCancel => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CancellableQuote {
    pub value: f64,
    pub policy: CancellationPolicy,
}

/// Everything the cancellable formulas need at a fixed premium.
#[derive(Debug, Clone, Copy)]
struct Setup {
    kern: XiKernel,
    r: f64,
    alpha: f64,
    fee: f64,
}

impl Setup {
    fn new(k: f64, market: &MarketParams, contract: &ContractSpec) -> Result<Self> {
        market.require_positive_rate()?;
        if !contract.alpha.is_finite() || contract.alpha < 0.0 {
            return invalid("alpha", "alpha must be >= 0", contract.alpha);
        }
        if !contract.fee.is_finite() || contract.fee < 0.0 {
            return invalid("fee", "fee must be >= 0", contract.fee);
        }
        Ok(Self {
            kern: LaplaceContext::risk_neutral(*market, k)?.kernel(),
            r: market.r(),
            alpha: contract.alpha,
            fee: contract.fee,
        })
    }

    fn k(&self) -> f64 {
        self.kern.k()
    }

    fn reward(&self, y: f64, p: f64) -> Result<f64> {
        Ok(p / self.r - (self.alpha + p / self.r) * self.kern.xi(y)? - self.fee)
    }

    fn reward_prime(&self, y: f64, p: f64) -> Result<f64> {
        Ok(-(self.alpha + p / self.r) * self.kern.xi_prime(y)?)
    }

    fn buyer_value(&self, y: f64, p: f64) -> Result<f64> {
        Ok((self.alpha + p / self.r) * self.kern.xi(y)? - p / self.r)
    }

    fn pasting(&self, theta: f64, p: f64) -> Result<f64> {
        let (a, x, k) = (self.kern.a(), self.kern.big_xi(), self.k());
        Ok((a - x * coth(x * (k - theta))) * self.reward(theta, p)? - self.reward_prime(theta, p)?)
    }

    /// `e^{a (y - theta)} sinh(Xi (k - y)) / sinh(Xi (k - theta)) f~(theta)`
    /// for any `y < k`, including `y < theta`.
    fn continuation(&self, y: f64, theta: f64, p: f64) -> Result<f64> {
        let (a, x, k) = (self.kern.a(), self.kern.big_xi(), self.k());
        Ok(scaled_sinh_quotient(a * (y - theta), x, k - y, k - theta)? * self.reward(theta, p)?)
    }

    fn policy(&self, p: f64) -> Result<CancellationPolicy> {
        let k = self.k();
        if self.reward(0.0, p)? <= 0.0 {
            return Ok(CancellationPolicy::NeverCancel);
        }
        let (theta0, _) = root_of(|y| self.reward(y, p), 0.0, k, 1e-15 * k, 0.0)?;
        let lo = BRACKET_OFFSET * k;
        let hi = theta0 - BRACKET_OFFSET * k;
        if hi <= lo {
            return Err(Error::DegenerateDenominator {
                what: "cancellation bracket (theta0 ~ 0)",
                value: theta0,
            });
        }
        let root = root_of(|t| self.pasting(t, p), lo, hi, 1e-15 * k, 1e-13)?;
        Ok(CancellationPolicy::Threshold {
            theta_star: root.0,
            theta0,
            residual: root.1,
        })
    }

    fn stopping_value(&self, y: f64, theta: f64, p: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < self.k()) {
            return invalid("theta", "need 0 < theta < k", theta);
        }
        if !(0.0..=self.k()).contains(&y) {
            return invalid("y", "y must lie in [0, k]", y);
        }
        if y <= theta {
            self.reward(y, p)
        } else {
            Ok(self.kern.beta(y, theta)? * self.reward(theta, p)?)
        }
    }

    fn value(&self, y: f64, p: f64) -> Result<CancellableQuote> {
        if !(0.0..self.k()).contains(&y) {
            return invalid("y", "y must lie in [0, k)", y);
        }
        let policy = self.policy(p)?;
        let mut value = self.buyer_value(y, p)?;
        if let CancellationPolicy::Threshold { theta_star, .. } = policy {
            value += self.stopping_value(y, theta_star, p)?;
        }
        Ok(CancellableQuote { value, policy })
    }
}

/// Root finding over a closure that may itself fail; the first inner error wins.
fn root_of<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, x_tol: f64, f_tol: f64) -> Result<(f64, f64)> {
    let mut inner: Option<Error> = None;
    let res = bracketed_root(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                inner.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        x_tol,
        f_tol,
    );
    if let Some(e) = inner {
        return Err(e);
    }
    let r = res?;
    Ok((r.root, r.residual))
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

pub fn cancellation_reward(y: f64, k: f64, p: f64, market: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    Setup::new(k, market, contract)?.reward(y, p)
}

/// Analytic derivative of the reward in `y`.
pub fn cancellation_reward_prime(y: f64, k: f64, p: f64, market: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    Setup::new(k, market, contract)?.reward_prime(y, p)
}

/// `F(theta) = (a - Xi coth(Xi (k - theta))) f~(theta) - f~'(theta)`.
pub fn pasting_residual(theta: f64, k: f64, p: f64, market: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    if !(theta > 0.0 && theta < k) {
        return invalid("theta", "need 0 < theta < k", theta);
    }
    Setup::new(k, market, contract)?.pasting(theta, p)
}

pub fn optimal_threshold(k: f64, p: f64, market: &MarketParams, contract: &ContractSpec) -> Result<CancellationPolicy> {
    Setup::new(k, market, contract)?.policy(p)
}

/// Premium at or below which cancelling is never worthwhile: `r (c + alpha xi(0)) / (1 - xi(0))`.
pub fn never_cancel_premium(k: f64, market: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    let s = Setup::new(k, market, contract)?;
    let xi0 = s.kern.xi0();
    Ok(s.r * (s.fee + s.alpha * xi0) / (1.0 - xi0))
}

/// Value `g(y; theta)` of the rule "cancel when the drawdown falls to `theta`".
pub fn stopping_value(y: f64, k: f64, theta: f64, p: f64, market: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    Setup::new(k, market, contract)?.stopping_value(y, theta, p)
}

/// The `y > theta` branch of `g` continued to any `y < k`.
pub fn continuation_branch(y: f64, k: f64, theta: f64, p: f64, market: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    Setup::new(k, market, contract)?.continuation(y, theta, p)
}

/// `V(y; p) = f_buy(y; p) + g(y; theta*)`, or `f_buy` when cancelling never pays.
pub fn contract_value_cancellable(
    y: f64,
    k: f64,
    p: f64,
    market: &MarketParams,
    contract: &ContractSpec,
) -> Result<CancellableQuote> {
    Setup::new(k, market, contract)?.value(y, p)
}

/// Premium `P*` with `V(y; P*) = 0`, together with the policy at `P*`.
pub fn fair_premium_cancellable(
    y: f64,
    k: f64,
    market: &MarketParams,
    contract: &ContractSpec,
) -> Result<(f64, CancellationPolicy)> {
    if y >= k {
        return Err(Error::AlreadyTriggered { y, k });
    }
    let s = Setup::new(k, market, contract)?;
    if !(y > 0.0) {
        return invalid("y", "y must be > 0", y);
    }
    let v = |p: f64| s.value(y, p).map(|q| q.value);
    let mut hi = vanilla::fair_premium(y, k, market, contract)?.value.max(1e-12);
    let mut tries = 0;
    while v(hi)? >= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoBracket {
                lo: 0.0,
                hi,
                f_lo: v(0.0)?,
                f_hi: v(hi)?,
            });
        }
    }
    let (p, _) = root_of(v, 0.0, hi, 1e-14 * hi, 1e-14)?;
    Ok((p, s.policy(p)?))
}

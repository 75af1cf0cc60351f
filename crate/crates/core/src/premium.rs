//! Fair premiums for drawdown insurance whose premium stream also stops at
//! the first drawup of size `k`, optionally with finite maturity, periodic
//! payments, or a defaultable underlying.
//!
//! Every premium is a ratio of transforms from [`crate::joint`]. For the
//! defaultable stock the joint transforms are taken at discount `r + lambda`;
//! see [`DefaultDrift`] for the pre-default log drift.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::joint::{self, SeriesConfig};
use crate::model::{ContractSpec, Diffusion, DrawdownState, MarketParams};

/// Pre-default log drift of a defaultable stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultDrift {
    /// `r - sigma^2 / 2`: default only shifts the discount rate to `r + lambda`.
    #[default]
    Unshifted,
    /// `r + lambda - sigma^2 / 2`: the drift that compensates the jump to zero.
    Compensated,
}

impl DefaultDrift {
    pub fn diffusion(self, market: &MarketParams, lambda: f64) -> Diffusion {
        match self {
            DefaultDrift::Unshifted => market.risk_neutral(),
            DefaultDrift::Compensated => market.defaultable(lambda),
        }
    }
}

/// Denominators closer to zero than this are reported instead of divided by.
const DENOM_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PremiumQuote {
    /// Per year for continuous premiums, per payment for periodic ones.
    pub premium: f64,
    pub l: f64,
    pub r: f64,
    /// `Q(tau_D ^ tau_U >= T)`, for finite maturities.
    pub survival: Option<f64>,
    pub denominator: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub maturity: Option<f64>,
    pub periods: Option<u32>,
}

fn guard(what: &'static str, value: f64) -> Result<f64> {
    if !(value.abs() > DENOM_GUARD) || !value.is_finite() {
        return Err(Error::DegenerateDenominator { what, value });
    }
    Ok(value)
}

fn check_common(state: &DrawdownState, market: &MarketParams, contract: &ContractSpec) -> Result<()> {
    state.check_joint()?;
    market.require_positive_rate()?;
    if !contract.alpha.is_finite() || contract.alpha < 0.0 {
        return invalid("alpha", "alpha must be >= 0", contract.alpha);
    }
    Ok(())
}

fn check_maturity(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return invalid("maturity", "maturity must be > 0", t);
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return invalid("lambda", "lambda must be >= 0", lambda);
    }
    Ok(())
}

/// `L^T`, `R^T` and the survival probability at discount `rho` and drift `d`.
fn finite_pieces(
    state: &DrawdownState,
    t: f64,
    rho: f64,
    d: Diffusion,
    cfg: &SeriesConfig,
) -> Result<(f64, f64, f64)> {
    let (y, z, k) = (state.y, state.z, state.k);
    let l = joint::truncated_laplace_l(y, z, Some(t), rho, d, k, cfg)?;
    let r = joint::truncated_laplace_r(y, z, Some(t), rho, d, k, cfg)?;
    let s = joint::survival_prob(y, z, t, d, k, cfg)?;
    Ok((l, r, s))
}

/// `1 - E[e^{-rho (tau_D ^ tau_U ^ T)}] = 1 - L^T - R^T - e^{-rho T} Q(tau_D ^ tau_U >= T)`.
pub fn stopped_discount_complement(
    state: &DrawdownState,
    t: f64,
    rho: f64,
    d: Diffusion,
    cfg: &SeriesConfig,
) -> Result<f64> {
    state.check_joint()?;
    check_maturity(t)?;
    let (l, r, s) = finite_pieces(state, t, rho, d, cfg)?;
    Ok(1.0 - l - r - (-rho * t).exp() * s)
}

/// `r alpha L^T / (1 - L^T - R^T - e^{-rT} Q(tau_D ^ tau_U >= T))`.
pub fn fair_premium_contingent_finite(
    state: &DrawdownState,
    t: f64,
    market: &MarketParams,
    contract: &ContractSpec,
    cfg: &SeriesConfig,
) -> Result<PremiumQuote> {
    fair_premium_default_finite(state, t, 0.0, DefaultDrift::Unshifted, market, contract, cfg)
}

/// `r alpha L / (1 - L - R)` with perpetual transforms.
pub fn fair_premium_contingent_perpetual(
    state: &DrawdownState,
    market: &MarketParams,
    contract: &ContractSpec,
) -> Result<PremiumQuote> {
    fair_premium_default_perpetual(state, 0.0, DefaultDrift::Unshifted, market, contract)
}

/// Per-payment premium when `n` equal payments fall at `t_i = i T / n`,
/// `i = 0..n-1`, each made only while neither event has happened:
/// `alpha L^T / sum_i e^{-r t_i} Q(tau_D ^ tau_U > t_i)`.
pub fn fair_premium_periodic(
    state: &DrawdownState,
    t: f64,
    n: u32,
    market: &MarketParams,
    contract: &ContractSpec,
    cfg: &SeriesConfig,
) -> Result<PremiumQuote> {
    check_common(state, market, contract)?;
    check_maturity(t)?;
    if n < 1 {
        return invalid("periods", "periodic premium needs n >= 1", n as f64);
    }
    let d = market.risk_neutral();
    let rho = market.r();
    let (y, z, k) = (state.y, state.z, state.k);
    let l = joint::truncated_laplace_l(y, z, Some(t), rho, d, k, cfg)?;
    let r = joint::truncated_laplace_r(y, z, Some(t), rho, d, k, cfg)?;
    let dt = t / n as f64;
    let mut annuity = 0.0;
    for i in 0..n {
        let ti = i as f64 * dt;
        annuity += (-rho * ti).exp() * joint::survival_prob(y, z, ti, d, k, cfg)?;
    }
    let den = guard("periodic premium annuity", annuity)?;
    Ok(PremiumQuote {
        premium: contract.alpha * l / den,
        l,
        r,
        survival: Some(joint::survival_prob(y, z, t, d, k, cfg)?),
        denominator: den,
        alpha: contract.alpha,
        lambda: 0.0,
        maturity: Some(t),
        periods: Some(n),
    })
}

/// Finite-maturity premium on a stock that defaults at rate `lambda`:
/// `alpha (r L + lambda - lambda R - lambda e^{-sT} S) / (1 - L - R - e^{-sT} S)`
/// with `s = r + lambda` and all transforms at discount `s`.
pub fn fair_premium_default_finite(
    state: &DrawdownState,
    t: f64,
    lambda: f64,
    drift: DefaultDrift,
    market: &MarketParams,
    contract: &ContractSpec,
    cfg: &SeriesConfig,
) -> Result<PremiumQuote> {
    check_common(state, market, contract)?;
    check_maturity(t)?;
    check_lambda(lambda)?;
    let s = market.r() + lambda;
    let d = drift.diffusion(market, lambda);
    let (l, r, surv) = finite_pieces(state, t, s, d, cfg)?;
    let disc_surv = (-s * t).exp() * surv;
    let den = guard("finite premium denominator", 1.0 - l - r - disc_surv)?;
    let num = market.r() * l + lambda * (1.0 - r - disc_surv);
    Ok(PremiumQuote {
        premium: contract.alpha * num / den,
        l,
        r,
        survival: Some(surv),
        denominator: den,
        alpha: contract.alpha,
        lambda,
        maturity: Some(t),
        periods: None,
    })
}

/// Perpetual premium on a defaultable stock: `alpha (r L + lambda - lambda R) / (1 - L - R)`.
pub fn fair_premium_default_perpetual(
    state: &DrawdownState,
    lambda: f64,
    drift: DefaultDrift,
    market: &MarketParams,
    contract: &ContractSpec,
) -> Result<PremiumQuote> {
    check_common(state, market, contract)?;
    check_lambda(lambda)?;
    let s = market.r() + lambda;
    let d = drift.diffusion(market, lambda);
    let (y, z, k) = (state.y, state.z, state.k);
    let l = joint::perpetual_l(y, z, s, d, k)?;
    let r = joint::perpetual_r(y, z, s, d, k)?;
    let den = guard("perpetual premium denominator", 1.0 - l - r)?;
    let num = market.r() * l + lambda * (1.0 - r);
    Ok(PremiumQuote {
        premium: contract.alpha * num / den,
        l,
        r,
        survival: None,
        denominator: den,
        alpha: contract.alpha,
        lambda,
        maturity: None,
        periods: None,
    })
}

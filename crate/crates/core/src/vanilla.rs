//! Perpetual drawdown insurance: the buyer pays a continuous premium `p`
//! until the drawdown first reaches `k` and then receives `alpha`.
//!
//! Values are from the buyer's side, `(alpha + p/r) xi(y) - p/r`, so a
//! positive number means the buyer gains.

use serde::Serialize;

use crate::drawdown::{LaplaceContext, XiKernel};
use crate::error::{invalid, Error, Result};
use crate::model::{ContractSpec, MarketParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    BuyerValue,
    PremiumRate,
    UpfrontPrice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quote {
    pub value: f64,
    pub convention: Convention,
    pub y: f64,
    pub k: f64,
    pub r: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl Quote {
    fn new(value: f64, convention: Convention, y: f64, k: f64, market: &MarketParams, contract: &ContractSpec) -> Self {
        Self {
            value,
            convention,
            y,
            k,
            r: market.r(),
            sigma: market.sigma(),
            alpha: contract.alpha,
        }
    }
}

fn kernel(market: &MarketParams, k: f64) -> Result<XiKernel> {
    Ok(LaplaceContext::risk_neutral(*market, k)?.kernel())
}

fn check_alpha(contract: &ContractSpec) -> Result<()> {
    if !contract.alpha.is_finite() || contract.alpha < 0.0 {
        return invalid("alpha", "alpha must be >= 0", contract.alpha);
    }
    Ok(())
}

/// Buyer's value `(alpha + p/r) xi(y) - p/r`.
pub fn contract_value(y: f64, k: f64, p: f64, market: &MarketParams, contract: &ContractSpec) -> Result<Quote> {
    market.require_positive_rate()?;
    check_alpha(contract)?;
    let r = market.r();
    let xi = kernel(market, k)?.xi(y)?;
    let v = (contract.alpha + p / r) * xi - p / r;
    Ok(Quote::new(v, Convention::BuyerValue, y, k, market, contract))
}

/// Premium rate `r alpha xi / (1 - xi)` that makes the contract worth zero.
pub fn fair_premium(y: f64, k: f64, market: &MarketParams, contract: &ContractSpec) -> Result<Quote> {
    if y >= k {
        return Err(Error::AlreadyTriggered { y, k });
    }
    market.require_positive_rate()?;
    check_alpha(contract)?;
    let xi = kernel(market, k)?.xi(y)?;
    let p = market.r() * contract.alpha * xi / (1.0 - xi);
    Ok(Quote::new(p, Convention::PremiumRate, y, k, market, contract))
}

/// Lump sum `alpha xi(y)` paid at inception instead of a premium stream.
pub fn upfront_price(y: f64, k: f64, market: &MarketParams, contract: &ContractSpec) -> Result<Quote> {
    check_alpha(contract)?;
    let xi = kernel(market, k)?.xi(y)?;
    Ok(Quote::new(contract.alpha * xi, Convention::UpfrontPrice, y, k, market, contract))
}

/// Rate paid over `[0, T']` regardless of the drawdown that is worth the upfront price.
pub fn fair_premium_fixed_term(
    y: f64,
    k: f64,
    t_prime: f64,
    market: &MarketParams,
    contract: &ContractSpec,
) -> Result<Quote> {
    if !t_prime.is_finite() || t_prime <= 0.0 {
        return invalid("term", "fixed premium term must be > 0", t_prime);
    }
    market.require_positive_rate()?;
    let up = upfront_price(y, k, market, contract)?.value;
    let r = market.r();
    let p = up * r / -(-r * t_prime).exp_m1();
    Ok(Quote::new(p, Convention::PremiumRate, y, k, market, contract))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m() -> MarketParams {
        MarketParams::new(0.02, 0.3).unwrap()
    }

    fn one() -> ContractSpec {
        ContractSpec::new(1.0)
    }

    #[test]
    fn value_at_barrier_is_alpha() {
        let q = contract_value(0.3, 0.3, 0.7, &m(), &ContractSpec::new(2.5)).unwrap();
        assert!((q.value - 2.5).abs() < 1e-15);
    }

    #[test]
    fn fair_premium_zeroes_the_value() {
        let p = fair_premium(0.1, 0.3, &m(), &one()).unwrap().value;
        // 30-digit evaluation from an independent ODE solution of xi
        assert!((p - 1.192_100_215_838_864_8).abs() < 1e-11);
        let v = contract_value(0.1, 0.3, p, &m(), &one()).unwrap().value;
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn zero_alpha_and_triggered() {
        let zero = ContractSpec { alpha: 0.0, ..one() };
        assert_eq!(fair_premium(0.1, 0.3, &m(), &zero).unwrap().value, 0.0);
        assert!(matches!(fair_premium(0.3, 0.3, &m(), &one()), Err(Error::AlreadyTriggered { .. })));
        let near = fair_premium(0.3 - 1e-9, 0.3, &m(), &one()).unwrap().value;
        assert!(near > 1e5);
    }

    #[test]
    fn zero_rate_rejected_for_premiums_but_not_upfront() {
        let m0 = MarketParams::new(0.0, 0.3).unwrap();
        assert!(contract_value(0.1, 0.3, 0.1, &m0, &one()).is_err());
        assert_eq!(upfront_price(0.1, 0.3, &m0, &one()).unwrap().value, 1.0);
    }

    #[test]
    fn upfront_is_value_at_zero_premium() {
        let up = upfront_price(0.1, 0.3, &m(), &one()).unwrap().value;
        let v0 = contract_value(0.1, 0.3, 0.0, &m(), &one()).unwrap().value;
        assert_eq!(up, v0);
        assert_eq!(upfront_price(0.3, 0.3, &m(), &one()).unwrap().value, 1.0);
    }

    #[test]
    fn fixed_term_premium() {
        let up = upfront_price(0.1, 0.3, &m(), &one()).unwrap().value;
        let p5 = fair_premium_fixed_term(0.1, 0.3, 5.0, &m(), &one()).unwrap().value;
        // Independent annuity: sum of e^{-rt} dt by midpoint rule over 5 years.
        let n = 200_000;
        let dt = 5.0 / n as f64;
        let annuity: f64 = (0..n).map(|i| (-0.02 * (i as f64 + 0.5) * dt).exp() * dt).sum();
        assert!((p5 - up / annuity).abs() < 1e-9);
        assert!((p5 - 0.206_698_829_284_559_7).abs() < 1e-12);
        let long = fair_premium_fixed_term(0.1, 0.3, 2000.0, &m(), &one()).unwrap().value;
        assert!((long - 0.02 * up).abs() < 1e-15);
        let short = fair_premium_fixed_term(0.1, 0.3, 1e-6, &m(), &one()).unwrap().value;
        assert!((short * 1e-6 / up - 1.0).abs() < 1e-7);
        let mut prev = f64::INFINITY;
        for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let p = fair_premium_fixed_term(0.1, 0.3, t, &m(), &one()).unwrap().value;
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn premium_decreases_with_k() {
        let mut prev = f64::INFINITY;
        for i in 1..=6 {
            let k = 0.1 * i as f64;
            let p = fair_premium(0.05, k, &m(), &one()).unwrap().value;
            assert!(p < prev, "k = {k}");
            prev = p;
        }
    }

    #[test]
    fn value_is_affine_in_premium() {
        let xi = upfront_price(0.1, 0.3, &m(), &one()).unwrap().value;
        let v1 = contract_value(0.1, 0.3, 0.3, &m(), &one()).unwrap().value;
        let v2 = contract_value(0.1, 0.3, 0.8, &m(), &one()).unwrap().value;
        let slope = (v2 - v1) / 0.5;
        assert!((slope + (1.0 - xi) / 0.02).abs() < 1e-9);
    }
}

//! Domain records and input validation.
//!
//! Everything downstream works on the log-price `X = log S`: the drawdown is
//! `D = max X - X`, the drawup is `U = X - min X`, and the contract barrier
//! `k = log K` is expressed in the same log units.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Log-drift and volatility of the log-price. The one pair every closed form
/// needs; which drift goes in depends on the measure and on default risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diffusion {
    pub drift: f64,
    pub sigma: f64,
}

impl Diffusion {
    pub fn new(drift: f64, sigma: f64) -> Self {
        Self { drift, sigma }
    }

    /// Drift over variance, the exponent rate that shows up in every formula.
    pub fn drift_ratio(&self) -> f64 {
        self.drift / (self.sigma * self.sigma)
    }

    /// The same diffusion with the drift sign flipped (reflection about the start).
    pub fn reflected(&self) -> Self {
        Self {
            drift: -self.drift,
            sigma: self.sigma,
        }
    }
}

/// Risk-neutral market description, optionally with a physical growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketParams {
    r: f64,
    sigma: f64,
    mu: f64,
    nu: Option<f64>,
    mu_tilde: Option<f64>,
}

impl MarketParams {
    /// Rates are per year as decimals; `sigma` is per square-root year.
    pub fn new(r: f64, sigma: f64) -> Result<Self> {
        check_market(r, sigma)?;
        Ok(Self {
            r,
            sigma,
            mu: r - 0.5 * sigma * sigma,
            nu: None,
            mu_tilde: None,
        })
    }

    /// Adds the physical growth rate used for expected times and probabilities.
    pub fn with_growth(mut self, nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return invalid("nu", "nu must be finite", nu);
        }
        self.nu = Some(nu);
        self.mu_tilde = Some(nu - 0.5 * self.sigma * self.sigma);
        Ok(self)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Risk-neutral log drift `r - sigma^2 / 2`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> Option<f64> {
        self.nu
    }

    /// Physical log drift `nu - sigma^2 / 2`, when a growth rate was given.
    pub fn mu_tilde(&self) -> Option<f64> {
        self.mu_tilde
    }

    pub fn risk_neutral(&self) -> Diffusion {
        Diffusion::new(self.mu, self.sigma)
    }

    pub fn physical(&self) -> Result<Diffusion> {
        match self.mu_tilde {
            Some(m) => Ok(Diffusion::new(m, self.sigma)),
            None => invalid("nu", "physical measure requires nu", f64::NAN),
        }
    }

    /// Pre-default dynamics of a stock with default intensity `lambda`: the
    /// compensated jump lifts the log drift to `r + lambda - sigma^2 / 2`.
    pub fn defaultable(&self, lambda: f64) -> Diffusion {
        Diffusion::new(self.mu + lambda, self.sigma)
    }

    /// Checks the market invariants; fails on `r == 0` for formulas that divide by it.
    pub fn require_positive_rate(&self) -> Result<()> {
        if self.r > 0.0 {
            Ok(())
        } else {
            invalid("r", "r must be > 0 for premium formulas", self.r)
        }
    }
}

fn check_market(r: f64, sigma: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return invalid("r", "r must be >= 0", r);
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return invalid("sigma", "sigma must be > 0", sigma);
    }
    Ok(())
}

/// Current drawdown `y` and drawup `z` relative to the barrier width `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawdownState {
    pub y: f64,
    pub z: f64,
    pub k: f64,
}

impl DrawdownState {
    pub fn new(y: f64, z: f64, k: f64) -> Result<Self> {
        let state = Self { y, z, k };
        state.check()?;
        Ok(state)
    }

    /// Drawdown-only state (the drawup is irrelevant for vanilla and cancellable contracts).
    pub fn drawdown_only(y: f64, k: f64) -> Result<Self> {
        Self::new(y, 0.0, k)
    }

    pub fn check(&self) -> Result<()> {
        if !self.k.is_finite() || self.k <= 0.0 {
            return invalid("k", "k must be > 0", self.k);
        }
        if !self.y.is_finite() || self.y < 0.0 {
            return invalid("y", "y must be >= 0", self.y);
        }
        if self.y >= self.k {
            return invalid("y", "y must be < k", self.y);
        }
        if !self.z.is_finite() || self.z < 0.0 {
            return invalid("z", "z must be >= 0", self.z);
        }
        if self.z >= self.k {
            return invalid("z", "z must be < k", self.z);
        }
        Ok(())
    }

    /// Joint drawdown/drawup laws additionally need `y + z < k`.
    pub fn check_joint(&self) -> Result<()> {
        self.check()?;
        if self.y + self.z >= self.k {
            return invalid("z", "y + z must be < k", self.y + self.z);
        }
        Ok(())
    }

    /// Swaps the roles of drawdown and drawup.
    pub fn reflected(&self) -> Self {
        Self {
            y: self.z,
            z: self.y,
            k: self.k,
        }
    }
}

/// Builds the initial state from a reference period's log-price levels.
pub fn initial_state_from_log_levels(x_max: f64, x_min: f64, x: f64, k: f64) -> Result<DrawdownState> {
    if x > x_max {
        return invalid("x", "log-price must not exceed the recorded maximum", x);
    }
    if x < x_min {
        return invalid("x", "log-price must not be below the recorded minimum", x);
    }
    DrawdownState::new(x_max - x, x - x_min, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Maturity {
    Finite(f64),
    Perpetual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PremiumMode {
    Continuous,
    /// `n` equal payments over the finite maturity, the first at inception.
    Periodic(u32),
    Upfront,
    /// Premium paid continuously over a fixed term `T'` regardless of the drawdown.
    FixedTerm(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractSpec {
    /// Insured amount paid at the drawdown time.
    pub alpha: f64,
    /// Cancellation fee `c`.
    pub fee: f64,
    pub maturity: Maturity,
    /// Default intensity per year; zero means no default risk.
    pub lambda: f64,
    pub premium_mode: PremiumMode,
}

impl ContractSpec {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            fee: 0.0,
            maturity: Maturity::Perpetual,
            lambda: 0.0,
            premium_mode: PremiumMode::Continuous,
        }
    }

    pub fn with_fee(mut self, fee: f64) -> Self {
        self.fee = fee;
        self
    }

    pub fn with_maturity(mut self, maturity: Maturity) -> Self {
        self.maturity = maturity;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_premium_mode(mut self, mode: PremiumMode) -> Self {
        self.premium_mode = mode;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return invalid("alpha", "alpha must be > 0", self.alpha);
        }
        if !self.fee.is_finite() || self.fee < 0.0 {
            return invalid("fee", "fee must be >= 0", self.fee);
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return invalid("lambda", "lambda must be >= 0", self.lambda);
        }
        if let Maturity::Finite(t) = self.maturity {
            if !t.is_finite() || t <= 0.0 {
                return invalid("maturity", "maturity must be > 0", t);
            }
        }
        match self.premium_mode {
            PremiumMode::Periodic(n) => {
                if n < 1 {
                    return invalid("periods", "periodic premium needs n >= 1", n as f64);
                }
                if self.maturity == Maturity::Perpetual {
                    return invalid("maturity", "periodic premium needs a finite maturity", f64::INFINITY);
                }
            }
            PremiumMode::FixedTerm(t) => {
                if !t.is_finite() || t <= 0.0 {
                    return invalid("term", "fixed premium term must be > 0", t);
                }
            }
            PremiumMode::Continuous | PremiumMode::Upfront => {}
        }
        Ok(())
    }
}

/// Inputs that passed [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedInputs {
    pub market: MarketParams,
    pub state: DrawdownState,
    pub contract: ContractSpec,
}

/// Returns the triple unchanged iff every invariant holds; otherwise the first violation.
pub fn validate(market: MarketParams, state: DrawdownState, contract: ContractSpec) -> Result<ValidatedInputs> {
    check_market(market.r, market.sigma)?;
    state.check()?;
    contract.check()?;
    Ok(ValidatedInputs {
        market,
        state,
        contract,
    })
}

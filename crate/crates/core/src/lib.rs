//! Pricing of insurance claims against drawdown events of a geometric
//! Brownian motion, with a Monte Carlo reference engine.
//!
//! Prices are quoted in units of the notional `alpha`. Drawdowns are
//! measured on the log-price, so a drawdown of size `k` is a fall of the
//! log-price `k` below its running maximum.

pub mod cancellable;
pub mod drawdown;
pub mod error;
pub mod joint;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod premium;
pub mod validation;
pub mod vanilla;

pub use error::{Error, Result, ValidationError};
pub use model::{ContractSpec, DrawdownState, Maturity, MarketParams, PremiumMode};

//! Command-line grammar and the parameter set shared by flags and config files.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "dd-pricer", version, about = "Drawdown insurance pricer with a Monte Carlo cross-check")]
pub struct Cli {
    /// JSON file with parameters; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output format. Defaults to csv for `sweep` and json otherwise.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(flatten)]
    pub params: Params,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fair premium and related quantities for one contract type.
    Price {
        #[arg(value_enum)]
        contract: ContractKind,
    },
    /// Optimal cancellation threshold at premium `--p` (or at the fair premium for `--y`).
    Threshold,
    /// Expected time to the drawdown, or to the drawdown or cancellation, in years.
    ExpectedTime {
        #[arg(value_enum)]
        kind: TimeKind,
    },
    /// Repeat a command over a grid of one parameter and emit one row per point.
    Sweep {
        /// Parameter to vary, by its flag name (e.g. `lambda`, `k`, `maturity`).
        #[arg(long)]
        axis: String,
        /// `start:end:count`, endpoints included.
        #[arg(long)]
        grid: String,
        #[command(subcommand)]
        inner: SweepCommand,
    },
    /// Monte Carlo estimate of one quantity, with its closed form alongside.
    Simulate {
        #[arg(value_enum)]
        quantity: Quantity,
    },
    /// Run the closed form versus Monte Carlo suite.
    Validate {
        /// 10^4 paths on a 1e-3 grid instead of 10^5 paths on 1e-4.
        #[arg(long)]
        fast: bool,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SweepCommand {
    Price {
        #[arg(value_enum)]
        contract: ContractKind,
    },
    Threshold,
    ExpectedTime {
        #[arg(value_enum)]
        kind: TimeKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContractKind {
    Vanilla,
    Cancellable,
    Contingent,
    Defaultable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeKind {
    Drawdown,
    Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Discounted drawdown transform xi(y).
    Xi,
    /// Discounted transform of the drawdown falling to `theta` before reaching `k`.
    Beta,
    /// Drawdown-first transform up to `maturity`.
    TruncL,
    /// Drawup-first transform up to `maturity`.
    TruncR,
    /// Probability that neither the drawdown nor the drawup reaches `k` by `maturity`.
    Survival,
    LaplaceL,
    LaplaceR,
    /// Probability that the drawdown reaches `k` before the drawup does.
    DdFirst,
    /// Expected drawdown time under the physical drift (`--nu`).
    DrawdownTime,
    /// Expected time to drawdown `k` or recovery to `theta` under the physical drift.
    TerminationTime,
    /// Buyer's value of the vanilla contract at premium `--p`.
    VanillaValue,
    /// Buyer's value of the cancellable contract at `--p` with threshold `--theta`.
    PolicyValue,
    /// Perpetual defaultable premium at intensity `--lambda`.
    DefaultPremium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftArg {
    Unshifted,
    Compensated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroStateArg {
    Corrected,
    Printed,
}

/// Every model, contract and simulation parameter. Each one can come from a
/// flag or from the config file; all rates are decimals per year.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Risk-free rate.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Volatility.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Physical growth rate, for expected times.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Current log drawdown.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Current log drawup.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Drawdown (and drawup) size in log units.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Insured amount paid at the drawdown.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Cancellation fee.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Premium rate per year.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Maturity in years; also the premium term for `price vanilla`.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maturity: Option<f64>,
    /// Default intensity.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Number of premium payments over the maturity.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periods: Option<u32>,
    /// Cancellation threshold.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Pre-default log drift: `unshifted` (r - sigma^2/2) or `compensated` (adds lambda)
    #[arg(long, value_enum, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default_drift: Option<DriftArg>,
    /// Constant used for the expected drawdown time from y = 0
    #[arg(long, value_enum, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_state: Option<ZeroStateArg>,
    /// Monte Carlo paths
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    /// Monte Carlo time step in years
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Simulation horizon in years; chosen from the expected event time when omitted
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Monte Carlo seed
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; 0 or omitted uses all cores (capped by DD_PRICER_THREADS)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Brownian-bridge crossing correction (`true` or `false`).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bridge: Option<bool>,
}

/// Names accepted by `sweep --axis`.
pub const SWEEP_AXES: &[&str] = &[
    "r", "sigma", "nu", "y", "z", "k", "alpha", "c", "p", "maturity", "lambda", "periods", "theta",
];

//! Evaluation of each subcommand on a resolved parameter set.

use serde::Serialize;
use serde_json::Value;

use dd_pricer_core::cancellable::{self, CancellationPolicy};
use dd_pricer_core::drawdown::{self, LaplaceContext, XiKernel, ZeroStateConstant};
use dd_pricer_core::joint::{self, SeriesConfig};
use dd_pricer_core::mc::{self, Functional, SimConfig, SimTarget};
use dd_pricer_core::premium::{self, DefaultDrift};
use dd_pricer_core::{vanilla, ContractSpec, DrawdownState, MarketParams};

use crate::args::{ContractKind, DriftArg, Params, Quantity, SweepCommand, TimeKind, ZeroStateArg};
use crate::CliError;

type Out = Result<Value, CliError>;

fn need<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("missing required parameter --{name}")))
}

fn to_value<T: Serialize>(v: &T) -> Out {
    serde_json::to_value(v).map_err(|e| CliError::Input(format!("serializing result: {e}")))
}

// ---------------------------------------------------------------------------
// Parameter accessors
// ---------------------------------------------------------------------------

impl Params {
    fn market(&self) -> Result<MarketParams, CliError> {
        let m = MarketParams::new(need(self.r, "r")?, need(self.sigma, "sigma")?)?;
        Ok(match self.nu {
            Some(nu) => m.with_growth(nu)?,
            None => m,
        })
    }

    fn state(&self) -> Result<DrawdownState, CliError> {
        Ok(DrawdownState::new(need(self.y, "y")?, self.z.unwrap_or(0.0), need(self.k, "k")?)?)
    }

    fn contract(&self) -> ContractSpec {
        ContractSpec::new(self.alpha.unwrap_or(1.0)).with_fee(self.c.unwrap_or(0.0))
    }

    fn checked_contract(&self) -> Result<ContractSpec, CliError> {
        let c = self.contract();
        c.check()?;
        Ok(c)
    }

    fn drift(&self) -> DefaultDrift {
        match self.default_drift {
            Some(DriftArg::Compensated) => DefaultDrift::Compensated,
            Some(DriftArg::Unshifted) | None => DefaultDrift::Unshifted,
        }
    }

    fn zero_state(&self) -> ZeroStateConstant {
        match self.zero_state {
            Some(ZeroStateArg::Printed) => ZeroStateConstant::AsPrinted,
            Some(ZeroStateArg::Corrected) | None => ZeroStateConstant::Corrected,
        }
    }

    fn sim(&self) -> SimConfig {
        let d = SimConfig::default();
        SimConfig {
            paths: self.paths.unwrap_or(d.paths),
            dt: self.dt.unwrap_or(d.dt),
            horizon: self.horizon.unwrap_or(d.horizon),
            seed: self.seed.unwrap_or(d.seed),
            workers: self.workers.unwrap_or(d.workers),
            bridge_correction: self.bridge.unwrap_or(d.bridge_correction),
        }
    }
}

// ---------------------------------------------------------------------------
// Closed-form commands
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct VanillaOut {
    premium: f64,
    upfront: f64,
    xi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_term_premium: Option<f64>,
}

#[derive(Serialize)]
struct CancellableOut {
    premium: f64,
    never_cancel: bool,
    theta_star: Option<f64>,
    theta0: Option<f64>,
    vanilla_premium: f64,
    never_cancel_premium: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

#[derive(Serialize)]
struct ThresholdOut {
    p: f64,
    never_cancel: bool,
    theta_star: Option<f64>,
    theta0: Option<f64>,
    residual: Option<f64>,
    never_cancel_premium: f64,
}

#[derive(Serialize)]
struct TimeOut {
    years: f64,
}

fn policy_parts(policy: &CancellationPolicy) -> (bool, Option<f64>, Option<f64>, Option<f64>) {
    match *policy {
        CancellationPolicy::Threshold {
            theta_star,
            theta0,
            residual,
        } => (false, Some(theta_star), Some(theta0), Some(residual)),
        CancellationPolicy::NeverCancel => (true, None, None, None),
    }
}

pub fn price(kind: ContractKind, p: &Params) -> Out {
    let m = p.market()?;
    let st = p.state()?;
    let c = p.checked_contract()?;
    let (y, k) = (st.y, st.k);
    let cfg = SeriesConfig::default();
    match kind {
        ContractKind::Vanilla => {
            let premium = vanilla::fair_premium(y, k, &m, &c)?.value;
            let out = VanillaOut {
                premium,
                upfront: vanilla::upfront_price(y, k, &m, &c)?.value,
                xi: LaplaceContext::risk_neutral(m, k)?.kernel().xi(y)?,
                value: p.p.map(|pp| vanilla::contract_value(y, k, pp, &m, &c).map(|q| q.value)).transpose()?,
                fixed_term_premium: p
                    .maturity
                    .map(|t| vanilla::fair_premium_fixed_term(y, k, t, &m, &c).map(|q| q.value))
                    .transpose()?,
            };
            to_value(&out)
        }
        ContractKind::Cancellable => {
            let (premium, policy) = cancellable::fair_premium_cancellable(y, k, &m, &c)?;
            let (never_cancel, theta_star, theta0, _) = policy_parts(&policy);
            let out = CancellableOut {
                premium,
                never_cancel,
                theta_star,
                theta0,
                vanilla_premium: vanilla::fair_premium(y, k, &m, &c)?.value,
                never_cancel_premium: cancellable::never_cancel_premium(k, &m, &c)?,
                value: p
                    .p
                    .map(|pp| cancellable::contract_value_cancellable(y, k, pp, &m, &c).map(|q| q.value))
                    .transpose()?,
            };
            to_value(&out)
        }
        ContractKind::Contingent => {
            let q = match (p.maturity, p.periods) {
                (Some(t), Some(n)) => premium::fair_premium_periodic(&st, t, n, &m, &c, &cfg)?,
                (None, Some(_)) => return Err(CliError::Input("--periods needs --maturity".into())),
                (Some(t), None) => premium::fair_premium_contingent_finite(&st, t, &m, &c, &cfg)?,
                (None, None) => premium::fair_premium_contingent_perpetual(&st, &m, &c)?,
            };
            to_value(&q)
        }
        ContractKind::Defaultable => {
            let lambda = need(p.lambda, "lambda")?;
            let q = match p.maturity {
                Some(t) => premium::fair_premium_default_finite(&st, t, lambda, p.drift(), &m, &c, &cfg)?,
                None => premium::fair_premium_default_perpetual(&st, lambda, p.drift(), &m, &c)?,
            };
            to_value(&q)
        }
    }
}

pub fn threshold(p: &Params) -> Out {
    let m = p.market()?;
    let c = p.checked_contract()?;
    let k = need(p.k, "k")?;
    let premium = match p.p {
        Some(pp) => pp,
        None => {
            let st = p.state()?;
            cancellable::fair_premium_cancellable(st.y, k, &m, &c)?.0
        }
    };
    let policy = cancellable::optimal_threshold(k, premium, &m, &c)?;
    let (never_cancel, theta_star, theta0, residual) = policy_parts(&policy);
    to_value(&ThresholdOut {
        p: premium,
        never_cancel,
        theta_star,
        theta0,
        residual,
        never_cancel_premium: cancellable::never_cancel_premium(k, &m, &c)?,
    })
}

pub fn expected_time(kind: TimeKind, p: &Params) -> Out {
    need(p.nu, "nu")?;
    let ctx = LaplaceContext::physical(p.market()?, need(p.k, "k")?)?;
    let y = need(p.y, "y")?;
    let years = match kind {
        TimeKind::Drawdown => drawdown::expected_drawdown_time(y, &ctx, p.zero_state())?,
        TimeKind::Termination => drawdown::expected_termination_time(y, need(p.theta, "theta")?, &ctx)?,
    };
    to_value(&TimeOut { years })
}

pub fn sweep_point(cmd: SweepCommand, p: &Params) -> Out {
    match cmd {
        SweepCommand::Price { contract } => price(contract, p),
        SweepCommand::Threshold => threshold(p),
        SweepCommand::ExpectedTime { kind } => expected_time(kind, p),
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateOut {
    quantity: Quantity,
    closed_form: f64,
    estimate: mc::Estimate,
    z_score: f64,
    within_3se: bool,
    config: SimConfig,
    target: SimTarget,
}

pub fn simulate(q: Quantity, p: &Params) -> Out {
    let m = p.market()?;
    let r = m.r();
    let rn = m.risk_neutral();
    let (y, z, k) = (need(p.y, "y")?, p.z.unwrap_or(0.0), need(p.k, "k")?);
    let maturity = || need(p.maturity, "maturity");
    let kern = XiKernel::new(rn, r, k);
    let sc = SeriesConfig::default();
    let joint_target = || -> Result<SimTarget, CliError> { Ok(SimTarget::joint(DrawdownState::new(y, z, k)?, rn)?) };

    // (target, maturity for the horizon, numerator, optional denominator, discount, closed form)
    let (target, t_h, f, den, rate, closed) = match q {
        Quantity::Xi => (SimTarget::drawdown(y, k, rn)?, None, Functional::LaplaceDD, None, r, kern.xi(y)?),
        Quantity::Beta => {
            let th = need(p.theta, "theta")?;
            let target = SimTarget::drawdown(y, k, rn)?.with_threshold(th);
            (target, None, Functional::LaplaceMin, None, r, kern.beta(y, th)?)
        }
        Quantity::TruncL | Quantity::TruncR | Quantity::Survival => {
            let t = maturity()?;
            let (f, closed) = match q {
                Quantity::TruncL => (
                    Functional::TruncL { maturity: t },
                    joint::truncated_laplace_l(y, z, Some(t), r, rn, k, &sc)?,
                ),
                Quantity::TruncR => (
                    Functional::TruncR { maturity: t },
                    joint::truncated_laplace_r(y, z, Some(t), r, rn, k, &sc)?,
                ),
                _ => (Functional::Survival { maturity: t }, joint::survival_prob(y, z, t, rn, k, &sc)?),
            };
            (joint_target()?, Some(t), f, None, r, closed)
        }
        Quantity::LaplaceL => (joint_target()?, None, Functional::LaplaceDD, None, r, joint::perpetual_l(y, z, r, rn, k)?),
        Quantity::LaplaceR => (joint_target()?, None, Functional::LaplaceDU, None, r, joint::perpetual_r(y, z, r, rn, k)?),
        Quantity::DdFirst => (joint_target()?, None, Functional::DDFirstIndicator, None, 0.0, joint::prob_dd_first(y, z, rn, k)?),
        Quantity::DrawdownTime | Quantity::TerminationTime => {
            need(p.nu, "nu")?;
            let ctx = LaplaceContext::physical(m, k)?;
            let d = ctx.diffusion();
            if q == Quantity::DrawdownTime {
                let closed = drawdown::expected_drawdown_time(y, &ctx, p.zero_state())?;
                (SimTarget::drawdown(y, k, d)?, None, Functional::MeanTauDD, None, 0.0, closed)
            } else {
                let th = need(p.theta, "theta")?;
                let closed = drawdown::expected_termination_time(y, th, &ctx)?;
                let target = SimTarget::drawdown(y, k, d)?.with_threshold(th);
                (target, None, Functional::MeanTermination, None, 0.0, closed)
            }
        }
        Quantity::VanillaValue => {
            let pp = need(p.p, "p")?;
            let c = p.checked_contract()?;
            let closed = vanilla::contract_value(y, k, pp, &m, &c)?.value;
            let f = Functional::VanillaValue { p: pp, alpha: c.alpha };
            (SimTarget::drawdown(y, k, rn)?, None, f, None, r, closed)
        }
        Quantity::PolicyValue => {
            let pp = need(p.p, "p")?;
            let th = need(p.theta, "theta")?;
            let c = p.checked_contract()?;
            let closed = if y <= th {
                -c.fee
            } else {
                vanilla::contract_value(y, k, pp, &m, &c)?.value + cancellable::stopping_value(y, k, th, pp, &m, &c)?
            };
            let f = Functional::PolicyValue {
                p: pp,
                fee: c.fee,
                alpha: c.alpha,
            };
            (SimTarget::drawdown(y, k, rn)?.with_threshold(th), None, f, None, r, closed)
        }
        Quantity::DefaultPremium => {
            let lambda = need(p.lambda, "lambda")?;
            let c = p.checked_contract()?;
            let st = DrawdownState::new(y, z, k)?;
            let closed = premium::fair_premium_default_perpetual(&st, lambda, p.drift(), &m, &c)?.premium;
            let target = SimTarget::joint(st, p.drift().diffusion(&m, lambda))?.with_default(lambda);
            let f = Functional::DefaultTruncL { maturity: None };
            (target, None, f, Some(Functional::Annuity { maturity: None }), r, closed)
        }
    };

    let mut cfg = p.sim();
    if p.horizon.is_none() {
        cfg.horizon = mc::suggested_horizon(&target, t_h)?;
    }
    let stats = mc::simulate_stats(&target, &cfg)?;
    let mut estimate = match den {
        Some(d) => mc::estimate_ratio(f, d, &stats, rate)?,
        None => mc::estimate(f, &stats, rate)?,
    };
    if q == Quantity::DefaultPremium {
        // The simulated protection leg pays one unit.
        let alpha = p.contract().alpha;
        estimate.mean *= alpha;
        estimate.std_error *= alpha;
    }
    let z_score = estimate.z_score(closed);
    to_value(&SimulateOut {
        quantity: q,
        closed_form: closed,
        within_3se: z_score.abs() <= 3.0,
        z_score,
        estimate,
        config: cfg,
        target,
    })
}

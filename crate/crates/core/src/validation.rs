//! Closed form versus Monte Carlo suite.
//!
//! Each check prices one quantity in closed form and estimates it from
//! simulated paths. A check passes when the closed form lies within three
//! standard errors of the estimate. The one exception is the rejected
//! variant of the zero-state constant for the expected drawdown time, which
//! must sit more than five standard errors away.
//!
//! The report carries no timings, so identical settings give identical output.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cancellable;
use crate::drawdown::{self, LaplaceContext, XiKernel, ZeroStateConstant};
use crate::error::Result;
use crate::joint::{self, SeriesConfig};
use crate::mc::{self, Estimate, Functional, SimConfig, SimTarget};
use crate::model::{ContractSpec, DrawdownState, MarketParams};
use crate::premium::{self, DefaultDrift};
use crate::vanilla;

/// Seed of the shipped validation runs.
pub const DEFAULT_SEED: u64 = 20_130_501;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Requirement {
    WithinSe { max: f64 },
    BeyondSe { min: f64 },
}

impl Requirement {
    fn holds(&self, z: f64) -> bool {
        match *self {
            Requirement::WithinSe { max } => z.abs() <= max,
            Requirement::BeyondSe { min } => z.abs() > min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub closed_form: f64,
    pub mc: Estimate,
    pub z_score: f64,
    pub requirement: Requirement,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub paths: usize,
    pub dt: f64,
    pub bridge_correction: bool,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line per check, fixed formatting.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "validation: seed={} paths={} dt={:e} bridge={}",
            self.seed, self.paths, self.dt, self.bridge_correction
        );
        for c in &self.checks {
            let req = match c.requirement {
                Requirement::WithinSe { max } => format!("|z|<={max}"),
                Requirement::BeyondSe { min } => format!("|z|>{min}"),
            };
            let _ = writeln!(
                out,
                "{} [{}] {}: closed={:.8} mc={:.8} se={:.3e} z={:+.2} ({req})",
                if c.passed { "PASS" } else { "FAIL" },
                c.group,
                c.name,
                c.closed_form,
                c.mc.mean,
                c.mc.std_error,
                c.z_score,
            );
            if let Some(note) = &c.mc.truncation_note {
                let _ = writeln!(out, "     note: {note}");
            }
        }
        let n_fail = self.failures().count();
        let _ = writeln!(out, "{} of {} checks passed", self.checks.len() - n_fail, self.checks.len());
        out
    }
}

/// Paths, grid, seed, workers and bridge flag; horizons are set per check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub sim: SimConfig,
}

impl SuiteConfig {
    /// 10^5 paths on a 1e-4 grid with bridge correction.
    pub fn full(seed: u64) -> Self {
        Self {
            sim: SimConfig {
                seed,
                ..SimConfig::default()
            },
        }
    }

    /// 10^4 paths on a 1e-3 grid.
    pub fn fast(seed: u64) -> Self {
        Self {
            sim: SimConfig {
                seed,
                ..SimConfig::fast()
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

struct Runner {
    cfg: SuiteConfig,
    checks: Vec<Check>,
    sims: u64,
}

impl Runner {
    /// Simulates with a seed offset per simulation so checks are independent.
    fn simulate(&mut self, target: &SimTarget, maturity: Option<f64>) -> Result<mc::PathStats> {
        let horizon = mc::suggested_horizon(target, maturity)?;
        let sim = SimConfig {
            seed: self.cfg.sim.seed.wrapping_add(self.sims),
            ..self.cfg.sim.with_horizon(horizon)
        };
        self.sims += 1;
        mc::simulate_stats(target, &sim)
    }

    fn push(&mut self, group: &'static str, name: impl Into<String>, closed_form: f64, mc: Estimate, requirement: Requirement) {
        let z = mc.z_score(closed_form);
        self.checks.push(Check {
            group,
            name: name.into(),
            closed_form,
            mc,
            z_score: z,
            requirement,
            passed: requirement.holds(z),
        });
    }

    fn within(&mut self, group: &'static str, name: impl Into<String>, closed_form: f64, mc: Estimate) {
        self.push(group, name, closed_form, mc, Requirement::WithinSe { max: 3.0 });
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    cfg.sim.check()?;
    let mut run = Runner {
        cfg: *cfg,
        checks: Vec::new(),
        sims: 0,
    };
    let m = MarketParams::new(0.02, 0.3)?;
    let r = m.r();
    let rn = m.risk_neutral();
    let one = ContractSpec::new(1.0);

    // G1: drawdown transform, vanilla value and the downward factor.
    {
        let (y, k, p) = (0.1, 0.3, 1.0);
        let kern = XiKernel::new(rn, r, k);
        let stats = run.simulate(&SimTarget::drawdown(y, k, rn)?, None)?;
        run.within("G1", "xi(0.1), k=0.3", kern.xi(y)?, mc::estimate(Functional::LaplaceDD, &stats, r)?);
        let v = vanilla::contract_value(y, k, p, &m, &one)?.value;
        run.within(
            "G1",
            "vanilla value at p=1",
            v,
            mc::estimate(Functional::VanillaValue { p, alpha: 1.0 }, &stats, r)?,
        );
        let theta = 0.05;
        let target = SimTarget::drawdown(y, k, rn)?.with_threshold(theta);
        let stats = run.simulate(&target, None)?;
        run.within("G1", "beta(0.1, 0.05), k=0.3", kern.beta(y, theta)?, mc::estimate(Functional::LaplaceMin, &stats, r)?);
    }

    // G2: expected times under the physical measure.
    {
        let (y, k) = (0.1, 0.3);
        let ctx = LaplaceContext::physical(m.with_growth(0.07)?, k)?;
        let d = ctx.diffusion();
        let closed = drawdown::expected_drawdown_time(y, &ctx, ZeroStateConstant::Corrected)?;
        let stats = run.simulate(&SimTarget::drawdown(y, k, d)?, None)?;
        run.within("G2", "E tau_D, nu=0.07, y=0.1", closed, mc::estimate(Functional::MeanTauDD, &stats, 0.0)?);

        let theta = 0.05;
        let ctx = LaplaceContext::physical(m.with_growth(0.05)?, k)?;
        let d = ctx.diffusion();
        let closed = drawdown::expected_termination_time(y, theta, &ctx)?;
        let target = SimTarget::drawdown(y, k, d)?.with_threshold(theta);
        let stats = run.simulate(&target, None)?;
        run.within(
            "G2",
            "E termination, nu=0.05, theta=0.05",
            closed,
            mc::estimate(Functional::MeanTermination, &stats, 0.0)?,
        );
    }

    // G3 and G4: joint drawdown/drawup transforms, finite and perpetual.
    {
        let state = DrawdownState::new(0.1, 0.1, 0.5)?;
        let (y, z, k, t) = (state.y, state.z, state.k, 2.0);
        let sc = SeriesConfig::default();
        let stats = run.simulate(&SimTarget::joint(state, rn)?, Some(t))?;
        let est = |f| mc::estimate(f, &stats, r);
        run.within(
            "G3",
            "L^T(0.1, 0.1), T=2",
            joint::truncated_laplace_l(y, z, Some(t), r, rn, k, &sc)?,
            est(Functional::TruncL { maturity: t })?,
        );
        run.within(
            "G3",
            "R^T(0.1, 0.1), T=2",
            joint::truncated_laplace_r(y, z, Some(t), r, rn, k, &sc)?,
            est(Functional::TruncR { maturity: t })?,
        );
        run.within(
            "G3",
            "survival(0.1, 0.1), T=2",
            joint::survival_prob(y, z, t, rn, k, &sc)?,
            est(Functional::Survival { maturity: t })?,
        );
        run.within("G4", "L(0.1, 0.1) perpetual", joint::perpetual_l(y, z, r, rn, k)?, est(Functional::LaplaceDD)?);
        run.within("G4", "R(0.1, 0.1) perpetual", joint::perpetual_r(y, z, r, rn, k)?, est(Functional::LaplaceDU)?);
        run.within(
            "G4",
            "P(drawdown first) (0.1, 0.1)",
            joint::prob_dd_first(y, z, rn, k)?,
            mc::estimate(Functional::DDFirstIndicator, &stats, 0.0)?,
        );
    }

    // G5: cancellable contract at its fair premium and optimal threshold.
    {
        let (y, k) = (0.1, 0.3);
        let contract = ContractSpec::new(1.0).with_fee(0.05);
        let (p, policy) = cancellable::fair_premium_cancellable(y, k, &m, &contract)?;
        let theta = policy.theta_star().unwrap_or(0.0);
        let closed = cancellable::contract_value_cancellable(y, k, p, &m, &contract)?.value;
        let target = SimTarget::drawdown(y, k, rn)?.with_threshold(theta);
        let stats = run.simulate(&target, None)?;
        run.within(
            "G5",
            format!("cancellable value at P*={p:.6}, theta*={theta:.6}"),
            closed,
            mc::estimate(Functional::PolicyValue { p, fee: contract.fee, alpha: contract.alpha }, &stats, r)?,
        );
    }

    // G6: defaultable perpetual premium.
    for lambda in [0.1, 0.5] {
        let state = DrawdownState::new(0.1, 0.1, 0.5)?;
        let drift = DefaultDrift::default();
        let d = drift.diffusion(&m, lambda);
        let closed = premium::fair_premium_default_perpetual(&state, lambda, drift, &m, &one)?.premium;
        let target = SimTarget::joint(state, d)?.with_default(lambda);
        let stats = run.simulate(&target, None)?;
        let est = mc::estimate_ratio(Functional::DefaultTruncL { maturity: None }, Functional::Annuity { maturity: None }, &stats, r)?;
        run.within("G6", format!("defaultable perpetual premium, lambda={lambda}"), closed, est);
    }

    // G7: zero-state constant of the expected drawdown time, driftless case.
    {
        let (y, k) = (0.0, 0.5);
        let ctx = LaplaceContext::physical(MarketParams::new(0.02, 1.0)?.with_growth(0.5)?, k)?;
        let corrected = drawdown::expected_drawdown_time(y, &ctx, ZeroStateConstant::Corrected)?;
        let printed = drawdown::expected_drawdown_time(y, &ctx, ZeroStateConstant::AsPrinted)?;
        let stats = run.simulate(&SimTarget::drawdown(y, k, ctx.diffusion())?, None)?;
        let est = mc::estimate(Functional::MeanTauDD, &stats, 0.0)?;
        run.within("G7", "E tau_D(0), sigma=1, k=0.5, corrected constant", corrected, est.clone());
        run.push(
            "G7",
            "E tau_D(0), sigma=1, k=0.5, printed constant rejected",
            printed,
            est,
            Requirement::BeyondSe { min: 5.0 },
        );
    }

    // G8: drawdown transform with zero and positive risk-neutral drift.
    for (label, rate) in [("mu=0", 0.045), ("mu>0", 0.08)] {
        let (y, k) = (0.1, 0.3);
        let mk = MarketParams::new(rate, 0.3)?;
        let d = mk.risk_neutral();
        let closed = XiKernel::new(d, rate, k).xi(y)?;
        let stats = run.simulate(&SimTarget::drawdown(y, k, d)?, None)?;
        run.within("G8", format!("xi(0.1), k=0.3, {label}"), closed, mc::estimate(Functional::LaplaceDD, &stats, rate)?);
    }

    let passed = run.checks.iter().all(|c| c.passed);
    Ok(Report {
        seed: cfg.sim.seed,
        paths: cfg.sim.paths,
        dt: cfg.sim.dt,
        bridge_correction: cfg.sim.bridge_correction,
        checks: run.checks,
        passed,
    })
}

//! Brute-force path simulation of the log-price, used as an independent
//! check on every closed form in the crate.
//!
//! A path starts at `X = 0` with running maximum `y` and running minimum
//! `-z`, so its initial drawdown is `y` and its initial drawup is `z`. It is
//! stepped on a uniform grid until the first enabled event (drawdown `k`,
//! drawup `k`, drawdown back down to `theta`, or default) or the horizon.
//!
//! Each path draws from its own ChaCha8 stream: the generator is seeded
//! with the master seed and switched to stream number `path index`. Results
//! therefore do not depend on the worker count or scheduling, and sums are
//! taken in path order with compensated summation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::drawdown::{self, LaplaceContext, ZeroStateConstant};
use crate::error::{Error, Result};
use crate::model::{Diffusion, DrawdownState, MarketParams};
use crate::numerics::KahanSum;

/// Environment variable that caps the number of simulation threads.
pub const THREADS_ENV: &str = "DD_PRICER_THREADS";

/// Fewest paths [`estimate`] accepts.
pub const MIN_PATHS: usize = 100;

/// Horizon for perpetual targets, as a multiple of the expected event time.
pub const HORIZON_EVENT_MULTIPLE: f64 = 15.0;

/// Horizon for finite-maturity targets, as a multiple of the maturity.
pub const HORIZON_MATURITY_MULTIPLE: f64 = 4.0;

/// Bridge crossing probabilities below `e^-BRIDGE_CUTOFF` are treated as zero.
const BRIDGE_CUTOFF: f64 = 40.0;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub paths: usize,
    /// Grid step in years.
    pub dt: f64,
    /// Paths still running at this time are stopped and reported as unresolved.
    pub horizon: f64,
    pub seed: u64,
    /// Thread count; 0 uses every available core. [`THREADS_ENV`] caps it either way.
    pub workers: usize,
    /// Detect barrier crossings between grid points by Brownian-bridge draws.
    pub bridge_correction: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            dt: 1e-4,
            horizon: 10.0,
            seed: 20_130_501,
            workers: 0,
            bridge_correction: true,
        }
    }
}

impl SimConfig {
    /// Coarse settings for smoke runs: 10^4 paths on a 1e-3 grid.
    pub fn fast() -> Self {
        Self {
            paths: 10_000,
            dt: 1e-3,
            ..Self::default()
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Config("paths must be >= 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if self.dt > self.horizon {
            return Err(Error::Config(format!("dt {} exceeds horizon {}", self.dt, self.horizon)));
        }
        Ok(())
    }

    fn thread_count(&self) -> usize {
        let cap = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        let wanted = if self.workers == 0 {
            rayon::current_num_threads()
        } else {
            self.workers
        };
        cap.map_or(wanted, |c| wanted.min(c)).max(1)
    }
}

/// Horizon rule: long enough that almost every path resolves for perpetual
/// targets, and several maturities for finite ones.
pub fn horizon_for(expected_event_time: f64, maturity: Option<f64>) -> f64 {
    let by_event = HORIZON_EVENT_MULTIPLE * expected_event_time;
    match maturity {
        Some(t) => by_event.max(HORIZON_MATURITY_MULTIPLE * t),
        None => by_event,
    }
}

/// Horizon from [`horizon_for`] with the target's own expected event time:
/// the termination time for threshold targets, otherwise the drawdown time
/// (an upper bound when the drawup also stops the path), capped by `1/lambda`.
pub fn suggested_horizon(target: &SimTarget, maturity: Option<f64>) -> Result<f64> {
    let d = target.diffusion;
    let market = MarketParams::new(0.0, d.sigma)?.with_growth(d.drift + 0.5 * d.sigma * d.sigma)?;
    let ctx = LaplaceContext::physical(market, target.state.k)?;
    let y = target.state.y;
    let mut event = match target.theta {
        Some(th) if th > 0.0 && th < y => drawdown::expected_termination_time(y, th, &ctx)?,
        _ => drawdown::expected_drawdown_time(y, &ctx, ZeroStateConstant::Corrected)?,
    };
    if target.lambda > 0.0 {
        event = event.min(1.0 / target.lambda);
    }
    // A threshold at or above the start stops every path at time zero.
    Ok(horizon_for(event, maturity).max(1e-3))
}

/// What to simulate and which events stop a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimTarget {
    pub state: DrawdownState,
    pub diffusion: Diffusion,
    /// Default intensity; 0 disables default.
    pub lambda: f64,
    /// Stop when the drawdown falls to this level.
    pub theta: Option<f64>,
    /// Stop at the first drawup of size `k`.
    pub stop_on_drawup: bool,
}

impl SimTarget {
    /// Stops only at the drawdown `k`.
    pub fn drawdown(y: f64, k: f64, diffusion: Diffusion) -> Result<Self> {
        Ok(Self {
            state: DrawdownState::drawdown_only(y, k)?,
            diffusion,
            lambda: 0.0,
            theta: None,
            stop_on_drawup: false,
        })
    }

    /// Stops at whichever of drawdown `k` and drawup `k` comes first.
    pub fn joint(state: DrawdownState, diffusion: Diffusion) -> Result<Self> {
        state.check_joint()?;
        Ok(Self {
            state,
            diffusion,
            lambda: 0.0,
            theta: None,
            stop_on_drawup: true,
        })
    }

    pub fn with_threshold(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn with_default(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    fn check(&self) -> Result<()> {
        self.state.check()?;
        if !(self.diffusion.sigma.is_finite() && self.diffusion.sigma > 0.0 && self.diffusion.drift.is_finite()) {
            return Err(Error::Config("diffusion needs finite drift and sigma > 0".into()));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if let Some(th) = self.theta {
            if !(th >= 0.0 && th < self.state.k) {
                return Err(Error::Config(format!("theta must lie in [0, k), got {th}")));
            }
        }
        if self.stop_on_drawup {
            self.state.check_joint()?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Path records
// ---------------------------------------------------------------------------

/// Event times of one path; `INFINITY` means the event was not observed
/// before the path stopped. At most one of the barrier times is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub tau_d: f64,
    pub tau_u: f64,
    pub tau_theta: f64,
    /// Default time, `INFINITY` if it falls after the stop or `lambda = 0`.
    pub zeta: f64,
}

impl PathRecord {
    const EMPTY: Self = Self {
        tau_d: f64::INFINITY,
        tau_u: f64::INFINITY,
        tau_theta: f64::INFINITY,
        zeta: f64::INFINITY,
    };

    fn event_time(&self) -> f64 {
        self.tau_d.min(self.tau_u).min(self.tau_theta).min(self.zeta)
    }

    /// Stopping time of the path, capped at the horizon.
    pub fn stop(&self, horizon: f64) -> f64 {
        self.event_time().min(horizon)
    }

    pub fn resolved(&self) -> bool {
        self.event_time().is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStats {
    pub target: SimTarget,
    pub config: SimConfig,
    pub records: Vec<PathRecord>,
}

impl PathStats {
    pub fn unresolved(&self) -> usize {
        self.records.iter().filter(|r| !r.resolved()).count()
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

pub fn simulate_stats(target: &SimTarget, cfg: &SimConfig) -> Result<PathStats> {
    cfg.check()?;
    target.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.thread_count())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        (0..cfg.paths)
            .into_par_iter()
            .map(|i| simulate_path(target, cfg, i as u64))
            .collect()
    });
    Ok(PathStats {
        target: *target,
        config: *cfg,
        records,
    })
}

/// True with the probability that a Brownian bridge from `x0` to `x1` over a
/// step of variance `var` touches the level `b`, given both ends are on the
/// same side of it.
fn bridge_touches(x0: f64, x1: f64, b: f64, var: f64, rng: &mut ChaCha8Rng) -> bool {
    let e = 2.0 * (x0 - b) * (x1 - b) / var;
    e < BRIDGE_CUTOFF && rng.random::<f64>() < (-e).exp()
}

/// Samples the bridge maximum if it can exceed `hi`, and returns the new running maximum.
fn bridge_max(x0: f64, x1: f64, hi: f64, var: f64, rng: &mut ChaCha8Rng) -> f64 {
    if 2.0 * (hi - x0) * (hi - x1) / var >= BRIDGE_CUTOFF && x1 <= hi {
        return hi;
    }
    let e: f64 = rng.sample(rand_distr::Exp1);
    let d = x1 - x0;
    hi.max(0.5 * (x0 + x1 + (d * d + 2.0 * var * e).sqrt()))
}

fn simulate_path(target: &SimTarget, cfg: &SimConfig, index: u64) -> PathRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let mut rec = PathRecord::EMPTY;

    let zeta = if target.lambda > 0.0 {
        Exp::new(target.lambda).expect("lambda checked").sample(&mut rng)
    } else {
        f64::INFINITY
    };
    let DrawdownState { y, z, k } = target.state;
    if let Some(th) = target.theta {
        if y <= th {
            rec.tau_theta = 0.0;
            return rec;
        }
    }

    let Diffusion { drift, sigma } = target.diffusion;
    let end = cfg.horizon.min(zeta);
    let bridge = cfg.bridge_correction;
    let mut x = 0.0_f64;
    let mut hi = y;
    let mut lo = -z;
    let mut step: u64 = 0;
    let mut t = 0.0;

    while t < end {
        let t1 = ((step + 1) as f64 * cfg.dt).min(end);
        let h = t1 - t;
        let var = sigma * sigma * h;
        let g: f64 = StandardNormal.sample(&mut rng);
        let x1 = x + drift * h + var.sqrt() * g;

        let bd = hi - k;
        if x1 <= bd || (bridge && bridge_touches(x, x1, bd, var, &mut rng)) {
            rec.tau_d = t1;
            return rec;
        }
        if target.stop_on_drawup {
            let bu = lo + k;
            if x1 >= bu || (bridge && bridge_touches(x, x1, bu, var, &mut rng)) {
                rec.tau_u = t1;
                return rec;
            }
        }
        if let Some(th) = target.theta {
            let bt = hi - th;
            if x1 >= bt || (bridge && bridge_touches(x, x1, bt, var, &mut rng)) {
                rec.tau_theta = t1;
                return rec;
            }
        }

        if bridge {
            hi = bridge_max(x, x1, hi, var, &mut rng);
            if target.stop_on_drawup {
                lo = -bridge_max(-x, -x1, -lo, var, &mut rng);
            }
        } else {
            hi = hi.max(x1);
            lo = lo.min(x1);
        }
        x = x1;
        t = t1;
        step += 1;
    }

    if zeta <= cfg.horizon {
        // Default sends the log-price to minus infinity, which is a drawdown
        // of any size; it is recorded separately so callers can tell them apart.
        rec.zeta = zeta;
    }
    rec
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

/// Per-path payoffs whose sample means estimate the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// `e^{-r tau_D}` on paths stopped by the drawdown.
    LaplaceDD,
    /// `e^{-r tau_U}` on paths stopped by the drawup.
    LaplaceDU,
    /// `e^{-r tau_theta}` on paths stopped by the drawdown falling to `theta`.
    LaplaceMin,
    DDFirstIndicator,
    DUFirstIndicator,
    /// Neither the drawdown nor the drawup stopped the path.
    NeitherBeforeHorizon,
    TruncL { maturity: f64 },
    TruncR { maturity: f64 },
    /// `1{tau_D ^ tau_U >= T}`.
    Survival { maturity: f64 },
    /// `tau_D ^ horizon`, for drawdown-only targets.
    MeanTauDD,
    /// Stop time capped at the horizon, for targets with a threshold.
    MeanTermination,
    /// Protection leg of a defaultable contract: `e^{-r t}` at the drawdown or
    /// the default, whichever stopped the path, if before the maturity.
    DefaultTruncL { maturity: Option<f64> },
    /// `int_0^{stop ^ T} e^{-rt} dt`, the value of a unit premium stream.
    Annuity { maturity: Option<f64> },
    /// Buyer's value of a vanilla contract at premium `p`.
    VanillaValue { p: f64, alpha: f64 },
    /// Buyer's value of a cancellable contract under the target's threshold rule.
    PolicyValue { p: f64, fee: f64, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths_used: usize,
    pub truncation_note: Option<String>,
}

impl Estimate {
    /// `mean -/+ 3 std_error`.
    pub fn interval(&self) -> (f64, f64) {
        (self.mean - 3.0 * self.std_error, self.mean + 3.0 * self.std_error)
    }

    /// Distance of `x` from the mean in standard errors.
    pub fn z_score(&self, x: f64) -> f64 {
        let d = x - self.mean;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.z_score(x).abs() <= 3.0
    }
}

fn annuity(s: f64, r: f64) -> f64 {
    if r == 0.0 {
        s
    } else {
        -(-r * s).exp_m1() / r
    }
}

fn disc(t: f64, r: f64) -> f64 {
    if t.is_finite() {
        (-r * t).exp()
    } else {
        0.0
    }
}

fn check_functional(f: &Functional, stats: &PathStats) -> Result<()> {
    let target = &stats.target;
    let horizon = stats.config.horizon;
    let needs = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{f:?} needs {what}")))
        }
    };
    match *f {
        Functional::TruncL { maturity } | Functional::TruncR { maturity } | Functional::Survival { maturity } => {
            needs(maturity >= 0.0 && maturity <= horizon, "0 <= maturity <= horizon")
        }
        Functional::DefaultTruncL { maturity: Some(t) } | Functional::Annuity { maturity: Some(t) } => {
            needs(t >= 0.0 && t <= horizon, "0 <= maturity <= horizon")
        }
        Functional::MeanTauDD => needs(
            !target.stop_on_drawup && target.theta.is_none() && target.lambda == 0.0,
            "a drawdown-only target",
        ),
        Functional::MeanTermination | Functional::LaplaceMin | Functional::PolicyValue { .. } => {
            needs(target.theta.is_some(), "a threshold target")
        }
        _ => Ok(()),
    }
}

fn payoff(f: &Functional, rec: &PathRecord, horizon: f64, r: f64) -> f64 {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    match *f {
        Functional::LaplaceDD => disc(rec.tau_d, r),
        Functional::LaplaceDU => disc(rec.tau_u, r),
        Functional::LaplaceMin => disc(rec.tau_theta, r),
        Functional::DDFirstIndicator => ind(rec.tau_d.is_finite()),
        Functional::DUFirstIndicator => ind(rec.tau_u.is_finite()),
        Functional::NeitherBeforeHorizon => ind(!rec.tau_d.is_finite() && !rec.tau_u.is_finite()),
        Functional::TruncL { maturity } => ind(rec.tau_d <= maturity) * disc(rec.tau_d, r),
        Functional::TruncR { maturity } => ind(rec.tau_u <= maturity) * disc(rec.tau_u, r),
        Functional::Survival { maturity } => ind(rec.tau_d.min(rec.tau_u).min(horizon) >= maturity),
        Functional::MeanTauDD => rec.tau_d.min(horizon),
        Functional::MeanTermination => rec.stop(horizon),
        Functional::DefaultTruncL { maturity } => {
            let t = rec.tau_d.min(rec.zeta);
            ind(t <= maturity.unwrap_or(f64::INFINITY)) * disc(t, r)
        }
        Functional::Annuity { maturity } => annuity(rec.stop(horizon).min(maturity.unwrap_or(f64::INFINITY)), r),
        Functional::VanillaValue { p, alpha } => alpha * disc(rec.tau_d, r) - p * annuity(rec.stop(horizon), r),
        Functional::PolicyValue { p, fee, alpha } => {
            alpha * disc(rec.tau_d, r) - fee * disc(rec.tau_theta, r) - p * annuity(rec.stop(horizon), r)
        }
    }
}

fn truncation_note(stats: &PathStats, r: f64) -> Option<String> {
    let n = stats.unresolved();
    if n == 0 {
        return None;
    }
    let h = stats.config.horizon;
    let total = stats.records.len();
    Some(format!(
        "{n} of {total} paths unresolved at horizon {h:.4}; truncation bias per unit payoff <= {n}/{total} * e^(-r*horizon) = {:.3e}",
        n as f64 / total as f64 * (-r * h).exp()
    ))
}

fn sample_moments(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().collect::<KahanSum>().value() / n as f64;
    let ss = values.map(|v| (v - mean) * (v - mean)).collect::<KahanSum>().value();
    let var = if n > 1 { ss / (n - 1) as f64 } else { 0.0 };
    (mean, (var / n as f64).sqrt())
}

fn require_paths(stats: &PathStats) -> Result<usize> {
    let n = stats.records.len();
    if n < MIN_PATHS {
        return Err(Error::InsufficientPaths {
            paths: n,
            required: MIN_PATHS,
        });
    }
    Ok(n)
}

/// Sample mean of `functional` with standard error `sample std / sqrt(paths)`.
pub fn estimate(functional: Functional, stats: &PathStats, discount_rate: f64) -> Result<Estimate> {
    let n = require_paths(stats)?;
    check_functional(&functional, stats)?;
    let h = stats.config.horizon;
    let values = stats.records.iter().map(|rec| payoff(&functional, rec, h, discount_rate));
    let (mean, std_error) = sample_moments(values, n);
    Ok(Estimate {
        mean,
        std_error,
        paths_used: n,
        truncation_note: truncation_note(stats, discount_rate),
    })
}

/// Ratio of two sample means, with a delta-method standard error.
pub fn estimate_ratio(numerator: Functional, denominator: Functional, stats: &PathStats, discount_rate: f64) -> Result<Estimate> {
    let n = require_paths(stats)?;
    check_functional(&numerator, stats)?;
    check_functional(&denominator, stats)?;
    let h = stats.config.horizon;
    let pairs: Vec<(f64, f64)> = stats
        .records
        .iter()
        .map(|rec| (payoff(&numerator, rec, h, discount_rate), payoff(&denominator, rec, h, discount_rate)))
        .collect();
    let num = pairs.iter().map(|p| p.0).collect::<KahanSum>().value() / n as f64;
    let den = pairs.iter().map(|p| p.1).collect::<KahanSum>().value() / n as f64;
    if !(den.abs() > 0.0) {
        return Err(Error::DegenerateDenominator {
            what: "ratio estimate",
            value: den,
        });
    }
    let ratio = num / den;
    let (_, se) = sample_moments(pairs.iter().map(|&(a, b)| (a - ratio * b) / den), n);
    Ok(Estimate {
        mean: ratio,
        std_error: se,
        paths_used: n,
        truncation_note: truncation_note(stats, discount_rate),
    })
}

//! Moderate-size Monte Carlo checks at states the validation suite does not visit.

use dd_pricer_core::drawdown::XiKernel;
use dd_pricer_core::joint::{self, SeriesConfig};
use dd_pricer_core::mc::{self, Estimate, Functional, SimConfig, SimTarget};
use dd_pricer_core::model::Diffusion;
use dd_pricer_core::premium::{self, DefaultDrift};
use dd_pricer_core::{ContractSpec, DrawdownState, MarketParams};

fn cfg(seed: u64) -> SimConfig {
    SimConfig {
        paths: 20_000,
        dt: 1e-3,
        seed,
        ..SimConfig::default()
    }
}

fn run(target: &SimTarget, maturity: Option<f64>, seed: u64) -> mc::PathStats {
    let c = cfg(seed).with_horizon(mc::suggested_horizon(target, maturity).unwrap());
    mc::simulate_stats(target, &c).unwrap()
}

fn assert_within(name: &str, closed: f64, est: &Estimate) {
    assert!(
        est.contains(closed),
        "{name}: closed {closed} vs mc {} +/- {} (z = {:.2})",
        est.mean,
        est.std_error,
        est.z_score(closed)
    );
}

#[test]
fn joint_transforms_off_the_diagonal() {
    let d = Diffusion::new(-0.025, 0.3);
    let state = DrawdownState::new(0.2, 0.05, 0.5).unwrap();
    let stats = run(&SimTarget::joint(state, d).unwrap(), None, 1);
    let r = 0.02;
    assert_within("L", joint::perpetual_l(0.2, 0.05, r, d, 0.5).unwrap(), &mc::estimate(Functional::LaplaceDD, &stats, r).unwrap());
    assert_within("R", joint::perpetual_r(0.2, 0.05, r, d, 0.5).unwrap(), &mc::estimate(Functional::LaplaceDU, &stats, r).unwrap());
    assert_within(
        "P(dd first)",
        joint::prob_dd_first(0.2, 0.05, d, 0.5).unwrap(),
        &mc::estimate(Functional::DDFirstIndicator, &stats, 0.0).unwrap(),
    );
}

#[test]
fn finite_transforms_with_positive_drift() {
    let d = Diffusion::new(0.08, 0.25);
    let (y, z, k, t, r) = (0.05, 0.3, 0.5, 1.0, 0.03);
    let sc = SeriesConfig::default();
    let state = DrawdownState::new(y, z, k).unwrap();
    let stats = run(&SimTarget::joint(state, d).unwrap(), Some(t), 2);
    assert_within(
        "L^T",
        joint::truncated_laplace_l(y, z, Some(t), r, d, k, &sc).unwrap(),
        &mc::estimate(Functional::TruncL { maturity: t }, &stats, r).unwrap(),
    );
    assert_within(
        "R^T",
        joint::truncated_laplace_r(y, z, Some(t), r, d, k, &sc).unwrap(),
        &mc::estimate(Functional::TruncR { maturity: t }, &stats, r).unwrap(),
    );
    assert_within(
        "survival",
        joint::survival_prob(y, z, t, d, k, &sc).unwrap(),
        &mc::estimate(Functional::Survival { maturity: t }, &stats, r).unwrap(),
    );
}

#[test]
fn origin_state_drawdown_first_probability() {
    let d = Diffusion::new(-0.025, 0.3);
    let state = DrawdownState::new(0.0, 0.0, 0.5).unwrap();
    let stats = run(&SimTarget::joint(state, d).unwrap(), Some(1.0), 3);
    let est = mc::estimate(Functional::TruncL { maturity: 1.0 }, &stats, 0.0).unwrap();
    let closed = joint::dd_first_prob_origin(1.0, d, 0.5, &SeriesConfig::default()).unwrap();
    assert_within("Q00(1)", closed, &est);
}

#[test]
fn defaultable_premiums_under_both_drifts() {
    let m = MarketParams::new(0.02, 0.3).unwrap();
    let one = ContractSpec::new(1.0);
    let state = DrawdownState::new(0.1, 0.1, 0.5).unwrap();
    let lambda = 0.3;
    for (seed, drift) in [(4, DefaultDrift::Unshifted), (5, DefaultDrift::Compensated)] {
        let target = SimTarget::joint(state, drift.diffusion(&m, lambda)).unwrap().with_default(lambda);
        let stats = run(&target, Some(2.0), seed);
        let perpetual = premium::fair_premium_default_perpetual(&state, lambda, drift, &m, &one).unwrap().premium;
        let est = mc::estimate_ratio(
            Functional::DefaultTruncL { maturity: None },
            Functional::Annuity { maturity: None },
            &stats,
            0.02,
        )
        .unwrap();
        assert_within(&format!("perpetual {drift:?}"), perpetual, &est);

        let finite = premium::fair_premium_default_finite(&state, 2.0, lambda, drift, &m, &one, &SeriesConfig::default())
            .unwrap()
            .premium;
        let est = mc::estimate_ratio(
            Functional::DefaultTruncL { maturity: Some(2.0) },
            Functional::Annuity { maturity: Some(2.0) },
            &stats,
            0.02,
        )
        .unwrap();
        assert_within(&format!("T=2 {drift:?}"), finite, &est);
    }
}

#[test]
fn bridge_correction_removes_most_grid_bias() {
    let d = Diffusion::new(-0.025, 0.3);
    let closed = XiKernel::new(d, 0.02, 0.3).xi(0.1).unwrap();
    let target = SimTarget::drawdown(0.1, 0.3, d).unwrap();
    let horizon = mc::suggested_horizon(&target, None).unwrap();
    let est = |bridge: bool| {
        let c = SimConfig {
            bridge_correction: bridge,
            ..cfg(6).with_horizon(horizon)
        };
        mc::estimate(Functional::LaplaceDD, &mc::simulate_stats(&target, &c).unwrap(), 0.02).unwrap()
    };
    let (on, off) = (est(true), est(false));
    assert_within("xi with bridge", closed, &on);
    // A coarse grid sees the drawdown late, so the discount factor is too small.
    assert!(off.mean < on.mean);
    assert!((off.mean - closed).abs() > (on.mean - closed).abs());
}

//! Time integrals of the joint-law series against the closed forms.

use dd_pricer_core::joint::{self, SeriesConfig};
use dd_pricer_core::model::Diffusion;
use dd_pricer_core::premium;
use dd_pricer_core::DrawdownState;

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss-Legendre over the break points `edges`.
fn integrate(f: &mut dyn FnMut(f64) -> f64, edges: &[f64]) -> f64 {
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, wt) in GL_X.iter().zip(GL_W) {
            total += wt * half * (f(mid - half * x) + f(mid + half * x));
        }
    }
    total
}

/// Fine panels near zero, where the density switches on, then uniform ones.
fn edges(t_max: f64) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=40).map(|i| 0.5 * (i as f64 / 40.0).powi(2)).collect();
    let n = (t_max / 0.05).ceil() as usize;
    e.extend((1..=n).map(|i| 0.5 + (t_max - 0.5) * i as f64 / n as f64));
    e
}

fn base_diffusion() -> Diffusion {
    Diffusion::new(-0.025, 0.3)
}

#[test]
fn density_integrates_to_drawdown_first_probability() {
    let cfg = SeriesConfig::default();
    let k = 0.5;
    for (d, y, z) in [
        (base_diffusion(), 0.1, 0.1),
        (base_diffusion(), 0.2, 0.05),
        (Diffusion::new(0.08, 0.25), 0.05, 0.3),
        (Diffusion::new(0.0, 0.3), 0.1, 0.0),
    ] {
        let mut dens = |t: f64| {
            if t < cfg.t_floor {
                0.0
            } else {
                joint::dd_first_density(y, z, t, d, k, &cfg).unwrap()
            }
        };
        let grid = edges(40.0);
        let prob = integrate(&mut dens, &grid);
        let closed = joint::prob_dd_first(y, z, d, k).unwrap();
        assert!((prob - closed).abs() < 1e-6, "({y}, {z}, mu={}): {prob} vs {closed}", d.drift);

        let rho = 0.02;
        let mut disc = |t: f64| (-rho * t).exp() * dens(t);
        let l = integrate(&mut disc, &grid);
        let closed_l = joint::perpetual_l(y, z, rho, d, k).unwrap();
        assert!((l - closed_l).abs() < 1e-6, "L({y}, {z}): {l} vs {closed_l}");
    }
}

#[test]
fn stopped_discount_two_ways() {
    // 1 - E[e^{-r (tau ^ T)}] = r int_0^T e^{-rt} Q(tau > t) dt
    let cfg = SeriesConfig::default();
    let d = base_diffusion();
    for (y, z, t, r) in [(0.1, 0.1, 2.0, 0.02), (0.2, 0.05, 1.0, 0.05), (0.0, 0.3, 3.0, 0.02)] {
        let state = DrawdownState::new(y, z, 0.5).unwrap();
        let direct = premium::stopped_discount_complement(&state, t, r, d, &cfg).unwrap();
        let n = 200;
        let grid: Vec<f64> = (0..=n).map(|i| t * i as f64 / n as f64).collect();
        let mut f = |s: f64| r * (-r * s).exp() * joint::survival_prob(y, z, s, d, 0.5, &cfg).unwrap();
        let quad = integrate(&mut f, &grid);
        assert!((direct - quad).abs() < 1e-8, "({y}, {z}, T={t}): {direct} vs {quad}");
    }
}

#[test]
fn survival_is_decreasing_and_matches_the_transform_at_zero_rate() {
    let cfg = SeriesConfig::default();
    let d = base_diffusion();
    let (y, z, k) = (0.1, 0.1, 0.5);
    let mut prev = 1.0;
    for i in 1..=30 {
        let t = 0.2 * i as f64;
        let s = joint::survival_prob(y, z, t, d, k, &cfg).unwrap();
        assert!(s < prev, "t = {t}");
        // At zero discount, L^T + R^T + S(T) = 1.
        let l = joint::truncated_laplace_l(y, z, Some(t), 0.0, d, k, &cfg).unwrap();
        let r = joint::truncated_laplace_r(y, z, Some(t), 0.0, d, k, &cfg).unwrap();
        assert!((l + r + s - 1.0).abs() < 1e-10, "t = {t}");
        prev = s;
    }
}

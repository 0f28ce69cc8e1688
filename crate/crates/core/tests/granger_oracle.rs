//! Granger F test against a brute-force normal-equations and quadrature oracle.

mod common;

use std::time::Instant;

use common::oracle::granger_brute_force;
use leadlag_core::granger::granger_test;
use leadlag_core::ts::StationarySignal;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Small fixtures: `T` in 17..=30, lag 1 or 2, half with a planted lag-1 effect.
fn fixtures() -> Vec<(Vec<f64>, Vec<f64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..20)
        .map(|i| {
            let t = 17 + (i * 7) % 14;
            let lag = 1 + i % 2;
            let x = noise(&mut rng, t);
            let mut y = noise(&mut rng, t);
            if i % 4 < 2 {
                for s in 1..t {
                    y[s] += 0.6 * x[s - 1];
                }
            }
            (x, y, lag)
        })
        .collect()
}

#[test]
fn matches_brute_force_oracle() {
    let start = Instant::now();
    for (i, (x, y, lag)) in fixtures().into_iter().enumerate() {
        let got = granger_test(
            &StationarySignal::from_values("x", x.clone()),
            &StationarySignal::from_values("y", y.clone()),
            lag,
        )
        .unwrap();
        let (f, p) = granger_brute_force(&x, &y, lag);
        let f_tol = 1e-8 * f.abs().max(1.0);
        assert!((got.f_statistic - f.max(0.0)).abs() < f_tol, "fixture {i}: F {} vs {f}", got.f_statistic);
        assert!((got.p_value - p).abs() < 1e-8, "fixture {i}: p {} vs {p}", got.p_value);
        assert_eq!(got.n_obs, x.len() - lag);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn white_noise_rejection_rate_is_nominal() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let trials = 500;
    let rejections = (0..trials)
        .filter(|_| {
            let x = StationarySignal::from_values("x", noise(&mut rng, 100));
            let y = StationarySignal::from_values("y", noise(&mut rng, 100));
            granger_test(&x, &y, 1).unwrap().p_value < 0.05
        })
        .count();
    let rate = rejections as f64 / trials as f64;
    assert!((0.03..=0.08).contains(&rate), "rejection rate {rate}");
}

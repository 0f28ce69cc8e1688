//! ADF decisions on seeded random walks and AR(1) series.

use leadlag_core::stationarity::adf_test;
use leadlag_core::ts::StationarySignal;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn ar1(seed: u64, n: usize, phi: f64) -> StationarySignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::with_capacity(n);
    let mut level = 0.0;
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        level = phi * level + e;
        v.push(level);
    }
    StationarySignal::from_values("s", v)
}

#[test]
fn random_walks_are_flagged_nonstationary() {
    let flagged = (0..100).filter(|&s| !adf_test(&ar1(s, 500, 1.0), None).unwrap().is_stationary).count();
    assert!(flagged >= 90, "{flagged}/100");
}

#[test]
fn weak_ar1_is_flagged_stationary() {
    let flagged = (0..100)
        .filter(|&s| adf_test(&ar1(1000 + s, 500, 0.2), None).unwrap().is_stationary)
        .count();
    assert!(flagged >= 90, "{flagged}/100");
}

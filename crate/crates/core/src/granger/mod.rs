//! Bivariate Granger causality and pairwise screening of a market universe.
//!
//! For a candidate leader `x` and follower `y`, both stationary, the test
//! compares
//!
//! ```text
//! unrestricted: y_t = a0 + sum_k a_k y_{t-k} + sum_k b_k x_{t-k} + e_t
//! restricted:   y_t = a0 + sum_k a_k y_{t-k}                     + e_t
//! ```
//!
//! on the same `T - lag` rows, with `F = ((SSR_r - SSR_u) / lag) / (SSR_u / (T - 3 lag - 1))`.
//!
//! The co-movement sign attached to a result is the sign of the Pearson
//! correlation between `x_{t-k}` and `y_t`, taking the `k <= lag` where that
//! correlation is largest in magnitude. On differenced signals the
//! contemporaneous correlation of a lagged link is zero in expectation, so the
//! lag-aligned pairing is the one that carries the direction of the response.

mod ftest;
mod ols;

use std::borrow::Cow;
use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ftest::f_tail;
pub use ols::{ols_fit, Matrix, OlsFit};

use crate::error::{Error, Result};
use crate::ts::{self, ComovementSign, StationarySignal};

/// Default lag sweep.
pub const DEFAULT_LAGS: [usize; 5] = [1, 2, 3, 4, 5];

/// Default minimum number of date-aligned observations for a pair to be tested.
pub const DEFAULT_MIN_OVERLAP: usize = 30;

/// Effective observations beyond the `2 * lag` slope parameters.
const MIN_EXTRA_OBS: usize = 11;

/// Outcome of one directed Granger test `leader -> follower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub leader_id: String,
    pub follower_id: String,
    pub lag: usize,
    pub f_statistic: f64,
    pub p_value: f64,
    pub sign: ComovementSign,
    /// Effective regression rows `T - lag`.
    pub n_obs: usize,
}

/// Directed candidates, strongest evidence first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidates {
    pub window_id: Option<usize>,
    pub candidates: Vec<GrangerResult>,
}

impl RankedCandidates {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Tests whether lags of `x` help predict `y` beyond `y`'s own lags.
///
/// Both signals must already be date-aligned (equal length).
pub fn granger_test(x: &StationarySignal, y: &StationarySignal, lag: usize) -> Result<GrangerResult> {
    granger_test_values(&x.market_id, &x.values, &y.market_id, &y.values, lag)
}

pub(crate) fn granger_test_values(
    x_id: &str,
    x: &[f64],
    y_id: &str,
    y: &[f64],
    lag: usize,
) -> Result<GrangerResult> {
    if lag == 0 {
        return Err(Error::InvalidParameter("lag must be >= 1".into()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let t = x.len();
    let needed_eff = 2 * lag + MIN_EXTRA_OBS;
    if t < lag + needed_eff {
        return Err(Error::InsufficientData {
            needed: lag + needed_eff,
            got: t,
        });
    }
    if ts::is_constant(x) {
        return Err(Error::DegenerateSeries(x_id.to_string()));
    }
    if ts::is_constant(y) {
        return Err(Error::DegenerateSeries(y_id.to_string()));
    }

    let n_eff = t - lag;
    let mut unrestricted = Matrix::zeros(n_eff, 2 * lag + 1);
    let mut restricted = Matrix::zeros(n_eff, lag + 1);
    let mut target = Vec::with_capacity(n_eff);
    for (row, i) in (lag..t).enumerate() {
        unrestricted.set(row, 0, 1.0);
        restricted.set(row, 0, 1.0);
        for k in 1..=lag {
            unrestricted.set(row, k, y[i - k]);
            restricted.set(row, k, y[i - k]);
            unrestricted.set(row, lag + k, x[i - k]);
        }
        target.push(y[i]);
    }
    let fit_u = ols_fit(&unrestricted, &target)?;
    let fit_r = ols_fit(&restricted, &target)?;

    let df_num = lag;
    let df_den = n_eff - 2 * lag - 1;
    // Nested models: SSR_u <= SSR_r up to rounding.
    let gain = (fit_r.ssr - fit_u.ssr).max(0.0);
    let f_statistic = if fit_u.ssr > 0.0 {
        (gain / df_num as f64) / (fit_u.ssr / df_den as f64)
    } else if gain > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p_value = f_tail(f_statistic, df_num, df_den)?;
    let sign = lagged_comovement_sign(x_id, x, y_id, y, lag)?;

    Ok(GrangerResult {
        leader_id: x_id.to_string(),
        follower_id: y_id.to_string(),
        lag,
        f_statistic,
        p_value,
        sign,
        n_obs: n_eff,
    })
}

/// Pearson sign of `(x_{t-k}, y_t)` at the `k` in `1..=max_lag` with the
/// largest absolute correlation.
fn lagged_comovement_sign(x_id: &str, x: &[f64], y_id: &str, y: &[f64], max_lag: usize) -> Result<ComovementSign> {
    let t = x.len();
    let mut best: Option<f64> = None;
    for k in 1..=max_lag {
        if let Some(r) = ts::pearson(&x[..t - k], &y[k..]) {
            if best.map_or(true, |b| r.abs() > b.abs()) {
                best = Some(r);
            }
        }
    }
    match best {
        Some(r) => Ok(ComovementSign::of(r)),
        None => ts::comovement_sign_values(x_id, x, y_id, y),
    }
}

/// Within one unordered pair: smaller p wins, then smaller leader id, then smaller lag.
fn direction_order(a: &GrangerResult, b: &GrangerResult) -> Ordering {
    a.p_value
        .total_cmp(&b.p_value)
        .then_with(|| a.leader_id.cmp(&b.leader_id))
        .then_with(|| a.lag.cmp(&b.lag))
}

/// Ranking across pairs: ascending p, descending F, then `(leader, follower)`.
pub fn ranking_order(a: &GrangerResult, b: &GrangerResult) -> Ordering {
    a.p_value
        .total_cmp(&b.p_value)
        .then_with(|| b.f_statistic.total_cmp(&a.f_statistic))
        .then_with(|| a.leader_id.cmp(&b.leader_id))
        .then_with(|| a.follower_id.cmp(&b.follower_id))
}

/// Runs both directions at every lag and keeps the strongest single result.
///
/// The pair is first brought to a common differencing order and inner-joined
/// on dates.
pub fn best_direction(a: &StationarySignal, b: &StationarySignal, lags: &[usize]) -> Result<GrangerResult> {
    let (a, b) = common_order(a, b)?;
    let (_, va, vb) = ts::align(&a, &b);
    best_direction_values(&a.market_id, &va, &b.market_id, &vb, lags)
}

fn best_direction_values(a_id: &str, a: &[f64], b_id: &str, b: &[f64], lags: &[usize]) -> Result<GrangerResult> {
    let mut best: Option<GrangerResult> = None;
    let mut first_err: Option<Error> = None;
    for &lag in lags {
        for (x_id, x, y_id, y) in [(a_id, a, b_id, b), (b_id, b, a_id, a)] {
            match granger_test_values(x_id, x, y_id, y, lag) {
                Ok(r) => {
                    if best
                        .as_ref()
                        .map_or(true, |cur| direction_order(&r, cur) == Ordering::Less)
                    {
                        best = Some(r);
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
    }
    best.ok_or_else(|| Error::NoValidDirection {
        a: a_id.to_string(),
        b: b_id.to_string(),
        source: Box::new(first_err.unwrap_or_else(|| Error::InvalidParameter("empty lag set".into()))),
    })
}

/// Differences the lower-order signal of a pair until both share the same
/// integration order, so a level is never regressed on a difference.
pub fn common_order<'a>(
    a: &'a StationarySignal,
    b: &'a StationarySignal,
) -> Result<(Cow<'a, StationarySignal>, Cow<'a, StationarySignal>)> {
    match a.diff_order.cmp(&b.diff_order) {
        Ordering::Equal => Ok((Cow::Borrowed(a), Cow::Borrowed(b))),
        Ordering::Less => Ok((
            Cow::Owned(ts::difference(a, b.diff_order - a.diff_order)?),
            Cow::Borrowed(b),
        )),
        Ordering::Greater => Ok((
            Cow::Borrowed(a),
            Cow::Owned(ts::difference(b, a.diff_order - b.diff_order)?),
        )),
    }
}

/// Settings for [`screen_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenSettings {
    pub lags: Vec<usize>,
    pub k: usize,
    pub min_overlap: usize,
}

impl Default for ScreenSettings {
    fn default() -> Self {
        Self {
            lags: DEFAULT_LAGS.to_vec(),
            k: 100,
            min_overlap: DEFAULT_MIN_OVERLAP,
        }
    }
}

/// Screens every unordered pair of the universe and returns the top `k` directed pairs.
///
/// Each pair is brought to a common differencing order (see [`common_order`])
/// and inner-joined on dates. Pairs whose overlap is below `min_overlap`, or
/// where no direction could be tested, are left out. Pairs are evaluated in
/// parallel; the final order is fully determined by [`ranking_order`].
pub fn screen_pairs(universe: &[StationarySignal], settings: &ScreenSettings) -> Result<RankedCandidates> {
    if settings.lags.is_empty() || settings.lags.contains(&0) {
        return Err(Error::InvalidParameter("lag set must be non-empty positive integers".into()));
    }
    let mut markets: Vec<&StationarySignal> = universe.iter().filter(|s| !s.is_empty()).collect();
    markets.sort_by(|a, b| a.market_id.cmp(&b.market_id));
    markets.dedup_by(|a, b| a.market_id == b.market_id);
    if markets.len() < 2 {
        return Err(Error::InsufficientUniverse(markets.len()));
    }

    let pairs: Vec<(usize, usize)> = (0..markets.len())
        .flat_map(|i| (i + 1..markets.len()).map(move |j| (i, j)))
        .collect();
    let mut results: Vec<GrangerResult> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let (a, b) = match common_order(markets[i], markets[j]) {
                Ok(pair) => pair,
                Err(e) => {
                    tracing::debug!(a = %markets[i].market_id, b = %markets[j].market_id, error = %e, "pair skipped");
                    return None;
                }
            };
            let (a, b) = (a.as_ref(), b.as_ref());
            let (dates, va, vb) = ts::align(a, b);
            if dates.len() < settings.min_overlap {
                return None;
            }
            match best_direction_values(&a.market_id, &va, &b.market_id, &vb, &settings.lags) {
                Ok(r) => Some(r),
                Err(e) => {
                    tracing::debug!(a = %a.market_id, b = %b.market_id, error = %e, "pair skipped");
                    None
                }
            }
        })
        .collect();
    results.sort_by(ranking_order);
    results.truncate(settings.k);
    Ok(RankedCandidates {
        window_id: None,
        candidates: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn sig(id: &str, v: Vec<f64>) -> StationarySignal {
        StationarySignal::from_values(id, v)
    }

    #[test]
    fn planted_lag_one_is_detected() {
        let x = noise(1, 100);
        let e = noise(2, 100);
        let mut y = vec![0.0; 100];
        for t in 1..100 {
            y[t] = 0.9 * x[t - 1] + 0.1 * e[t];
        }
        let r = granger_test(&sig("x", x), &sig("y", y), 1).unwrap();
        assert!(r.p_value < 0.01);
        assert_eq!(r.leader_id, "x");
        assert_eq!(r.n_obs, 99);
    }

    #[test]
    fn degenerate_and_short_inputs() {
        let x = sig("x", noise(3, 50));
        let y = sig("y", vec![1.0; 50]);
        assert!(matches!(granger_test(&x, &y, 1), Err(Error::DegenerateSeries(id)) if id == "y"));
        let short = sig("s", noise(4, 13));
        let short2 = sig("t", noise(5, 13));
        assert!(matches!(
            granger_test(&short, &short2, 1),
            Err(Error::InsufficientData { needed: 14, got: 13 })
        ));
        assert!(granger_test(&sig("a", noise(6, 14)), &sig("b", noise(7, 14)), 1).is_ok());
    }

    #[test]
    fn f_statistic_non_negative_and_p_in_unit_interval() {
        for seed in 0..30 {
            let r = granger_test(&sig("a", noise(seed, 40)), &sig("b", noise(seed + 100, 40)), 2).unwrap();
            assert!(r.f_statistic >= 0.0);
            assert!((0.0..=1.0).contains(&r.p_value));
        }
    }

    #[test]
    fn exact_p_value_tie_prefers_smaller_leader_then_lag() {
        let mk = |leader: &str, follower: &str, lag: usize| GrangerResult {
            leader_id: leader.into(),
            follower_id: follower.into(),
            lag,
            f_statistic: 3.0,
            p_value: 0.01,
            sign: ComovementSign::Positive,
            n_obs: 50,
        };
        let mut rs = vec![mk("b", "a", 1), mk("a", "b", 3), mk("a", "b", 2)];
        rs.sort_by(direction_order);
        assert_eq!((rs[0].leader_id.as_str(), rs[0].lag), ("a", 2));
        assert_eq!((rs[1].leader_id.as_str(), rs[1].lag), ("a", 3));
    }

    #[test]
    fn best_direction_errors_when_nothing_testable() {
        let a = sig("a", vec![1.0; 40]);
        let b = sig("b", noise(1, 40));
        assert!(matches!(
            best_direction(&a, &b, &[1, 2]),
            Err(Error::NoValidDirection { .. })
        ));
    }

    #[test]
    fn screen_rejects_single_market_and_bad_lags() {
        let one = vec![sig("a", noise(1, 60))];
        assert!(matches!(
            screen_pairs(&one, &ScreenSettings::default()),
            Err(Error::InsufficientUniverse(1))
        ));
        let two = vec![sig("a", noise(1, 60)), sig("b", noise(2, 60))];
        let bad = ScreenSettings {
            lags: vec![],
            ..ScreenSettings::default()
        };
        assert!(screen_pairs(&two, &bad).is_err());
    }

    #[test]
    fn screen_returns_all_pairs_when_k_is_large() {
        let u: Vec<_> = (0..5).map(|i| sig(&format!("m{i}"), noise(i, 60))).collect();
        let settings = ScreenSettings {
            k: 1000,
            ..ScreenSettings::default()
        };
        let ranked = screen_pairs(&u, &settings).unwrap();
        assert_eq!(ranked.len(), 10);
        assert!(ranked
            .candidates
            .windows(2)
            .all(|w| ranking_order(&w[0], &w[1]) != Ordering::Greater));
    }

    #[test]
    fn short_overlap_pairs_are_skipped() {
        let a = sig("a", noise(1, 60));
        let mut b = sig("b", noise(2, 60));
        // Shift b's calendar so only 20 dates overlap.
        b.dates = a.dates[40..].iter().copied().chain(
            a.dates[59].iter_days().skip(1).take(40),
        ).collect();
        let ranked = screen_pairs(&[a.clone(), b], &ScreenSettings::default()).unwrap();
        assert!(ranked.is_empty());
    }
}

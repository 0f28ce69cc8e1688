//! Augmented Dickey-Fuller test (constant, no trend) and the differencing loop
//! that prepares each market's training slice for Granger analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granger::{ols_fit, Matrix};
use crate::ts::{self, StationarySignal};

/// Observations required on top of the lag order.
const MIN_BASE_OBS: usize = 15;

/// Default cap on differencing passes.
pub const DEFAULT_MAX_DIFFS: usize = 2;

/// MacKinnon (2010) response surface for the 5% critical value, constant-only
/// regression: `b0 + b1 / T + b2 / T^2 + b3 / T^3`.
const CRIT_5PCT_CONST: [f64; 4] = [-2.86154, -2.8903, -4.234, -40.040];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub critical_value_5pct: f64,
    pub lags_used: usize,
    /// Rows in the final regression.
    pub n_obs: usize,
    pub is_stationary: bool,
}

/// Finite-sample 5% critical value for a regression with `n_obs` rows.
pub fn critical_value_5pct(n_obs: usize) -> f64 {
    let t = n_obs as f64;
    let [b0, b1, b2, b3] = CRIT_5PCT_CONST;
    b0 + b1 / t + b2 / (t * t) + b3 / (t * t * t)
}

/// Schwert rule `floor(12 (T / 100)^{1/4})`.
pub fn schwert_max_lags(len: usize) -> usize {
    (12.0 * (len as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Regression of `dy_t` on `[1, y_{t-1}, dy_{t-1}, .., dy_{t-k}]` for rows
/// `t = start..len`, where `start >= k + 1`.
fn adf_design(y: &[f64], k: usize, start: usize) -> (Matrix, Vec<f64>) {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[i] = y[i+1] - y[i], so dy_t = dy[t-1].
    let rows = y.len() - start;
    let mut x = Matrix::zeros(rows, k + 2);
    let mut target = Vec::with_capacity(rows);
    for (r, t) in (start..y.len()).enumerate() {
        x.set(r, 0, 1.0);
        x.set(r, 1, y[t - 1]);
        for i in 1..=k {
            x.set(r, 1 + i, dy[t - 1 - i]);
        }
        target.push(dy[t - 1]);
    }
    (x, target)
}

/// ADF test with lag order chosen by AIC over `0..=max_lags`.
///
/// `max_lags = None` uses the Schwert rule, capped so the precondition
/// `len >= 15 + max_lags` holds. Candidate lag orders are compared on a common
/// sample; the chosen order is then refitted on all rows it admits.
pub fn adf_test(signal: &StationarySignal, max_lags: Option<usize>) -> Result<AdfResult> {
    let y = &signal.values;
    let n = y.len();
    if n < MIN_BASE_OBS {
        return Err(Error::InsufficientData {
            needed: MIN_BASE_OBS,
            got: n,
        });
    }
    let max_lags = match max_lags {
        Some(m) => {
            if n < MIN_BASE_OBS + m {
                return Err(Error::InsufficientData {
                    needed: MIN_BASE_OBS + m,
                    got: n,
                });
            }
            m
        }
        None => schwert_max_lags(n).min(n - MIN_BASE_OBS),
    };
    if ts::is_constant(y) {
        return Err(Error::DegenerateSeries(signal.market_id.clone()));
    }

    let common_start = max_lags + 1;
    let mut best: Option<(f64, usize)> = None;
    for k in 0..=max_lags {
        let (x, target) = adf_design(y, k, common_start);
        let fit = match ols_fit(&x, &target) {
            Ok(f) => f,
            Err(Error::SingularDesign) => continue,
            Err(e) => return Err(e),
        };
        let aic = fit.aic();
        if best.map_or(true, |(b, _)| aic < b) {
            best = Some((aic, k));
        }
    }
    let lags_used = best.map(|(_, k)| k).ok_or(Error::SingularDesign)?;

    let (x, target) = adf_design(y, lags_used, lags_used + 1);
    let fit = ols_fit(&x, &target)?;
    let se = fit.std_errors()[1];
    let gamma = fit.coefficients[1];
    let statistic = if se > 0.0 {
        gamma / se
    } else if gamma < 0.0 {
        // Perfect fit with mean reversion: no evidence of a unit root.
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let critical_value_5pct = critical_value_5pct(fit.n_obs);
    Ok(AdfResult {
        statistic,
        critical_value_5pct,
        lags_used,
        n_obs: fit.n_obs,
        is_stationary: statistic < critical_value_5pct,
    })
}

/// Differences until the ADF test rejects a unit root or `max_diffs` passes are used.
///
/// If the cap is reached first, the returned signal has `still_nonstationary` set.
pub fn make_stationary(
    signal: &StationarySignal,
    max_diffs: usize,
    adf_max_lags: Option<usize>,
) -> Result<StationarySignal> {
    let mut current = signal.clone();
    current.still_nonstationary = false;
    loop {
        if adf_test(&current, adf_max_lags)?.is_stationary {
            return Ok(current);
        }
        if current.diff_order - signal.diff_order >= max_diffs {
            current.still_nonstationary = true;
            return Ok(current);
        }
        current = ts::difference(&current, 1)?;
    }
}

//! Price series, log-odds signals and the small transforms applied to them.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default clip bound (percentage points) applied before the log-odds transform.
pub const DEFAULT_CLIP_EPSILON: f64 = 0.5;

/// Daily YES price history of one market, in percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    market_id: String,
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series, rejecting unsorted/duplicate dates and prices outside `[0, 100]`.
    pub fn new(market_id: impl Into<String>, dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        let market_id = market_id.into();
        let invalid = |reason: String| Error::InvalidSeries {
            market_id: market_id.clone(),
            reason,
        };
        if dates.len() != prices.len() {
            return Err(invalid(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(format!("dates not strictly increasing at {}", w[1])));
        }
        if let Some(p) = prices.iter().find(|p| !(0.0..=100.0).contains(*p)) {
            return Err(invalid(format!("price {p} outside [0, 100]")));
        }
        Ok(Self {
            market_id,
            dates,
            prices,
        })
    }

    pub fn market_id(&self) -> &str {
        &self.market_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Observations with `start <= date <= end`.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> PriceSeries {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        let hi = hi.max(lo);
        PriceSeries {
            market_id: self.market_id.clone(),
            dates: self.dates[lo..hi].to_vec(),
            prices: self.prices[lo..hi].to_vec(),
        }
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }
}

/// A log-odds signal, possibly differenced, ready for unit-root and Granger tests.
///
/// `dates[i]` is the date of `values[i]`; differencing drops leading dates so a
/// differenced value is stamped with the later of the two observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySignal {
    pub market_id: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub diff_order: usize,
    pub clip_epsilon: f64,
    /// Set by `make_stationary` when the difference cap was reached without the
    /// unit-root test rejecting.
    pub still_nonstationary: bool,
}

impl StationarySignal {
    /// Wraps raw values as an undifferenced signal on consecutive synthetic dates.
    /// Mostly useful for tests and fixtures that have no calendar.
    pub fn from_values(market_id: impl Into<String>, values: Vec<f64>) -> Self {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = start.iter_days().take(values.len()).collect();
        Self {
            market_id: market_id.into(),
            dates,
            values,
            diff_order: 0,
            clip_epsilon: DEFAULT_CLIP_EPSILON,
            still_nonstationary: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sign of the contemporaneous Pearson correlation between two signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum ComovementSign {
    Negative,
    Positive,
}

impl ComovementSign {
    pub fn value(self) -> i8 {
        match self {
            ComovementSign::Negative => -1,
            ComovementSign::Positive => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ComovementSign::Negative => ComovementSign::Positive,
            ComovementSign::Positive => ComovementSign::Negative,
        }
    }

    /// `+1` for non-negative inputs, `-1` otherwise.
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            ComovementSign::Negative
        } else {
            ComovementSign::Positive
        }
    }
}

impl From<ComovementSign> for i8 {
    fn from(s: ComovementSign) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for ComovementSign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(ComovementSign::Positive),
            -1 => Ok(ComovementSign::Negative),
            other => Err(format!("sign must be -1 or +1, got {other}")),
        }
    }
}

impl std::ops::Mul for ComovementSign {
    type Output = ComovementSign;

    fn mul(self, rhs: Self) -> Self {
        if self == rhs {
            ComovementSign::Positive
        } else {
            ComovementSign::Negative
        }
    }
}

impl fmt::Display for ComovementSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComovementSign::Negative => f.write_str("-1"),
            ComovementSign::Positive => f.write_str("+1"),
        }
    }
}

/// Log-odds of a percentage-point price after clamping to `[eps, 100 - eps]`.
pub fn log_odds_value(price: f64, clip_epsilon: f64) -> f64 {
    let p = price.clamp(clip_epsilon, 100.0 - clip_epsilon);
    (p / (100.0 - p)).ln()
}

/// Inverse of the log-odds transform, back to percentage points.
pub fn price_from_log_odds(l: f64) -> f64 {
    100.0 / (1.0 + (-l).exp())
}

pub fn log_odds(series: &PriceSeries, clip_epsilon: f64) -> Result<StationarySignal> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(clip_epsilon > 0.0 && clip_epsilon < 50.0) {
        return Err(Error::InvalidParameter(format!(
            "clip_epsilon must lie in (0, 50), got {clip_epsilon}"
        )));
    }
    Ok(StationarySignal {
        market_id: series.market_id.clone(),
        dates: series.dates.clone(),
        values: series
            .prices
            .iter()
            .map(|&p| log_odds_value(p, clip_epsilon))
            .collect(),
        diff_order: 0,
        clip_epsilon,
        still_nonstationary: false,
    })
}

pub fn difference(signal: &StationarySignal, passes: usize) -> Result<StationarySignal> {
    if signal.len() <= passes {
        return Err(Error::InsufficientData {
            needed: passes + 1,
            got: signal.len(),
        });
    }
    let mut values = signal.values.clone();
    for _ in 0..passes {
        values = values.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(StationarySignal {
        market_id: signal.market_id.clone(),
        dates: signal.dates[passes..].to_vec(),
        values,
        diff_order: signal.diff_order + passes,
        clip_epsilon: signal.clip_epsilon,
        still_nonstationary: signal.still_nonstationary,
    })
}

/// One-day relative price changes `(p_t - p_{t-1}) / p_{t-1}`, stamped with date `t`.
pub fn relative_change(series: &PriceSeries) -> Result<Vec<(NaiveDate, f64)>> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: series.len(),
        });
    }
    series
        .prices
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            if w[0] == 0.0 {
                Err(Error::DivisionByZero { index: i })
            } else {
                Ok((series.dates[i + 1], (w[1] - w[0]) / w[0]))
            }
        })
        .collect()
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx.sqrt() * syy.sqrt()))
    }
}

/// Co-movement sign of two equal-length value slices. Zero correlation maps to `+1`.
pub fn comovement_sign_values(
    x_id: &str,
    x: &[f64],
    y_id: &str,
    y: &[f64],
) -> Result<ComovementSign> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: x.len(),
        });
    }
    if is_constant(x) {
        return Err(Error::DegenerateSeries(x_id.to_string()));
    }
    if is_constant(y) {
        return Err(Error::DegenerateSeries(y_id.to_string()));
    }
    let r = pearson(x, y).ok_or_else(|| Error::DegenerateSeries(format!("{x_id}/{y_id}")))?;
    Ok(ComovementSign::of(r))
}

pub fn comovement_sign(x: &StationarySignal, y: &StationarySignal) -> Result<ComovementSign> {
    comovement_sign_values(&x.market_id, &x.values, &y.market_id, &y.values)
}

pub(crate) fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Inner join of two signals on their dates.
pub fn align(a: &StationarySignal, b: &StationarySignal) -> (Vec<NaiveDate>, Vec<f64>, Vec<f64>) {
    let (mut i, mut j) = (0, 0);
    let mut dates = Vec::new();
    let mut va = Vec::new();
    let mut vb = Vec::new();
    while i < a.dates.len() && j < b.dates.len() {
        match a.dates[i].cmp(&b.dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dates.push(a.dates[i]);
                va.push(a.values[i]);
                vb.push(b.values[j]);
                i += 1;
                j += 1;
            }
        }
    }
    (dates, va, vb)
}

/// Inner join of two price series on their dates, returning aligned copies.
pub fn align_prices(a: &PriceSeries, b: &PriceSeries) -> (PriceSeries, PriceSeries) {
    let (mut i, mut j) = (0, 0);
    let mut dates = Vec::new();
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    while i < a.dates.len() && j < b.dates.len() {
        match a.dates[i].cmp(&b.dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dates.push(a.dates[i]);
                pa.push(a.prices[i]);
                pb.push(b.prices[j]);
                i += 1;
                j += 1;
            }
        }
    }
    (
        PriceSeries {
            market_id: a.market_id.clone(),
            dates: dates.clone(),
            prices: pa,
        },
        PriceSeries {
            market_id: b.market_id.clone(),
            dates,
            prices: pb,
        },
    )
}

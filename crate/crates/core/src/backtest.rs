//! Signal-triggered trading protocol and PnL accounting.
//!
//! A leader move with `|r| > theta` on day `t` opens a position in the follower
//! at the close of the next aligned observation `t+1` with direction
//! `sign(r) * s`, and closes it `hold_days` observations later. Indexing is by
//! position in the leader/follower date join, never by calendar arithmetic.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semantic::MetadataMap;
use crate::ts::{self, ComovementSign, PriceSeries};

/// Where a portfolio entry's co-movement sign comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignSource {
    #[default]
    Statistical,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradeConfig {
    pub theta: f64,
    pub hold_days: usize,
    pub position_size: f64,
    pub sign_source: SignSource,
}

impl Default for TradeConfig {
    fn default() -> Self {
        Self {
            theta: 0.0,
            hold_days: 7,
            position_size: 100.0,
            sign_source: SignSource::Statistical,
        }
    }
}

impl TradeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be >= 0, got {}", self.theta)));
        }
        if self.hold_days < 1 {
            return Err(Error::InvalidParameter("hold_days must be >= 1".into()));
        }
        if !(self.position_size > 0.0) || !self.position_size.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "position_size must be > 0, got {}",
                self.position_size
            )));
        }
        Ok(())
    }
}

/// A leader move that cleared the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signal {
    pub date: NaiveDate,
    pub r: f64,
    pub sign: ComovementSign,
}

/// One directed pair to trade, with the co-movement sign used for direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioEntry {
    pub leader_id: String,
    pub follower_id: String,
    pub sign: ComovementSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub leader_id: String,
    pub follower_id: String,
    pub signal_date: NaiveDate,
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    pub direction: ComovementSign,
    pub entry_price: f64,
    pub exit_price: f64,
    pub leader_move_pt: f64,
    pub leader_move_rel: f64,
    pub pnl: f64,
    pub same_event: bool,
}

/// A triggered signal that could not be traded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedTrade {
    pub leader_id: String,
    pub follower_id: String,
    pub signal_date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TradeOutcome {
    Executed(TradeRecord),
    Skipped(SkippedTrade),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TradeLog {
    pub trades: Vec<TradeRecord>,
    pub skips: Vec<SkippedTrade>,
}

impl TradeLog {
    pub fn total_pnl(&self) -> f64 {
        self.trades.iter().map(|t| t.pnl).sum()
    }

    /// Appends another log and restores the canonical ordering.
    pub fn extend(&mut self, other: TradeLog) {
        self.trades.extend(other.trades);
        self.skips.extend(other.skips);
        self.sort();
    }

    fn sort(&mut self) {
        self.trades.sort_by(|a, b| {
            (a.signal_date, &a.leader_id, &a.follower_id).cmp(&(b.signal_date, &b.leader_id, &b.follower_id))
        });
        self.skips.sort_by(|a, b| {
            (a.signal_date, &a.leader_id, &a.follower_id).cmp(&(b.signal_date, &b.leader_id, &b.follower_id))
        });
    }
}

/// One signal per date whose relative change strictly exceeds `theta` in magnitude.
pub fn generate_signals(leader: &PriceSeries, theta: f64) -> Result<Vec<Signal>> {
    Ok(ts::relative_change(leader)?
        .into_iter()
        .filter(|(_, r)| r.abs() > theta)
        .map(|(date, r)| Signal {
            date,
            r,
            sign: ComovementSign::of(r),
        })
        .collect())
}

pub fn trade_direction(r_sign: ComovementSign, s: ComovementSign) -> ComovementSign {
    r_sign * s
}

/// Opens at the observation after `signal_date` and closes `hold_days`
/// observations later. `follower` must already be aligned with the leader.
pub fn execute_trade(
    pair: &PortfolioEntry,
    follower: &PriceSeries,
    signal_date: NaiveDate,
    direction: ComovementSign,
    config: &TradeConfig,
) -> TradeOutcome {
    let skip = |reason: &str| {
        TradeOutcome::Skipped(SkippedTrade {
            leader_id: pair.leader_id.clone(),
            follower_id: pair.follower_id.clone(),
            signal_date,
            reason: reason.to_string(),
        })
    };
    let Ok(t) = follower.dates().binary_search(&signal_date) else {
        return skip("signal date not in follower data");
    };
    let entry = t + 1;
    let exit = entry + config.hold_days;
    if entry >= follower.len() {
        return skip("entry beyond data");
    }
    if exit >= follower.len() {
        return skip("exit beyond data");
    }
    let (entry_price, exit_price) = (follower.prices()[entry], follower.prices()[exit]);
    TradeOutcome::Executed(TradeRecord {
        leader_id: pair.leader_id.clone(),
        follower_id: pair.follower_id.clone(),
        signal_date,
        entry_date: follower.dates()[entry],
        exit_date: follower.dates()[exit],
        direction,
        entry_price,
        exit_price,
        leader_move_pt: 0.0,
        leader_move_rel: 0.0,
        pnl: f64::from(direction.value()) * config.position_size * (exit_price - entry_price),
        same_event: false,
    })
}

fn backtest_pair(
    entry: &PortfolioEntry,
    leader: &PriceSeries,
    follower: &PriceSeries,
    same_event: bool,
    config: &TradeConfig,
) -> Result<TradeLog> {
    let (leader, follower) = ts::align_prices(leader, follower);
    let mut log = TradeLog::default();
    if leader.len() < 2 {
        return Ok(log);
    }
    let moves: HashMap<NaiveDate, f64> = leader
        .dates()
        .iter()
        .skip(1)
        .zip(leader.prices().windows(2))
        .map(|(d, w)| (*d, (w[1] - w[0]).abs()))
        .collect();
    for signal in generate_signals(&leader, config.theta)? {
        let d = trade_direction(signal.sign, entry.sign);
        match execute_trade(entry, &follower, signal.date, d, config) {
            TradeOutcome::Executed(mut rec) => {
                rec.leader_move_pt = moves[&signal.date];
                rec.leader_move_rel = signal.r.abs();
                rec.same_event = same_event;
                log.trades.push(rec);
            }
            TradeOutcome::Skipped(s) => log.skips.push(s),
        }
    }
    Ok(log)
}

/// Trades every portfolio pair over `[start, end]` and merges the logs in
/// `(signal_date, leader_id, follower_id)` order.
///
/// `same_event` is filled from `metadata` when given (shared `event_group`).
pub fn run_backtest(
    portfolio: &[PortfolioEntry],
    prices: &[PriceSeries],
    window: (NaiveDate, NaiveDate),
    config: &TradeConfig,
    metadata: Option<&MetadataMap>,
) -> Result<TradeLog> {
    config.validate()?;
    let by_id: BTreeMap<&str, &PriceSeries> = prices.iter().map(|p| (p.market_id(), p)).collect();
    let lookup = |id: &str| {
        by_id
            .get(id)
            .map(|p| p.slice(window.0, window.1))
            .ok_or_else(|| Error::UnknownMarket(id.to_string()))
    };
    let same_event = |e: &PortfolioEntry| -> Result<bool> {
        let Some(meta) = metadata else { return Ok(false) };
        let group = |id: &str| {
            meta.get(id)
                .map(|m| m.event_group.as_str())
                .ok_or_else(|| Error::UnknownMarket(id.to_string()))
        };
        Ok(group(&e.leader_id)? == group(&e.follower_id)?)
    };
    let logs = portfolio
        .par_iter()
        .map(|e| backtest_pair(e, &lookup(&e.leader_id)?, &lookup(&e.follower_id)?, same_event(e)?, config))
        .collect::<Result<Vec<_>>>()?;
    let mut out = TradeLog::default();
    for log in logs {
        out.trades.extend(log.trades);
        out.skips.extend(log.skips);
    }
    out.sort();
    Ok(out)
}

const CSV_HEADER: [&str; 14] = [
    "status",
    "leader_id",
    "follower_id",
    "signal_date",
    "entry_date",
    "exit_date",
    "direction",
    "entry_price",
    "exit_price",
    "leader_move_pt",
    "leader_move_rel",
    "pnl",
    "same_event",
    "skip_reason",
];

/// Writes trades then skips, one row each. Skip rows leave the trade columns empty.
pub fn write_trade_log_csv<W: Write>(log: &TradeLog, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for t in &log.trades {
        w.write_record([
            "executed".to_string(),
            t.leader_id.clone(),
            t.follower_id.clone(),
            t.signal_date.to_string(),
            t.entry_date.to_string(),
            t.exit_date.to_string(),
            t.direction.to_string(),
            t.entry_price.to_string(),
            t.exit_price.to_string(),
            t.leader_move_pt.to_string(),
            t.leader_move_rel.to_string(),
            t.pnl.to_string(),
            t.same_event.to_string(),
            String::new(),
        ])?;
    }
    for s in &log.skips {
        let mut row = vec![String::new(); CSV_HEADER.len()];
        row[0] = "skipped".into();
        row[1] = s.leader_id.clone();
        row[2] = s.follower_id.clone();
        row[3] = s.signal_date.to_string();
        row[13] = s.reason.clone();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trade_log_csv(log: &TradeLog, path: &Path) -> Result<()> {
    write_trade_log_csv(log, std::fs::File::create(path)?)
}

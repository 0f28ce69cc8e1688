//! Rolling-window evaluation: per-window screening on the training span,
//! portfolio selection, backtest on the following test span, and the metric
//! and breakdown tables built from the resulting trades.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::{run_backtest, PortfolioEntry, SignSource, SkippedTrade, TradeConfig, TradeLog, TradeRecord};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::granger::{screen_pairs, RankedCandidates};
use crate::semantic::{rerank, MetadataMap, PairKey, Scorer, ScoringFailure};
use crate::stationarity::make_stationary;
use crate::ts::{log_odds, PriceSeries, StationarySignal};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Statistical,
    Hybrid,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Statistical => "statistical",
            Mode::Hybrid => "hybrid",
        }
    }
}

/// One train/test split. Both spans are inclusive calendar-date ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_id: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
}

fn add_days(d: NaiveDate, n: u64) -> NaiveDate {
    d.checked_add_days(Days::new(n)).expect("date in range")
}

/// Windows anchored at `start` and advanced by `step_days`; a window is kept
/// only if its test span ends on or before `end`.
pub fn make_windows(
    start: NaiveDate,
    end: NaiveDate,
    train_days: u32,
    test_days: u32,
    step_days: u32,
) -> Result<Vec<WindowSpec>> {
    if train_days < 1 || test_days < 1 || step_days < 1 {
        return Err(Error::InvalidParameter("window day counts must be >= 1".into()));
    }
    let mut out = Vec::new();
    let mut train_start = start;
    loop {
        let train_end = add_days(train_start, u64::from(train_days) - 1);
        let test_start = add_days(train_end, 1);
        let test_end = add_days(test_start, u64::from(test_days) - 1);
        if test_end > end {
            break;
        }
        out.push(WindowSpec {
            window_id: out.len(),
            train_start,
            train_end,
            test_start,
            test_end,
        });
        train_start = add_days(train_start, u64::from(step_days));
    }
    if out.is_empty() {
        return Err(Error::NoWindows { start, end });
    }
    Ok(out)
}

/// First and last observation date across the universe.
pub fn data_range(universe: &[PriceSeries]) -> Option<(NaiveDate, NaiveDate)> {
    let start = universe.iter().filter_map(|s| s.first_date()).min()?;
    let end = universe.iter().filter_map(|s| s.last_date()).max()?;
    Some((start, end))
}

fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Markets with at least `min_obs` training observations whose training
/// prices have sample std above `min_std`.
pub fn filter_universe<'a>(
    universe: &'a [PriceSeries],
    train: (NaiveDate, NaiveDate),
    min_obs: usize,
    min_std: f64,
) -> Vec<&'a PriceSeries> {
    universe
        .iter()
        .filter(|s| {
            let slice = s.slice(train.0, train.1);
            slice.len() >= min_obs && sample_std(slice.prices()) > min_std
        })
        .collect()
}

/// Filters, stationarizes and screens the universe on `[train.0, train.1]`.
/// Markets whose transform fails are dropped from the screen.
pub fn screen_window(
    universe: &[PriceSeries],
    train: (NaiveDate, NaiveDate),
    window_id: Option<usize>,
    config: &RunConfig,
) -> Result<RankedCandidates> {
    let s = &config.screening;
    let signals: Vec<StationarySignal> = filter_universe(universe, train, s.min_obs, s.min_std)
        .par_iter()
        .filter_map(|series| {
            let slice = series.slice(train.0, train.1);
            let out = log_odds(&slice, s.clip_epsilon).and_then(|l| make_stationary(&l, s.max_diffs, s.adf_max_lags));
            match out {
                Ok(sig) => Some(sig),
                Err(e) => {
                    tracing::debug!(market = series.market_id(), error = %e, "market dropped from screen");
                    None
                }
            }
        })
        .collect();
    let mut ranked = screen_pairs(&signals, &s.screen_settings())?;
    ranked.window_id = window_id;
    Ok(ranked)
}

/// The traded portfolio for one window plus any scoring failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selection {
    pub entries: Vec<PortfolioEntry>,
    pub failures: Vec<ScoringFailure>,
}

/// Statistical mode keeps the first `m` candidates with their Granger signs.
/// Hybrid mode scores every candidate and re-ranks; the sign then follows
/// `trading.sign_source`.
pub fn select_portfolio(
    ranked: &RankedCandidates,
    mode: Mode,
    scorer: Option<&Scorer>,
    metadata: Option<&MetadataMap>,
    config: &RunConfig,
) -> Result<Selection> {
    let m = config.rerank.m;
    match mode {
        Mode::Statistical => Ok(Selection {
            entries: ranked
                .candidates
                .iter()
                .take(m)
                .map(|g| PortfolioEntry {
                    leader_id: g.leader_id.clone(),
                    follower_id: g.follower_id.clone(),
                    sign: g.sign,
                })
                .collect(),
            failures: Vec::new(),
        }),
        Mode::Hybrid => {
            let scorer = scorer.ok_or_else(|| Error::Config("hybrid mode needs a scorer".into()))?;
            let metadata = metadata.ok_or_else(|| Error::Config("hybrid mode needs market metadata".into()))?;
            let scored = scorer.score_candidates(ranked, metadata);
            let top = rerank(ranked, &scored.verdicts, m)?;
            let entries = top
                .candidates
                .iter()
                .map(|g| {
                    let sign = match config.trading.sign_source {
                        SignSource::Statistical => g.sign,
                        SignSource::Semantic => scored.verdicts[&PairKey::new(&g.leader_id, &g.follower_id)].expected_sign,
                    };
                    PortfolioEntry {
                        leader_id: g.leader_id.clone(),
                        follower_id: g.follower_id.clone(),
                        sign,
                    }
                })
                .collect();
            Ok(Selection {
                entries,
                failures: scored.failures,
            })
        }
    }
}

/// Trade-level aggregates. Averages are `None` when their denominator is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_trades: usize,
    pub wins: usize,
    pub losses: usize,
    pub win_rate: Option<f64>,
    pub avg_win: Option<f64>,
    pub avg_loss: Option<f64>,
    pub total_pnl: f64,
}

pub fn aggregate_metrics<'a>(trades: impl IntoIterator<Item = &'a TradeRecord>) -> Metrics {
    let (mut n, mut wins, mut losses) = (0usize, 0usize, 0usize);
    let (mut win_sum, mut loss_sum, mut total) = (0.0, 0.0, 0.0);
    for t in trades {
        n += 1;
        total += t.pnl;
        if t.pnl > 0.0 {
            wins += 1;
            win_sum += t.pnl;
        } else if t.pnl < 0.0 {
            losses += 1;
            loss_sum += t.pnl;
        }
    }
    let mean = |sum: f64, k: usize| (k > 0).then(|| sum / k as f64);
    Metrics {
        n_trades: n,
        wins,
        losses,
        win_rate: (wins + losses > 0).then(|| wins as f64 / (wins + losses) as f64),
        avg_win: mean(win_sum, wins),
        avg_loss: mean(loss_sum, losses),
        total_pnl: total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSplit {
    pub same: Metrics,
    pub different: Metrics,
}

/// Trades whose leader move (points) lies in `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeBucket {
    pub label: String,
    pub lower: f64,
    pub upper: Option<f64>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub hold_days: usize,
    pub metrics: Metrics,
    pub n_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdowns {
    /// `None` when no metadata was supplied.
    pub same_event: Option<EventSplit>,
    pub magnitude: Vec<MagnitudeBucket>,
}

fn bucket_label(lower: f64, upper: Option<f64>) -> String {
    match upper {
        Some(u) => format!("{lower}-{u} pt"),
        None => format!("{lower}+ pt"),
    }
}

/// Same/different-event split (from shared `event_group`) and leader-move
/// buckets `[0, e1), [e1, e2), ..., [en, inf)`.
pub fn breakdown_reports(trades: &[TradeRecord], metadata: Option<&MetadataMap>, edges: &[f64]) -> Result<Breakdowns> {
    let same_event = match metadata {
        None => None,
        Some(meta) => {
            let group = |id: &str| {
                meta.get(id)
                    .map(|m| m.event_group.as_str())
                    .ok_or_else(|| Error::UnknownMarket(id.to_string()))
            };
            let mut same = Vec::new();
            let mut different = Vec::new();
            for t in trades {
                if group(&t.leader_id)? == group(&t.follower_id)? {
                    same.push(t);
                } else {
                    different.push(t);
                }
            }
            Some(EventSplit {
                same: aggregate_metrics(same),
                different: aggregate_metrics(different),
            })
        }
    };
    let mut bounds: Vec<(f64, Option<f64>)> = Vec::with_capacity(edges.len() + 1);
    let mut lower = 0.0;
    for &e in edges {
        bounds.push((lower, Some(e)));
        lower = e;
    }
    bounds.push((lower, None));
    let magnitude = bounds
        .into_iter()
        .map(|(lo, hi)| MagnitudeBucket {
            label: bucket_label(lo, hi),
            lower: lo,
            upper: hi,
            metrics: aggregate_metrics(
                trades
                    .iter()
                    .filter(|t| t.leader_move_pt >= lo && hi.map_or(true, |h| t.leader_move_pt < h)),
            ),
        })
        .collect();
    Ok(Breakdowns { same_event, magnitude })
}

/// `1 - |hybrid| / |statistical|` for average losses.
pub fn loss_reduction(statistical_avg_loss: Option<f64>, hybrid_avg_loss: Option<f64>) -> Option<f64> {
    match (statistical_avg_loss, hybrid_avg_loss) {
        (Some(s), Some(h)) if s != 0.0 => Some(1.0 - h.abs() / s.abs()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    #[serde(flatten)]
    pub window: WindowSpec,
    pub n_markets: usize,
    pub n_candidates: usize,
    pub portfolio: Vec<PortfolioEntry>,
    pub metrics: Metrics,
    pub n_skipped: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScoringFailure {
    pub window_id: usize,
    #[serde(flatten)]
    pub failure: ScoringFailure,
}

/// Results of one mode. Contains nothing mode-specific, so two modes that
/// select the same portfolios serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub windows: Vec<WindowReport>,
    pub overall: Metrics,
    pub breakdowns: Breakdowns,
    pub hold_ablation: Vec<HorizonResult>,
    pub skips: Vec<SkippedTrade>,
    pub scoring_failures: Vec<WindowScoringFailure>,
}

/// Intermediate products of one window, as the standalone stages write them.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowArtifacts {
    pub window: WindowSpec,
    pub candidates: RankedCandidates,
    pub selection: Selection,
    pub log: TradeLog,
}

/// A mode report together with its full trade log and per-window artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRun {
    pub report: ModeReport,
    pub log: TradeLog,
    pub artifacts: Vec<WindowArtifacts>,
}

struct WindowOutcome {
    report: WindowReport,
    log: TradeLog,
    ablation: Vec<TradeLog>,
    candidates: RankedCandidates,
    failures: Vec<ScoringFailure>,
}

fn run_window(
    universe: &[PriceSeries],
    metadata: Option<&MetadataMap>,
    config: &RunConfig,
    mode: Mode,
    scorer: Option<&Scorer>,
    window: WindowSpec,
) -> WindowOutcome {
    let s = &config.screening;
    let train = (window.train_start, window.train_end);
    let test = (window.test_start, window.test_end);
    let n_markets = filter_universe(universe, train, s.min_obs, s.min_std).len();
    let mut outcome = WindowOutcome {
        report: WindowReport {
            window,
            n_markets,
            n_candidates: 0,
            portfolio: Vec::new(),
            metrics: aggregate_metrics([]),
            n_skipped: 0,
            error: None,
        },
        log: TradeLog::default(),
        ablation: vec![TradeLog::default(); config.report.hold_horizons.len()],
        candidates: RankedCandidates {
            window_id: Some(window.window_id),
            candidates: Vec::new(),
        },
        failures: Vec::new(),
    };
    let result = (|| -> Result<()> {
        let ranked = screen_window(universe, train, Some(window.window_id), config)?;
        outcome.report.n_candidates = ranked.len();
        let selection = select_portfolio(&ranked, mode, scorer, metadata, config)?;
        outcome.candidates = ranked;
        outcome.failures = selection.failures;
        outcome.report.portfolio = selection.entries;
        let portfolio = &outcome.report.portfolio;
        outcome.log = run_backtest(portfolio, universe, test, &config.trading, metadata)?;
        outcome.ablation = config
            .report
            .hold_horizons
            .iter()
            .map(|&h| {
                let trading = TradeConfig {
                    hold_days: h,
                    ..config.trading.clone()
                };
                run_backtest(portfolio, universe, test, &trading, metadata)
            })
            .collect::<Result<_>>()?;
        Ok(())
    })();
    if let Err(e) = result {
        tracing::warn!(window = window.window_id, error = %e, "window failed");
        outcome.report.error = Some(e.to_string());
    }
    outcome.report.metrics = aggregate_metrics(&outcome.log.trades);
    outcome.report.n_skipped = outcome.log.skips.len();
    outcome
}

/// Runs every window in one mode and assembles its report. Window failures
/// are recorded in the report; only setup errors abort.
pub fn run_pipeline(
    universe: &[PriceSeries],
    metadata: Option<&MetadataMap>,
    config: &RunConfig,
    mode: Mode,
    scorer: Option<&Scorer>,
) -> Result<ModeRun> {
    config.validate()?;
    if mode == Mode::Hybrid && (scorer.is_none() || metadata.is_none()) {
        return Err(Error::Config("hybrid mode needs a scorer and market metadata".into()));
    }
    let (start, end) = data_range(universe).ok_or(Error::EmptyInput)?;
    let w = &config.windows;
    let mut windows = make_windows(start, end, w.train_days, w.test_days, w.step_days)?;
    if let Some(cutoff) = w.post_cutoff_date {
        windows.retain(|win| win.test_start > cutoff);
    }
    let outcomes: Vec<WindowOutcome> = windows
        .par_iter()
        .map(|&win| run_window(universe, metadata, config, mode, scorer, win))
        .collect();

    let mut log = TradeLog::default();
    let mut ablation = vec![TradeLog::default(); config.report.hold_horizons.len()];
    let mut scoring_failures = Vec::new();
    let mut window_reports = Vec::with_capacity(outcomes.len());
    let mut artifacts = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        artifacts.push(WindowArtifacts {
            window: o.report.window,
            candidates: o.candidates,
            selection: Selection {
                entries: o.report.portfolio.clone(),
                failures: o.failures.clone(),
            },
            log: o.log.clone(),
        });
        log.trades.extend(o.log.trades);
        log.skips.extend(o.log.skips);
        for (acc, l) in ablation.iter_mut().zip(o.ablation) {
            acc.trades.extend(l.trades);
            acc.skips.extend(l.skips);
        }
        scoring_failures.extend(o.failures.into_iter().map(|failure| WindowScoringFailure {
            window_id: o.report.window.window_id,
            failure,
        }));
        window_reports.push(o.report);
    }
    let breakdowns = breakdown_reports(&log.trades, metadata, &config.report.magnitude_edges)?;
    let hold_ablation = config
        .report
        .hold_horizons
        .iter()
        .zip(&ablation)
        .map(|(&h, l)| HorizonResult {
            hold_days: h,
            metrics: aggregate_metrics(&l.trades),
            n_skipped: l.skips.len(),
        })
        .collect();
    let report = ModeReport {
        windows: window_reports,
        overall: aggregate_metrics(&log.trades),
        breakdowns,
        hold_ablation,
        skips: log.skips.clone(),
        scoring_failures,
    };
    Ok(ModeRun { report, log, artifacts })
}

/// Single-mode report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReportFile {
    pub schema_version: u32,
    pub config: RunConfig,
    pub report: ModeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossComparison {
    pub statistical_avg_loss: Option<f64>,
    pub hybrid_avg_loss: Option<f64>,
    pub loss_reduction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLossRow {
    pub setting: String,
    pub statistical_trades: usize,
    pub hybrid_trades: usize,
    #[serde(flatten)]
    pub loss: LossComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeRow {
    pub label: String,
    pub statistical_trades: usize,
    pub statistical_win_rate: Option<f64>,
    pub hybrid_trades: usize,
    pub hybrid_win_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub hold_days: usize,
    pub statistical_win_rate: Option<f64>,
    pub hybrid_win_rate: Option<f64>,
    #[serde(flatten)]
    pub loss: LossComparison,
    pub statistical_skipped: usize,
    pub hybrid_skipped: usize,
}

/// Side-by-side tables for the two modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub overall: LossComparison,
    pub same_event: Option<Vec<EventLossRow>>,
    pub magnitude: Vec<MagnitudeRow>,
    pub hold_ablation: Vec<HorizonRow>,
}

fn loss_comparison(s: &Metrics, h: &Metrics) -> LossComparison {
    LossComparison {
        statistical_avg_loss: s.avg_loss,
        hybrid_avg_loss: h.avg_loss,
        loss_reduction: loss_reduction(s.avg_loss, h.avg_loss),
    }
}

pub fn compare_modes(statistical: &ModeReport, hybrid: &ModeReport) -> Comparison {
    let (sb, hb) = (&statistical.breakdowns, &hybrid.breakdowns);
    let same_event = match (&sb.same_event, &hb.same_event) {
        (Some(s), Some(h)) => Some(
            [("same", &s.same, &h.same), ("different", &s.different, &h.different)]
                .into_iter()
                .map(|(name, s, h)| EventLossRow {
                    setting: name.to_string(),
                    statistical_trades: s.n_trades,
                    hybrid_trades: h.n_trades,
                    loss: loss_comparison(s, h),
                })
                .collect(),
        ),
        _ => None,
    };
    let magnitude = sb
        .magnitude
        .iter()
        .zip(&hb.magnitude)
        .map(|(s, h)| MagnitudeRow {
            label: s.label.clone(),
            statistical_trades: s.metrics.n_trades,
            statistical_win_rate: s.metrics.win_rate,
            hybrid_trades: h.metrics.n_trades,
            hybrid_win_rate: h.metrics.win_rate,
        })
        .collect();
    let hold_ablation = statistical
        .hold_ablation
        .iter()
        .zip(&hybrid.hold_ablation)
        .map(|(s, h)| HorizonRow {
            hold_days: s.hold_days,
            statistical_win_rate: s.metrics.win_rate,
            hybrid_win_rate: h.metrics.win_rate,
            loss: loss_comparison(&s.metrics, &h.metrics),
            statistical_skipped: s.n_skipped,
            hybrid_skipped: h.n_skipped,
        })
        .collect();
    Comparison {
        overall: loss_comparison(&statistical.overall, &hybrid.overall),
        same_event,
        magnitude,
        hold_ablation,
    }
}

/// Both modes plus their comparison tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub statistical: ModeReport,
    pub hybrid: ModeReport,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub logs: BTreeMap<Mode, TradeLog>,
}

/// Runs both modes on the same data and configuration.
pub fn evaluate(
    universe: &[PriceSeries],
    metadata: &MetadataMap,
    config: &RunConfig,
    scorer: &Scorer,
) -> Result<Evaluation> {
    let stat = run_pipeline(universe, Some(metadata), config, Mode::Statistical, None)?;
    let hyb = run_pipeline(universe, Some(metadata), config, Mode::Hybrid, Some(scorer))?;
    let comparison = compare_modes(&stat.report, &hyb.report);
    Ok(Evaluation {
        report: EvaluationReport {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            statistical: stat.report,
            hybrid: hyb.report,
            comparison,
        },
        logs: [(Mode::Statistical, stat.log), (Mode::Hybrid, hyb.log)].into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ts::ComovementSign;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn day(n: u64) -> NaiveDate {
        add_days(d("2024-01-01"), n)
    }

    #[test]
    fn window_schedule() {
        let w = make_windows(day(0), day(89), 60, 30, 30).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].train_end, w[0].test_start, w[0].test_end), (day(59), day(60), day(89)));

        let w = make_windows(day(0), day(119), 60, 30, 30).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].train_start, day(30));
        assert_eq!(w[1].window_id, 1);
        assert!(w[0].test_end < w[1].test_start);

        assert!(matches!(make_windows(day(0), day(88), 60, 30, 30), Err(Error::NoWindows { .. })));
        assert!(make_windows(day(0), day(100), 0, 30, 30).is_err());
    }

    fn series(id: &str, prices: Vec<f64>) -> PriceSeries {
        let dates = (0..prices.len() as u64).map(day).collect();
        PriceSeries::new(id, dates, prices).unwrap()
    }

    #[test]
    fn activity_filter() {
        let active = series("a", (0..40).map(|i| 40.0 + (i % 5) as f64).collect());
        let flat = series("b", vec![50.0; 40]);
        let short = series("c", (0..10).map(|i| 40.0 + i as f64).collect());
        let u = [active, flat, short];
        let kept = filter_universe(&u, (day(0), day(39)), 30, 0.5);
        assert_eq!(kept.iter().map(|s| s.market_id()).collect::<Vec<_>>(), ["a"]);
    }

    fn trade(pnl: f64, move_pt: f64, leader: &str, follower: &str) -> TradeRecord {
        TradeRecord {
            leader_id: leader.into(),
            follower_id: follower.into(),
            signal_date: day(0),
            entry_date: day(1),
            exit_date: day(8),
            direction: ComovementSign::Positive,
            entry_price: 50.0,
            exit_price: 50.0 + pnl / 100.0,
            leader_move_pt: move_pt,
            leader_move_rel: move_pt / 50.0,
            pnl,
            same_event: false,
        }
    }

    #[test]
    fn metrics_definitions() {
        let m = aggregate_metrics(&[trade(700.0, 1.0, "a", "b"), trade(-300.0, 1.0, "a", "b")]);
        assert_eq!(m.win_rate, Some(0.5));
        assert_eq!((m.avg_win, m.avg_loss, m.total_pnl), (Some(700.0), Some(-300.0), 400.0));

        let m = aggregate_metrics(&[trade(100.0, 1.0, "a", "b"), trade(0.0, 1.0, "a", "b")]);
        assert_eq!((m.n_trades, m.win_rate, m.avg_loss), (2, Some(1.0), None));

        let m = aggregate_metrics([]);
        assert_eq!((m.n_trades, m.win_rate, m.avg_win, m.avg_loss, m.total_pnl), (0, None, None, None, 0.0));
    }

    #[test]
    fn breakdowns_partition_trades() {
        let meta: MetadataMap = [("a", "g1"), ("b", "g1"), ("c", "g2")]
            .into_iter()
            .map(|(id, g)| {
                (
                    id.to_string(),
                    crate::semantic::EventMetadata {
                        market_id: id.into(),
                        title: id.into(),
                        description: id.into(),
                        event_group: g.into(),
                    },
                )
            })
            .collect();
        let trades = [
            trade(100.0, 7.0, "a", "b"),
            trade(-50.0, 4.99, "a", "c"),
            trade(20.0, 10.0, "c", "b"),
            trade(-10.0, 0.0, "a", "b"),
        ];
        let b = breakdown_reports(&trades, Some(&meta), &[5.0, 10.0]).unwrap();
        let split = b.same_event.unwrap();
        assert_eq!((split.same.n_trades, split.different.n_trades), (2, 2));
        let labels: Vec<_> = b.magnitude.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, ["0-5 pt", "5-10 pt", "10+ pt"]);
        let counts: Vec<_> = b.magnitude.iter().map(|m| m.metrics.n_trades).collect();
        assert_eq!(counts, [2, 1, 1]);

        let mut partial = meta.clone();
        partial.remove("c");
        assert!(matches!(breakdown_reports(&trades, Some(&partial), &[5.0]), Err(Error::UnknownMarket(_))));
        assert!(breakdown_reports(&trades, None, &[]).unwrap().same_event.is_none());
    }

    #[test]
    fn loss_reduction_definition() {
        assert!((loss_reduction(Some(-500.0), Some(-300.0)).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(loss_reduction(None, Some(-1.0)), None);
        assert_eq!(loss_reduction(Some(0.0), Some(-1.0)), None);
    }
}

//! `leadlag`: simulate, screen, rerank, backtest, evaluate and report.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use leadlag_core::backtest::{run_backtest, save_trade_log_csv};
use leadlag_core::config::RunConfig;
use leadlag_core::evaluation::{
    aggregate_metrics, compare_modes, data_range, run_pipeline, screen_window, select_portfolio, EvaluationReport,
    Mode, ModeReportFile, ModeRun,
};
use leadlag_core::io::{
    load_metadata, load_prices, read_artifact, read_json, save_metadata, save_prices, write_json, CandidatesFile,
    PortfolioFile,
};
use leadlag_core::semantic::{MetadataMap, Scorer, ScorerMode};
use leadlag_core::synth::{planted_scenario, simulate, PlantedUniverseParams, Scenario};
use leadlag_core::ts::PriceSeries;
use leadlag_core::SCHEMA_VERSION;

#[derive(Parser, Debug)]
#[command(name = "leadlag", version, about = "Lead-lag discovery and evaluation for prediction-market time series")]
struct Cli {
    /// TOML run configuration. Flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for screening, backtests and scoring.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Candidates kept by the screen.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Portfolio size.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Comma-separated lag sweep, e.g. 1,2,3.
    #[arg(long, global = true, value_delimiter = ',')]
    lags: Option<Vec<usize>>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    hold_days: Option<usize>,
    #[arg(long, global = true, value_enum)]
    scorer: Option<ScorerArg>,
    /// Scorer response cache (live and replay modes).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Stub scoring table (JSON array of {leader_id, follower_id, strength, expected_sign}).
    #[arg(long, global = true)]
    stub_table: Option<PathBuf>,
    /// Keep only test windows starting after this date.
    #[arg(long, global = true)]
    post_cutoff: Option<NaiveDate>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScorerArg {
    Stub,
    Live,
    Replay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Statistical,
    Hybrid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Statistical => Mode::Statistical,
            ModeArg::Hybrid => Mode::Hybrid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EvalModeArg {
    Both,
    Statistical,
    Hybrid,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic universe (prices CSV + metadata JSON).
    Simulate(SimulateArgs),
    /// Screen all market pairs and write the top-K directed candidates.
    Screen(ScreenArgs),
    /// Select the top-M portfolio from a candidate file.
    Rerank(RerankArgs),
    /// Trade a portfolio over a date range and write the trade log.
    Backtest(BacktestArgs),
    /// Run the rolling-window pipeline and write report + trade logs.
    Evaluate(EvaluateArgs),
    /// Print the tables of an evaluation report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario JSON. Without it a planted universe is generated from the flags below.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    markets: usize,
    #[arg(long, default_value_t = 10)]
    links: usize,
    #[arg(long, default_value_t = 360)]
    days: usize,
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    /// Planted lags, cycled over the links.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    planted_lags: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    vol: f64,
    #[arg(long)]
    shared_event_groups: bool,
    #[arg(long)]
    start_date: Option<NaiveDate>,
    /// Output prices CSV.
    #[arg(long)]
    prices: PathBuf,
    /// Output metadata JSON.
    #[arg(long)]
    metadata: PathBuf,
    /// Also write the resolved scenario (including planted links).
    #[arg(long)]
    scenario_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    /// First training date (default: first observation).
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Last training date (default: last observation).
    #[arg(long)]
    end: Option<NaiveDate>,
    #[arg(long)]
    window_id: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RerankArgs {
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Hybrid)]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BacktestArgs {
    #[arg(long)]
    portfolio: PathBuf,
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Fills the same_event column.
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long)]
    end: Option<NaiveDate>,
    /// Output trade-log CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional metrics JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EvalModeArg::Both)]
    mode: EvalModeArg,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Report JSON written by `evaluate`.
    #[arg(long)]
    report: PathBuf,
}

/// Errors that should exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let is_usage = e.chain().any(|c| {
                c.is::<UsageError>() || matches!(c.downcast_ref::<leadlag_core::Error>(), Some(leadlag_core::Error::Config(_)))
            });
            ExitCode::from(if is_usage { 2 } else { 1 })
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut config, &cli.overrides);
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
        config.rerank.scorer.concurrency_limit = config.rerank.scorer.concurrency_limit.min(jobs);
    }
    config.validate()?;

    match cli.command {
        Command::Simulate(a) => cmd_simulate(&config, a),
        Command::Screen(a) => cmd_screen(&config, a),
        Command::Rerank(a) => cmd_rerank(&config, a),
        Command::Backtest(a) => cmd_backtest(&config, a),
        Command::Evaluate(a) => cmd_evaluate(&config, a),
        Command::Report(a) => cmd_report(a),
    }
}

fn apply_overrides(c: &mut RunConfig, o: &Overrides) {
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.k {
        c.screening.k = v;
    }
    if let Some(v) = o.m {
        c.rerank.m = v;
    }
    if let Some(v) = &o.lags {
        c.screening.lags = v.clone();
    }
    if let Some(v) = o.theta {
        c.trading.theta = v;
    }
    if let Some(v) = o.hold_days {
        c.trading.hold_days = v;
    }
    if let Some(v) = o.scorer {
        c.rerank.scorer.mode = match v {
            ScorerArg::Stub => ScorerMode::Stub,
            ScorerArg::Live => ScorerMode::Live,
            ScorerArg::Replay => ScorerMode::Replay,
        };
    }
    if let Some(v) = &o.cache {
        c.rerank.scorer.cache_path = Some(v.clone());
    }
    if let Some(v) = &o.stub_table {
        c.rerank.scorer.stub_table = Some(v.clone());
    }
    if let Some(v) = o.post_cutoff {
        c.windows.post_cutoff_date = Some(v);
    }
}

fn require_path(flag: Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| from_config.clone())
        .ok_or_else(|| usage(format!("--{name} is required (or set io.{name} in the config)")))
}

fn prices_at(path: &Path) -> Result<Vec<PriceSeries>> {
    load_prices(path).with_context(|| format!("loading prices from {}", path.display()))
}

fn metadata_at(path: &Path) -> Result<MetadataMap> {
    load_metadata(path).with_context(|| format!("loading metadata from {}", path.display()))
}

fn date_range(prices: &[PriceSeries], start: Option<NaiveDate>, end: Option<NaiveDate>) -> Result<(NaiveDate, NaiveDate)> {
    let (first, last) = data_range(prices).ok_or_else(|| anyhow!("price file has no observations"))?;
    let range = (start.unwrap_or(first), end.unwrap_or(last));
    if range.0 > range.1 {
        return Err(usage(format!("--start {} is after --end {}", range.0, range.1)));
    }
    Ok(range)
}

fn build_scorer(config: &RunConfig) -> Result<Scorer> {
    let scorer = Scorer::new(config.rerank.scorer.clone(), config.seed)?;
    if config.rerank.scorer.mode == ScorerMode::Live && std::env::var(leadlag_core::semantic::API_KEY_ENV).is_err() {
        tracing::warn!("{} is not set; requests are sent without credentials", leadlag_core::semantic::API_KEY_ENV);
    }
    Ok(scorer)
}

fn report_scorer(scorer: &Scorer) {
    eprintln!(
        "scorer ({:?}): {} pairs scored, {} HTTP requests sent",
        scorer.config().mode,
        scorer.calls(),
        scorer.requests_sent()
    );
}

fn cmd_simulate(config: &RunConfig, a: SimulateArgs) -> Result<()> {
    let scenario: Scenario = match &a.scenario {
        Some(p) => read_json(p).with_context(|| format!("reading scenario {}", p.display()))?,
        None => {
            let mut params = PlantedUniverseParams {
                n_markets: a.markets,
                n_links: a.links,
                days: a.days,
                beta: a.beta,
                lags: a.planted_lags.clone(),
                vol: a.vol,
                shared_event_groups: a.shared_event_groups,
                ..PlantedUniverseParams::default()
            };
            if let Some(d) = a.start_date {
                params.start_date = d;
            }
            planted_scenario(config.seed, &params).map_err(|e| usage(e.to_string()))?
        }
    };
    let universe = simulate(&scenario)?;
    save_prices(&universe.prices, &a.prices)?;
    let metadata: MetadataMap = universe
        .metadata
        .iter()
        .map(|m| (m.market_id.clone(), m.clone()))
        .collect();
    save_metadata(&metadata, &a.metadata)?;
    if let Some(p) = &a.scenario_out {
        write_json(p, &scenario)?;
    }
    println!(
        "simulated {} markets x {} days with {} planted links",
        universe.prices.len(),
        scenario.days,
        scenario.links.len()
    );
    Ok(())
}

fn cmd_screen(config: &RunConfig, a: ScreenArgs) -> Result<()> {
    let prices = prices_at(&require_path(a.prices, &config.io.prices, "prices")?)?;
    let range = date_range(&prices, a.start, a.end)?;
    let ranked = screen_window(&prices, range, a.window_id, config)?;
    println!("{} candidates from {} to {}", ranked.len(), range.0, range.1);
    write_json(&a.out, &CandidatesFile::from(ranked))?;
    Ok(())
}

fn cmd_rerank(config: &RunConfig, a: RerankArgs) -> Result<()> {
    let candidates: CandidatesFile = read_artifact(&a.candidates)?;
    let window_id = candidates.window_id;
    let ranked = candidates.into();
    let mode = Mode::from(a.mode);
    let (metadata, scorer) = match mode {
        Mode::Statistical => (None, None),
        Mode::Hybrid => {
            let md = metadata_at(&require_path(a.metadata, &config.io.metadata, "metadata")?)?;
            (Some(md), Some(build_scorer(config)?))
        }
    };
    let selection = select_portfolio(&ranked, mode, scorer.as_ref(), metadata.as_ref(), config)?;
    if let Some(s) = &scorer {
        report_scorer(s);
    }
    println!(
        "{} portfolio: {} pairs, {} scoring failures",
        mode.as_str(),
        selection.entries.len(),
        selection.failures.len()
    );
    write_json(
        &a.out,
        &PortfolioFile {
            schema_version: SCHEMA_VERSION,
            window_id,
            entries: selection.entries,
            scoring_failures: selection.failures,
        },
    )?;
    Ok(())
}

fn cmd_backtest(config: &RunConfig, a: BacktestArgs) -> Result<()> {
    let portfolio: PortfolioFile = read_artifact(&a.portfolio)?;
    let prices = prices_at(&require_path(a.prices, &config.io.prices, "prices")?)?;
    let metadata = match a.metadata.or_else(|| config.io.metadata.clone()) {
        Some(p) => Some(metadata_at(&p)?),
        None => None,
    };
    let range = date_range(&prices, a.start, a.end)?;
    let log = run_backtest(&portfolio.entries, &prices, range, &config.trading, metadata.as_ref())?;
    save_trade_log_csv(&log, &a.out)?;
    let metrics = aggregate_metrics(&log.trades);
    println!(
        "{} trades, {} skipped, total pnl {:.2}",
        metrics.n_trades,
        log.skips.len(),
        metrics.total_pnl
    );
    if let Some(p) = &a.summary {
        write_json(p, &metrics)?;
    }
    Ok(())
}

fn write_mode_artifacts(dir: &Path, mode: Mode, run: &ModeRun) -> Result<()> {
    save_trade_log_csv(&run.log, &dir.join(format!("trades_{}.csv", mode.as_str())))?;
    for art in &run.artifacts {
        let wdir = dir.join("windows").join(format!("w{:03}", art.window.window_id));
        std::fs::create_dir_all(&wdir)?;
        write_json(&wdir.join("candidates.json"), &CandidatesFile::from(art.candidates.clone()))?;
        write_json(
            &wdir.join(format!("portfolio_{}.json", mode.as_str())),
            &PortfolioFile {
                schema_version: SCHEMA_VERSION,
                window_id: Some(art.window.window_id),
                entries: art.selection.entries.clone(),
                scoring_failures: art.selection.failures.clone(),
            },
        )?;
        save_trade_log_csv(&art.log, &wdir.join(format!("trades_{}.csv", mode.as_str())))?;
    }
    Ok(())
}

fn cmd_evaluate(config: &RunConfig, a: EvaluateArgs) -> Result<()> {
    let prices = prices_at(&require_path(a.prices, &config.io.prices, "prices")?)?;
    let out_dir = require_path(a.out_dir, &config.io.output_dir, "out-dir")?;
    std::fs::create_dir_all(&out_dir)?;
    let needs_hybrid = a.mode != EvalModeArg::Statistical;
    let metadata = match a.metadata.or_else(|| config.io.metadata.clone()) {
        Some(p) => Some(metadata_at(&p)?),
        None if needs_hybrid => bail!(usage("hybrid evaluation needs --metadata")),
        None => None,
    };
    let scorer = if needs_hybrid { Some(build_scorer(config)?) } else { None };

    let run = |mode: Mode| -> Result<ModeRun> {
        let r = run_pipeline(&prices, metadata.as_ref(), config, mode, scorer.as_ref())?;
        write_mode_artifacts(&out_dir, mode, &r)?;
        Ok(r)
    };
    let single = |mode: Mode, r: ModeRun| -> Result<PathBuf> {
        let path = out_dir.join(format!("report_{}.json", mode.as_str()));
        write_json(
            &path,
            &ModeReportFile {
                schema_version: SCHEMA_VERSION,
                config: config.clone(),
                report: r.report,
            },
        )?;
        Ok(path)
    };
    let path = match a.mode {
        EvalModeArg::Statistical => single(Mode::Statistical, run(Mode::Statistical)?)?,
        EvalModeArg::Hybrid => single(Mode::Hybrid, run(Mode::Hybrid)?)?,
        EvalModeArg::Both => {
            let stat = run(Mode::Statistical)?;
            let hyb = run(Mode::Hybrid)?;
            let report = EvaluationReport {
                schema_version: SCHEMA_VERSION,
                config: config.clone(),
                comparison: compare_modes(&stat.report, &hyb.report),
                statistical: stat.report,
                hybrid: hyb.report,
            };
            let path = out_dir.join("report.json");
            write_json(&path, &report)?;
            path
        }
    };
    if let Some(s) = &scorer {
        report_scorer(s);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let value: serde_json::Value = read_json(&a.report)?;
    let text = if value.get("comparison").is_some() {
        let r: EvaluationReport = serde_json::from_value(value).context("parsing evaluation report")?;
        report::render_evaluation(&r)
    } else {
        let r: ModeReportFile = serde_json::from_value(value).context("parsing mode report")?;
        report::render_mode(&r.report)
    };
    print!("{text}");
    Ok(())
}

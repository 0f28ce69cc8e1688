//! Run configuration, loaded from TOML. Every field has a default.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::backtest::TradeConfig;
use crate::error::{Error, Result};
use crate::granger::{ScreenSettings, DEFAULT_LAGS, DEFAULT_MIN_OVERLAP};
use crate::semantic::ScorerConfig;
use crate::stationarity::DEFAULT_MAX_DIFFS;
use crate::ts::DEFAULT_CLIP_EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningConfig {
    pub k: usize,
    pub lags: Vec<usize>,
    pub min_overlap: usize,
    /// Activity filter: observations required inside the training window.
    pub min_obs: usize,
    /// Activity filter: sample std of prices (points) must exceed this.
    pub min_std: f64,
    pub clip_epsilon: f64,
    pub max_diffs: usize,
    /// `None` uses the Schwert rule.
    pub adf_max_lags: Option<usize>,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            k: 100,
            lags: DEFAULT_LAGS.to_vec(),
            min_overlap: DEFAULT_MIN_OVERLAP,
            min_obs: 30,
            min_std: 0.5,
            clip_epsilon: DEFAULT_CLIP_EPSILON,
            max_diffs: DEFAULT_MAX_DIFFS,
            adf_max_lags: None,
        }
    }
}

impl ScreeningConfig {
    pub fn screen_settings(&self) -> ScreenSettings {
        ScreenSettings {
            lags: self.lags.clone(),
            k: self.k,
            min_overlap: self.min_overlap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankConfig {
    pub m: usize,
    pub scorer: ScorerConfig,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            m: 20,
            scorer: ScorerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub train_days: u32,
    pub test_days: u32,
    pub step_days: u32,
    /// Keep only windows whose test span starts after this date.
    pub post_cutoff_date: Option<NaiveDate>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            train_days: 60,
            test_days: 30,
            step_days: 30,
            post_cutoff_date: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub hold_horizons: Vec<usize>,
    /// Interior edges of the leader-move buckets, in points.
    pub magnitude_edges: Vec<f64>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            hold_horizons: vec![1, 3, 5, 7, 10, 14, 21],
            magnitude_edges: vec![5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub prices: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub screening: ScreeningConfig,
    pub rerank: RerankConfig,
    pub trading: TradeConfig,
    pub windows: WindowConfig,
    pub report: ReportConfig,
    pub io: IoConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.screening;
        if s.k < 1 {
            return Err(Error::Config("screening.k must be >= 1".into()));
        }
        if self.rerank.m < 1 || self.rerank.m > s.k {
            return Err(Error::Config(format!(
                "rerank.m must lie in 1..={}, got {}",
                s.k, self.rerank.m
            )));
        }
        if s.lags.is_empty() || s.lags.contains(&0) {
            return Err(Error::Config("screening.lags must be non-empty positive integers".into()));
        }
        if !(s.min_std >= 0.0) {
            return Err(Error::Config("screening.min_std must be >= 0".into()));
        }
        if !(s.clip_epsilon > 0.0 && s.clip_epsilon < 50.0) {
            return Err(Error::Config("screening.clip_epsilon must lie in (0, 50)".into()));
        }
        let w = &self.windows;
        if w.train_days < 1 || w.test_days < 1 || w.step_days < 1 {
            return Err(Error::Config("window day counts must be >= 1".into()));
        }
        if self.report.hold_horizons.contains(&0) {
            return Err(Error::Config("report.hold_horizons must be >= 1".into()));
        }
        let edges = &self.report.magnitude_edges;
        if edges.iter().any(|e| !(*e > 0.0) || !e.is_finite()) || edges.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Config("report.magnitude_edges must be positive and increasing".into()));
        }
        self.trading.validate().map_err(|e| Error::Config(format!("trading: {e}")))?;
        self.rerank.scorer.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c.screening.k, 100);
        assert_eq!(c.rerank.m, 20);
        assert_eq!(c.screening.lags, [1, 2, 3, 4, 5]);
        assert_eq!((c.windows.train_days, c.windows.test_days, c.windows.step_days), (60, 30, 30));
        assert_eq!(c.trading.theta, 0.0);
        assert_eq!(c.trading.hold_days, 7);
        assert_eq!(c.trading.position_size, 100.0);
    }

    #[test]
    fn nested_tables_parse() {
        let c = RunConfig::from_toml_str(
            r#"
            seed = 9
            [screening]
            k = 30
            lags = [2, 3]
            [rerank]
            m = 10
            [rerank.scorer]
            mode = "stub"
            stub_default = "weak"
            [trading]
            hold_days = 5
            sign_source = "semantic"
            [windows]
            post_cutoff_date = "2024-05-31"
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.screening.screen_settings().lags, [2, 3]);
        assert_eq!(c.rerank.m, 10);
        assert_eq!(c.trading.hold_days, 5);
        assert_eq!(c.windows.post_cutoff_date, NaiveDate::from_ymd_opt(2024, 5, 31));
        let again = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            "[rerank]\nm = 101",
            "[screening]\nlags = []",
            "[screening]\nlags = [0, 1]",
            "[windows]\ntest_days = 0",
            "[trading]\nhold_days = 0",
            "[rerank.scorer]\ntemperature = 0.5",
            "[report]\nmagnitude_edges = [10.0, 5.0]",
            "unknown_key = 1",
        ] {
            assert!(matches!(RunConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }
}

//! Synthetic prediction markets with planted lead-lag links.
//!
//! Markets are random walks in log-odds space. A follower's daily log-odds
//! innovation is `sign * beta * (leader innovation lag days earlier) + noise`,
//! so the Granger-on-log-odds pipeline is the correctly specified detector for
//! the planted structure.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semantic::EventMetadata;
use crate::ts::{log_odds_value, price_from_log_odds, ComovementSign, PriceSeries};

/// Log-odds are clamped to this magnitude when mapped back to prices so that
/// every generated price stays strictly inside `(0, 100)`.
const MAX_LOG_ODDS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedLink {
    pub leader_id: String,
    pub follower_id: String,
    pub lag: usize,
    pub beta: f64,
    pub sign: ComovementSign,
    pub noise_std: f64,
}

impl PlantedLink {
    fn validate(&self) -> Result<()> {
        if self.lag == 0 {
            return Err(Error::InvalidParameter("planted lag must be >= 1".into()));
        }
        if self.leader_id == self.follower_id {
            return Err(Error::InvalidParameter(format!(
                "link {} -> {} has identical endpoints",
                self.leader_id, self.follower_id
            )));
        }
        if !(self.noise_std > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "link {} -> {}: noise_std must be > 0 and beta finite",
                self.leader_id, self.follower_id
            )));
        }
        Ok(())
    }
}

/// One market in a scenario. For link followers `vol` is unused; their
/// innovations come from the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub id: String,
    pub base_prob: f64,
    pub vol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_group: Option<String>,
}

/// Serializable description of a synthetic universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub days: usize,
    pub markets: Vec<MarketSpec>,
    #[serde(default)]
    pub links: Vec<PlantedLink>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedUniverse {
    pub prices: Vec<PriceSeries>,
    pub metadata: Vec<EventMetadata>,
}

fn calendar(start: NaiveDate, days: usize) -> Vec<NaiveDate> {
    start.iter_days().take(days).collect()
}

fn to_price(l: f64) -> f64 {
    price_from_log_odds(l.clamp(-MAX_LOG_ODDS, MAX_LOG_ODDS))
}

fn check_base_prob(base_prob: f64) -> Result<()> {
    if base_prob > 0.0 && base_prob < 100.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "base_prob must lie in (0, 100), got {base_prob}"
        )))
    }
}

/// Log-odds random walk started at `base_prob`, one observation per calendar day.
pub fn generate_market(
    market_id: &str,
    seed: u64,
    start: NaiveDate,
    days: usize,
    base_prob: f64,
    vol: f64,
) -> Result<PriceSeries> {
    if days < 2 {
        return Err(Error::InvalidParameter(format!("days must be >= 2, got {days}")));
    }
    check_base_prob(base_prob)?;
    if !(vol >= 0.0) || !vol.is_finite() {
        return Err(Error::InvalidParameter(format!("vol must be >= 0, got {vol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = log_odds_value(base_prob, f64::MIN_POSITIVE);
    let mut prices = Vec::with_capacity(days);
    prices.push(to_price(l));
    for _ in 1..days {
        let e: f64 = StandardNormal.sample(&mut rng);
        l += vol * e;
        prices.push(to_price(l));
    }
    PriceSeries::new(market_id, calendar(start, days), prices)
}

/// Builds a follower whose log-odds innovations track the leader's innovations
/// `link.lag` days earlier. The follower starts at `base_prob`.
pub fn plant_leadlag(leader: &PriceSeries, link: &PlantedLink, seed: u64, base_prob: f64) -> Result<PriceSeries> {
    link.validate()?;
    check_base_prob(base_prob)?;
    if leader.len() <= link.lag + 2 {
        return Err(Error::InsufficientData {
            needed: link.lag + 3,
            got: leader.len(),
        });
    }
    let leader_l: Vec<f64> = leader
        .prices()
        .iter()
        .map(|&p| log_odds_value(p, f64::MIN_POSITIVE))
        .collect();
    let innovations: Vec<f64> = leader_l.windows(2).map(|w| w[1] - w[0]).collect();
    let coupling = f64::from(link.sign.value()) * link.beta;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = log_odds_value(base_prob, f64::MIN_POSITIVE);
    let mut prices = Vec::with_capacity(leader.len());
    prices.push(to_price(l));
    for t in 1..leader.len() {
        let e: f64 = StandardNormal.sample(&mut rng);
        // innovations[t - 1] is the leader's move into day t.
        let driven = if t > link.lag {
            coupling * innovations[t - 1 - link.lag]
        } else {
            0.0
        };
        l += driven + link.noise_std * e;
        prices.push(to_price(l));
    }
    PriceSeries::new(link.follower_id.clone(), leader.dates().to_vec(), prices)
}

/// Independent per-market seed derived from the scenario seed.
fn market_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((index as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

/// Generates every market in the scenario. Links are applied in list order, so
/// a leader may itself be an earlier link's follower.
pub fn simulate(scenario: &Scenario) -> Result<SimulatedUniverse> {
    let index_of = |id: &str| scenario.markets.iter().position(|m| m.id == id);
    for (i, m) in scenario.markets.iter().enumerate() {
        if scenario.markets[..i].iter().any(|o| o.id == m.id) {
            return Err(Error::InvalidParameter(format!("duplicate market id {}", m.id)));
        }
    }
    let mut followers = std::collections::HashSet::new();
    for link in &scenario.links {
        link.validate()?;
        for id in [&link.leader_id, &link.follower_id] {
            if index_of(id).is_none() {
                return Err(Error::UnknownMarket(id.clone()));
            }
        }
        if !followers.insert(link.follower_id.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "market {} is the follower of more than one link",
                link.follower_id
            )));
        }
    }

    let mut series: Vec<Option<PriceSeries>> = vec![None; scenario.markets.len()];
    for (i, m) in scenario.markets.iter().enumerate() {
        if !followers.contains(m.id.as_str()) {
            series[i] = Some(generate_market(
                &m.id,
                market_seed(scenario.seed, i),
                scenario.start_date,
                scenario.days,
                m.base_prob,
                m.vol,
            )?);
        }
    }
    for link in &scenario.links {
        let li = index_of(&link.leader_id).expect("validated");
        let fi = index_of(&link.follower_id).expect("validated");
        let leader = series[li].as_ref().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "leader {} is generated by a later link",
                link.leader_id
            ))
        })?;
        let follower = plant_leadlag(
            leader,
            link,
            market_seed(scenario.seed, fi),
            scenario.markets[fi].base_prob,
        )?;
        series[fi] = Some(follower);
    }

    let prices = series.into_iter().map(|s| s.expect("all markets generated")).collect();
    let metadata = scenario
        .markets
        .iter()
        .map(|m| EventMetadata {
            market_id: m.id.clone(),
            title: m.title.clone().unwrap_or_else(|| format!("Synthetic event {}", m.id)),
            description: m.description.clone().unwrap_or_else(|| {
                format!("Resolves YES if synthetic event {} occurs.", m.id)
            }),
            event_group: m.event_group.clone().unwrap_or_else(|| m.id.clone()),
        })
        .collect();
    Ok(SimulatedUniverse { prices, metadata })
}

/// Parameters for [`planted_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedUniverseParams {
    pub n_markets: usize,
    pub n_links: usize,
    pub days: usize,
    pub beta: f64,
    /// Planted lags, cycled over the links.
    pub lags: Vec<usize>,
    /// Base-market log-odds volatility.
    pub vol: f64,
    /// Follower noise; `None` keeps follower volatility equal to `vol`.
    pub noise_std: Option<f64>,
    /// Uniform range the starting probabilities are drawn from.
    pub base_prob_range: (f64, f64),
    /// Put even-numbered links' endpoints in one event group.
    pub shared_event_groups: bool,
    pub start_date: NaiveDate,
}

impl Default for PlantedUniverseParams {
    fn default() -> Self {
        Self {
            n_markets: 40,
            n_links: 10,
            days: 60,
            beta: 0.8,
            lags: vec![1, 2],
            vol: 0.1,
            noise_std: None,
            base_prob_range: (30.0, 70.0),
            shared_event_groups: false,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
        }
    }
}

/// A universe of `m00..` markets where link `i` runs from market `2i` to
/// market `2i + 1`, with alternating signs. Remaining markets are independent.
pub fn planted_scenario(seed: u64, params: &PlantedUniverseParams) -> Result<Scenario> {
    if params.n_markets < 2 * params.n_links {
        return Err(Error::InvalidParameter(format!(
            "{} links need {} markets, got {}",
            params.n_links,
            2 * params.n_links,
            params.n_markets
        )));
    }
    if params.lags.is_empty() {
        return Err(Error::InvalidParameter("at least one planted lag is required".into()));
    }
    let width = params.n_markets.to_string().len().max(2);
    let id = |i: usize| format!("m{i:0width$}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let (lo, hi) = params.base_prob_range;
    let mut markets: Vec<MarketSpec> = (0..params.n_markets)
        .map(|i| MarketSpec {
            id: id(i),
            base_prob: rng.gen_range(lo..hi),
            vol: params.vol,
            title: None,
            description: None,
            event_group: None,
        })
        .collect();
    let noise_std = params
        .noise_std
        .unwrap_or_else(|| params.vol * (1.0 - params.beta * params.beta).max(0.01).sqrt());
    let links = (0..params.n_links)
        .map(|i| {
            if params.shared_event_groups && i % 2 == 0 {
                let group = format!("event-{}", id(2 * i));
                markets[2 * i].event_group = Some(group.clone());
                markets[2 * i + 1].event_group = Some(group);
            }
            PlantedLink {
                leader_id: id(2 * i),
                follower_id: id(2 * i + 1),
                lag: params.lags[i % params.lags.len()],
                beta: params.beta,
                sign: if i % 2 == 0 {
                    ComovementSign::Positive
                } else {
                    ComovementSign::Negative
                },
                noise_std,
            }
        })
        .collect();
    Ok(Scenario {
        seed,
        start_date: params.start_date,
        days: params.days,
        markets,
        links,
    })
}

//! LLM plausibility scoring of statistical candidates and the hybrid re-rank.
//!
//! The model never proposes pairs. It only grades the directed pairs that came
//! out of the Granger screen, and [`rerank`] reorders and truncates that list.

mod cache;
mod prompt;
mod scorer;
mod verdict;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheRecord, ResponseCache};
pub use prompt::build_prompt;
pub use scorer::{
    load_stub_table, ScoredCandidates, Scorer, ScorerConfig, ScorerMode, ScoringFailure, StubDefault,
    StubEntry, StubTable, API_KEY_ENV,
};
pub use verdict::{parse_verdict, SemanticVerdict, Strength};

use crate::error::{Error, Result};
use crate::granger::RankedCandidates;

/// Title, description and event grouping for one market.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMetadata {
    pub market_id: String,
    pub title: String,
    pub description: String,
    /// Shared by contracts written on the same real-world event.
    pub event_group: String,
}

pub type MetadataMap = BTreeMap<String, EventMetadata>;

/// Directed `(leader, follower)` key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub leader_id: String,
    pub follower_id: String,
}

impl PairKey {
    pub fn new(leader: &str, follower: &str) -> Self {
        Self {
            leader_id: leader.to_string(),
            follower_id: follower.to_string(),
        }
    }
}

/// Stable sort by verdict strength (descending), keeping statistical order
/// among equal strengths, then truncation to `m`.
pub fn rerank(
    candidates: &RankedCandidates,
    verdicts: &BTreeMap<PairKey, SemanticVerdict>,
    m: usize,
) -> Result<RankedCandidates> {
    if m < 1 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let mut scored = candidates
        .candidates
        .iter()
        .map(|c| {
            verdicts
                .get(&PairKey::new(&c.leader_id, &c.follower_id))
                .map(|v| (v.strength, c.clone()))
                .ok_or_else(|| Error::MissingVerdict {
                    leader: c.leader_id.clone(),
                    follower: c.follower_id.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.cmp(&a.0));
    Ok(RankedCandidates {
        window_id: candidates.window_id,
        candidates: scored.into_iter().take(m).map(|(_, c)| c).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::granger::GrangerResult;
    use crate::ts::ComovementSign;

    fn candidates(n: usize) -> RankedCandidates {
        RankedCandidates {
            window_id: Some(0),
            candidates: (0..n)
                .map(|i| GrangerResult {
                    leader_id: format!("L{i:03}"),
                    follower_id: format!("F{i:03}"),
                    lag: 1,
                    f_statistic: 100.0 - i as f64,
                    p_value: (i as f64 + 1.0) * 1e-4,
                    sign: ComovementSign::Positive,
                    n_obs: 50,
                })
                .collect(),
        }
    }

    fn verdict(strength: Strength) -> SemanticVerdict {
        SemanticVerdict {
            plausible: strength != Strength::None,
            strength,
            expected_sign: ComovementSign::Positive,
            rationale: String::new(),
            raw_response: String::new(),
        }
    }

    fn verdicts(c: &RankedCandidates, f: impl Fn(usize) -> Strength) -> BTreeMap<PairKey, SemanticVerdict> {
        c.candidates
            .iter()
            .enumerate()
            .map(|(i, g)| (PairKey::new(&g.leader_id, &g.follower_id), verdict(f(i))))
            .collect()
    }

    #[test]
    fn equal_strength_keeps_statistical_order() {
        let c = candidates(30);
        let out = rerank(&c, &verdicts(&c, |_| Strength::Moderate), 20).unwrap();
        assert_eq!(out.candidates, c.candidates[..20].to_vec());
    }

    #[test]
    fn increasing_strength_reverses_order() {
        let c = candidates(4);
        let out = rerank(&c, &verdicts(&c, |i| Strength::ALL[i]), 4).unwrap();
        let ids: Vec<_> = out.candidates.iter().map(|g| g.leader_id.as_str()).collect();
        assert_eq!(ids, ["L003", "L002", "L001", "L000"]);
    }

    #[test]
    fn low_ranked_strong_pair_enters_top_m() {
        let c = candidates(100);
        // Statistical rank #71 is index 70.
        let out = rerank(&c, &verdicts(&c, |i| if i == 70 { Strength::Strong } else { Strength::Weak }), 20).unwrap();
        assert_eq!(out.candidates[0].leader_id, "L070");
        assert_eq!(out.len(), 20);
        assert_eq!(out.candidates[1..], c.candidates[..19]);
    }

    #[test]
    fn output_is_subset_and_errors() {
        let c = candidates(10);
        let out = rerank(&c, &verdicts(&c, |i| Strength::ALL[i % 4]), 50).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.candidates.iter().all(|g| c.candidates.contains(g)));
        assert!(matches!(
            rerank(&c, &verdicts(&c, |_| Strength::Weak), 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            rerank(&c, &BTreeMap::new(), 5),
            Err(Error::MissingVerdict { .. })
        ));
    }
}

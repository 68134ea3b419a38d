//! The two rating-aggregation rules: majority label and average score.
//! Both consume a rating multiset, so they are invariant to input order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RatingMultiset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationRule {
    Majority,
    AverageScore,
}

/// Output of one aggregation: exactly one of `label` (majority) or `score`
/// (average) is present. `tied` marks a majority tie that was broken to the
/// lowest level, so harness code can count ambiguous evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateResult {
    pub rule: AggregationRule,
    pub label: Option<usize>,
    pub score: Option<f64>,
    pub n: u64,
    pub tied: bool,
}

/// Majority rule: the level with the highest count. Ties break to the lowest
/// level, which never inflates quality and keeps the result deterministic.
pub fn majority_label(ratings: &RatingMultiset) -> Result<AggregateResult> {
    if ratings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best_level = 1usize;
    let mut best = 0u64;
    let mut tied = false;
    for (idx, &c) in ratings.counts().iter().enumerate() {
        if c > best {
            best = c;
            best_level = idx + 1;
            tied = false;
        } else if c == best && idx + 1 != best_level {
            tied = true;
        }
    }
    Ok(AggregateResult {
        rule: AggregationRule::Majority,
        label: Some(best_level),
        score: None,
        n: ratings.n(),
        tied,
    })
}

/// Average scoring rule: the arithmetic mean of all ratings.
pub fn average_score(ratings: &RatingMultiset) -> Result<AggregateResult> {
    if ratings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let weighted: f64 = ratings
        .counts()
        .iter()
        .enumerate()
        .map(|(idx, &c)| (idx + 1) as f64 * c as f64)
        .sum();
    Ok(AggregateResult {
        rule: AggregationRule::AverageScore,
        label: None,
        score: Some(weighted / ratings.n() as f64),
        n: ratings.n(),
        tied: false,
    })
}

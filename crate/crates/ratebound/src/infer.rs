//! Parameter inference from observed ratings.
//!
//! The maximum-likelihood estimate of the collective-behavior vector is just
//! the per-level frequency `counts[k] / n`, so inference is a single linear
//! pass. The online variant plugs the inferred vector straight into the
//! matching bound formula to estimate how many ratings an item still needs.

use serde::Serialize;

use crate::aggregate::AggregationRule;
use crate::bounds::{BoundInputs, BoundResult, solve_epsilon};
use crate::error::{Error, Result};
use crate::model::{DirichletParams, MisbehaviorProfile, RatingMultiset, RatingScale};

/// Maximum-likelihood estimate of the collective behavior vector. Unlike
/// [`DirichletParams`], components may be exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferredParams {
    alpha_hat: Vec<f64>,
    n: u64,
}

impl InferredParams {
    pub fn alpha_hat(&self) -> &[f64] {
        &self.alpha_hat
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.alpha_hat.len()
    }

    /// Estimated true mean: `sum_k k * alpha_hat[k]`.
    pub fn gamma_hat(&self) -> f64 {
        self.alpha_hat
            .iter()
            .enumerate()
            .map(|(idx, &a)| (idx + 1) as f64 * a)
            .sum()
    }

    /// Converts to simulation-ready parameters, applying the smoothing floor
    /// to any zero components.
    pub fn to_dirichlet(&self) -> Result<DirichletParams> {
        DirichletParams::from_inferred(&self.alpha_hat)
    }
}

/// MLE of the behavior vector: `alpha_hat[k] = counts[k] / n`.
pub fn infer_alpha(ratings: &RatingMultiset) -> Result<InferredParams> {
    if ratings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = ratings.n();
    let alpha_hat = ratings
        .counts()
        .iter()
        .map(|&c| c as f64 / n as f64)
        .collect();
    Ok(InferredParams { alpha_hat, n })
}

/// Infers the minimum number of ratings an item needs from its history so
/// far. For the majority rule this is the honest Chernoff bound evaluated at
/// the inferred vector; for the average rule the error target is inverted to
/// an epsilon first (`target_error` is required there).
pub fn infer_min_ratings(
    history: &RatingMultiset,
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
) -> Result<BoundResult> {
    if history.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidDelta(delta));
    }
    let inferred = infer_alpha(history)?;
    let m = inferred.m();
    match rule {
        AggregationRule::Majority => {
            // Top and runner-up counts; a tied top count means the inferred
            // majority gap is exactly zero.
            let counts = history.counts();
            let (mut top, mut top_idx) = (0u64, 0usize);
            for (idx, &c) in counts.iter().enumerate() {
                if c > top {
                    top = c;
                    top_idx = idx;
                }
            }
            let mut second = 0u64;
            for (idx, &c) in counts.iter().enumerate() {
                if idx != top_idx && c > second {
                    second = c;
                }
            }
            if second == top {
                return Err(Error::DegenerateMajority);
            }
            let n = history.n() as f64;
            let top_hat = top as f64 / n;
            let second_hat = second as f64 / n;
            let gap = top_hat - second_hat;
            let raw = 12.0 * top_hat / (gap * gap) * (m as f64 / delta).ln();
            Ok(BoundResult::new(
                raw,
                BoundInputs {
                    rule,
                    m,
                    delta,
                    profile: MisbehaviorProfile::Honest,
                    alpha: Some(inferred.alpha_hat.clone()),
                    epsilon: None,
                    target_error: None,
                },
            ))
        }
        AggregationRule::AverageScore => {
            let target = target_error.ok_or_else(|| {
                Error::InvalidInputs(
                    "target_error is required for the average scoring rule".into(),
                )
            })?;
            let scale = RatingScale::new(m)?;
            let gamma_hat = inferred.gamma_hat();
            let epsilon = solve_epsilon(target, scale, gamma_hat)?;
            let raw = 3.0 / (epsilon * epsilon) * (2.0 * m as f64 / delta).ln();
            Ok(BoundResult::new(
                raw,
                BoundInputs {
                    rule,
                    m,
                    delta,
                    profile: MisbehaviorProfile::Honest,
                    alpha: Some(inferred.alpha_hat.clone()),
                    epsilon: Some(epsilon),
                    target_error: Some(target),
                },
            ))
        }
    }
}

//! Domain types for the rating model: the m-level scale, the per-item
//! collective-behavior vector alpha, observed rating multisets, misbehavior
//! profiles, and the ground truth each aggregation rule converges to.

use serde::Serialize;

use crate::error::{Error, Result};

/// Inputs whose components sum to within this distance of 1 are renormalized;
/// anything further off is rejected.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Additive floor applied to inferred alpha vectors before normalization so
/// that zero counts do not produce zero components.
pub const SMOOTHING_FLOOR: f64 = 1e-12;

/// An m-level cardinal rating metric; levels are `1..=m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RatingScale(usize);

impl RatingScale {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidScale(m));
        }
        Ok(Self(m))
    }

    pub fn m(&self) -> usize {
        self.0
    }

    pub fn contains(&self, level: usize) -> bool {
        (1..=self.0).contains(&level)
    }

    /// Errors with the offending value if `level` is outside `1..=m`.
    pub fn check(&self, level: usize) -> Result<()> {
        if self.contains(level) {
            Ok(())
        } else {
            Err(Error::OutOfScaleRating {
                level,
                m: self.0,
            })
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> {
        1..=self.0
    }
}

/// Per-item collective rating behavior: a strictly positive vector on the
/// probability simplex. Component k-1 is the probability that a random user
/// rates the item at level k.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    /// Builds the parameter vector, renormalizing inputs whose sum is within
    /// [`SIMPLEX_TOLERANCE`] of 1 and rejecting anything further off.
    /// Components must be strictly positive.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidAlpha(format!(
                "need at least 2 components, got {}",
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::InvalidAlpha(
                "every component must be finite and strictly positive".into(),
            ));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidAlpha(format!(
                "components sum to {sum}, not 1"
            )));
        }
        let alpha = alpha.into_iter().map(|a| a / sum).collect();
        Ok(Self { alpha })
    }

    /// Builds parameters from an inferred (MLE) vector, which may contain
    /// zeros. A [`SMOOTHING_FLOOR`] is added to every component before
    /// normalization so bound formulas stay finite.
    pub fn from_inferred(alpha_hat: &[f64]) -> Result<Self> {
        if alpha_hat.len() < 2 {
            return Err(Error::InvalidAlpha(format!(
                "need at least 2 components, got {}",
                alpha_hat.len()
            )));
        }
        if alpha_hat.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidAlpha(
                "every component must be finite and non-negative".into(),
            ));
        }
        let floored: Vec<f64> = alpha_hat.iter().map(|a| a + SMOOTHING_FLOOR).collect();
        let sum: f64 = floored.iter().sum();
        let alpha = floored.into_iter().map(|a| a / sum).collect();
        Ok(Self { alpha })
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn scale(&self) -> RatingScale {
        RatingScale(self.alpha.len())
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Marginal pmf of a single observed rating. This is exactly the alpha
    /// vector: integrating the categorical likelihood over the Dirichlet
    /// population distribution leaves P[rating = k] = alpha_k.
    pub fn marginal_pmf(&self) -> &[f64] {
        &self.alpha
    }

    /// Infinite-sample ground truth under both aggregation rules.
    ///
    /// Fails with [`Error::DegenerateMajority`] when the largest component is
    /// not unique, since the majority-rule truth is undefined there.
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        let (mut best_idx, mut best) = (0usize, f64::NEG_INFINITY);
        for (idx, &a) in self.alpha.iter().enumerate() {
            if a > best {
                best = a;
                best_idx = idx;
            }
        }
        let mut runner_up = f64::NEG_INFINITY;
        for (idx, &a) in self.alpha.iter().enumerate() {
            if idx != best_idx && a > runner_up {
                runner_up = a;
            }
        }
        if runner_up >= best {
            return Err(Error::DegenerateMajority);
        }
        let mean = self
            .alpha
            .iter()
            .enumerate()
            .map(|(idx, &a)| (idx + 1) as f64 * a)
            .sum();
        Ok(GroundTruth {
            label: best_idx + 1,
            mean,
            runner_up,
        })
    }
}

/// Observed ratings of one item, stored as per-level counts. Only ratings
/// actually given are stored; users who never rated the item do not appear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatingMultiset {
    counts: Vec<u64>,
    n: u64,
}

impl RatingMultiset {
    pub fn empty(scale: RatingScale) -> Self {
        Self {
            counts: vec![0; scale.m()],
            n: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidScale(counts.len()));
        }
        let n = counts.iter().sum();
        Ok(Self { counts, n })
    }

    pub fn from_ratings<I>(scale: RatingScale, ratings: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut set = Self::empty(scale);
        for r in ratings {
            set.add(r)?;
        }
        Ok(set)
    }

    /// Records one more rating at `level`.
    pub fn add(&mut self, level: usize) -> Result<()> {
        if level < 1 || level > self.counts.len() {
            return Err(Error::OutOfScaleRating {
                level,
                m: self.counts.len(),
            });
        }
        self.counts[level - 1] += 1;
        self.n += 1;
        Ok(())
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count_of(&self, level: usize) -> u64 {
        self.counts[level - 1]
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// How the rating population misbehaves, if at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MisbehaviorProfile {
    /// Everyone rates from the honest model.
    Honest,
    /// A fraction `f < 1` of ratings are uniform over the scale.
    Random { fraction: f64 },
    /// A fraction `f'` of ratings are a constant `target` level.
    Biased { fraction: f64, target: usize },
}

impl MisbehaviorProfile {
    pub fn honest() -> Self {
        Self::Honest
    }

    pub fn random(fraction: f64) -> Result<Self> {
        if !fraction.is_finite() || !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidFraction(fraction));
        }
        Ok(Self::Random { fraction })
    }

    pub fn biased(fraction: f64, target: usize) -> Result<Self> {
        if !fraction.is_finite() || !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidFraction(fraction));
        }
        if target < 1 {
            return Err(Error::OutOfScaleRating {
                level: target,
                m: 0,
            });
        }
        Ok(Self::Biased { fraction, target })
    }

    /// Misbehaving fraction of the population (0 for honest).
    pub fn fraction(&self) -> f64 {
        match self {
            Self::Honest => 0.0,
            Self::Random { fraction } | Self::Biased { fraction, .. } => *fraction,
        }
    }

    /// Checks the biased target against the scale.
    pub fn validate_against(&self, scale: RatingScale) -> Result<()> {
        if let Self::Biased { target, .. } = self {
            scale.check(*target)?;
        }
        Ok(())
    }
}

/// What each rule converges to with unboundedly many honest ratings:
/// the majority-rule label (argmax of alpha), the average-rule mean, and the
/// runner-up alpha component whose gap to the top drives sample complexity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundTruth {
    label: usize,
    mean: f64,
    runner_up: f64,
}

impl GroundTruth {
    pub fn label(&self) -> usize {
        self.label
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn runner_up(&self) -> f64 {
        self.runner_up
    }
}

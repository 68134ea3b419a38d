//! Reliability analysis for online rating aggregation.
//!
//! An item's ratings are modeled as draws from a collective behavior vector
//! `alpha` on the probability simplex: a random user rates level `k` with
//! probability `alpha_k`. Under that model this crate computes, in closed
//! form, how many ratings an item needs before the majority rule or the
//! average scoring rule reflects its true quality with probability `1 -
//! delta` — honestly rated or under random/biased misbehavior — plus the
//! misbehaving fraction beyond which biased raters control the outcome.
//!
//! Around those calculators sit the tools to use and check them on data:
//!
//! - [`infer`]: maximum-likelihood estimation of `alpha` from observed
//!   ratings and online inference of the minimum-rating requirement.
//! - [`sim`]: seeded, thread-count-independent Monte Carlo estimators that
//!   verify every bound empirically.
//! - [`harness`]: ingestion of time-stamped rating logs, prefix-replay
//!   validation, survival statistics of per-item requirements, and synthetic
//!   dataset generation with ground-truth sidecars.

pub mod aggregate;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod infer;
pub mod model;
pub mod sim;

pub use aggregate::{average_score, majority_label, AggregateResult, AggregationRule};
pub use bounds::{
    average_biased_interval, average_honest_bound, average_random_interval, biased_resist_bound,
    biased_win_bound, biased_win_threshold, error_bound, majority_honest_bound,
    majority_random_bound, solve_epsilon, BoundInputs, BoundResult, ErrorInterval,
};
pub use error::{Error, Result};
pub use infer::{infer_alpha, infer_min_ratings, InferredParams};
pub use model::{
    DirichletParams, GroundTruth, MisbehaviorProfile, RatingMultiset, RatingScale,
};
pub use sim::{
    estimate_abs_error_quantile, estimate_failure_rate, sample_rating_set,
    sample_rating_set_for_trial, trial_rng, AttackerAssignment, FailureEstimate, FailureMode,
    SamplerKind, SimConfig,
};

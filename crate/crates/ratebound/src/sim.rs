//! Seeded generative sampler for the rating model with misbehavior injection,
//! plus Monte Carlo estimators used to verify the closed-form bounds.
//!
//! Reproducibility contract: every trial derives its own ChaCha8 stream as
//! `seed_from_u64(config.seed)` + `set_stream(trial_index)`. Trials are
//! therefore independent of execution order and thread count, and all
//! estimator outputs are bit-identical for a given [`SimConfig`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{average_score, majority_label};
use crate::error::{Error, Result};
use crate::model::{DirichletParams, GroundTruth, MisbehaviorProfile, RatingMultiset};

/// How honest ratings are drawn. The two are equivalent in distribution:
/// integrating the per-user categorical over the Dirichlet population leaves
/// the marginal `P[rating = k] = alpha_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Draw a per-user pmf from Dirichlet(alpha), then the rating from it.
    TwoStage,
    /// Draw the rating directly from Categorical(alpha).
    Marginal,
}

/// Whether misbehaving raters appear i.i.d. with probability `f` per rating
/// (the default reading of "fraction") or as exactly `floor(f * n)` ratings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerAssignment {
    Iid,
    ExactCount,
}

/// One fully specified simulation: model, contamination, trial shape, seed.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub params: DirichletParams,
    pub profile: MisbehaviorProfile,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub assignment: AttackerAssignment,
}

impl SimConfig {
    pub fn new(
        params: DirichletParams,
        profile: MisbehaviorProfile,
        n: u64,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        if n < 1 || trials < 1 {
            return Err(Error::InvalidInputs(format!(
                "need n >= 1 and trials >= 1, got n={n}, trials={trials}"
            )));
        }
        profile.validate_against(params.scale())?;
        Ok(Self {
            params,
            profile,
            n,
            trials,
            seed,
            sampler: SamplerKind::Marginal,
            assignment: AttackerAssignment::Iid,
        })
    }

    pub fn with_sampler(mut self, sampler: SamplerKind) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_assignment(mut self, assignment: AttackerAssignment) -> Self {
        self.assignment = assignment;
        self
    }
}

/// Monte Carlo failure-rate estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureEstimate {
    pub rate: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl FailureEstimate {
    fn from_failures(failures: u64, trials: u64) -> Self {
        let rate = failures as f64 / trials as f64;
        Self {
            rate,
            std_err: (rate * (1.0 - rate) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// What counts as a failure when estimating majority-rule outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    /// Failure = the aggregated label differs from the true label.
    TruthExtraction,
    /// Failure = the aggregated label differs from the biased target
    /// (i.e. the attack did not win). Requires a biased profile.
    AttackerWin,
}

/// The per-trial RNG. Stream derivation rule: base key from `seed`, stream
/// number = trial index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Cumulative-scan categorical draw; returns a 1-based level.
fn draw_categorical<R: Rng>(rng: &mut R, pmf: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (idx, &p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx + 1;
        }
    }
    pmf.len()
}

/// Dirichlet draw via normalized independent Gamma(alpha_k, 1) variates.
/// The model's alpha components sum to 1, so individual shapes are tiny and
/// the sampled pmf is typically very sparse; that is a property of the model,
/// not a sampling artifact. An all-underflow draw (astronomically rare at
/// f64 range) is redrawn.
fn draw_dirichlet<R: Rng>(rng: &mut R, gammas: &[Gamma<f64>], out: &mut [f64]) {
    loop {
        let mut sum = 0.0;
        for (slot, g) in out.iter_mut().zip(gammas) {
            let v = g.sample(rng);
            *slot = v;
            sum += v;
        }
        if sum > 0.0 {
            for slot in out.iter_mut() {
                *slot /= sum;
            }
            return;
        }
    }
}

/// Per-trial sampling state reused across ratings.
struct Sampler<'a> {
    alpha: &'a [f64],
    sampler: SamplerKind,
    gammas: Vec<Gamma<f64>>,
    pmf_buf: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(params: &'a DirichletParams, kind: SamplerKind) -> Self {
        let gammas = match kind {
            SamplerKind::TwoStage => params
                .alpha()
                .iter()
                .map(|&a| Gamma::new(a, 1.0).expect("alpha components are positive"))
                .collect(),
            SamplerKind::Marginal => Vec::new(),
        };
        Self {
            alpha: params.alpha(),
            sampler: kind,
            gammas,
            pmf_buf: vec![0.0; params.m()],
        }
    }

    fn draw_honest<R: Rng>(&mut self, rng: &mut R) -> usize {
        match self.sampler {
            SamplerKind::Marginal => draw_categorical(rng, self.alpha),
            SamplerKind::TwoStage => {
                draw_dirichlet(rng, &self.gammas, &mut self.pmf_buf);
                draw_categorical(rng, &self.pmf_buf)
            }
        }
    }
}

fn draw_attacker<R: Rng>(rng: &mut R, m: usize, profile: &MisbehaviorProfile) -> usize {
    match profile {
        MisbehaviorProfile::Random { .. } => rng.gen_range(1..=m),
        MisbehaviorProfile::Biased { target, .. } => *target,
        MisbehaviorProfile::Honest => unreachable!("honest raters never misbehave"),
    }
}

/// Draws the ordered rating sequence for one trial.
pub(crate) fn sample_levels(rng: &mut ChaCha8Rng, config: &SimConfig) -> Vec<usize> {
    let m = config.params.m();
    let mut sampler = Sampler::new(&config.params, config.sampler);
    let mut levels = Vec::with_capacity(config.n as usize);
    match (&config.profile, config.assignment) {
        (MisbehaviorProfile::Honest, _) => {
            for _ in 0..config.n {
                levels.push(sampler.draw_honest(rng));
            }
        }
        (profile, AttackerAssignment::Iid) => {
            let fraction = profile.fraction();
            for _ in 0..config.n {
                let level = if rng.gen::<f64>() < fraction {
                    draw_attacker(rng, m, profile)
                } else {
                    sampler.draw_honest(rng)
                };
                levels.push(level);
            }
        }
        (profile, AttackerAssignment::ExactCount) => {
            let attackers = (profile.fraction() * config.n as f64).floor() as u64;
            for _ in 0..attackers {
                levels.push(draw_attacker(rng, m, profile));
            }
            for _ in attackers..config.n {
                levels.push(sampler.draw_honest(rng));
            }
        }
    }
    levels
}

fn sample_multiset(rng: &mut ChaCha8Rng, config: &SimConfig) -> RatingMultiset {
    let mut counts = vec![0u64; config.params.m()];
    for level in sample_levels(rng, config) {
        counts[level - 1] += 1;
    }
    RatingMultiset::from_counts(counts).expect("m >= 2 by construction")
}

/// Samples one rating multiset under the configured model and misbehavior
/// (trial index 0).
pub fn sample_rating_set(config: &SimConfig) -> RatingMultiset {
    sample_rating_set_for_trial(config, 0)
}

/// Samples the rating multiset of a specific trial substream.
pub fn sample_rating_set_for_trial(config: &SimConfig, trial: u64) -> RatingMultiset {
    let mut rng = trial_rng(config.seed, trial);
    sample_multiset(&mut rng, config)
}

/// Empirical probability that the majority rule misses its target
/// (the true label, or the attacker's target in [`FailureMode::AttackerWin`]).
pub fn estimate_failure_rate(
    config: &SimConfig,
    truth: &GroundTruth,
    mode: FailureMode,
) -> Result<FailureEstimate> {
    let expected = match mode {
        FailureMode::TruthExtraction => truth.label(),
        FailureMode::AttackerWin => match config.profile {
            MisbehaviorProfile::Biased { target, .. } => target,
            _ => {
                return Err(Error::InvalidInputs(
                    "attacker-win estimation requires a biased profile".into(),
                ))
            }
        },
    };
    let failures = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let set = sample_rating_set_for_trial(config, trial);
            let res = majority_label(&set).expect("n >= 1");
            u64::from(res.label != Some(expected))
        })
        .sum();
    Ok(FailureEstimate::from_failures(failures, config.trials))
}

/// Empirical `quantile` of |average score - true mean| across trials.
pub fn estimate_abs_error_quantile(
    config: &SimConfig,
    truth: &GroundTruth,
    quantile: f64,
) -> Result<f64> {
    if !quantile.is_finite() || quantile <= 0.0 || quantile >= 1.0 {
        return Err(Error::InvalidInputs(format!(
            "quantile must lie in (0, 1), got {quantile}"
        )));
    }
    let mut errors: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let set = sample_rating_set_for_trial(config, trial);
            let res = average_score(&set).expect("n >= 1");
            (res.score.expect("average rule") - truth.mean()).abs()
        })
        .collect();
    errors.sort_unstable_by(f64::total_cmp);
    let idx = ((quantile * errors.len() as f64).ceil() as usize)
        .clamp(1, errors.len())
        - 1;
    Ok(errors[idx])
}

//! Monte Carlo oracles: empirical checks of the sampler, the estimators, and
//! the statistical claims behind the closed-form bounds. All runs are seeded,
//! so every assertion here is deterministic.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use ratebound::{
    average_score, estimate_abs_error_quantile, estimate_failure_rate, infer_alpha,
    infer_min_ratings, majority_honest_bound, majority_label, sample_rating_set_for_trial,
    AggregationRule, AttackerAssignment, DirichletParams, FailureMode, MisbehaviorProfile,
    RatingMultiset, SamplerKind, SimConfig,
};

const TABLE_ALPHA: [f64; 5] = [4.0 / 35.0, 25.0 / 35.0, 3.0 / 35.0, 2.0 / 35.0, 1.0 / 35.0];

fn table_params() -> DirichletParams {
    DirichletParams::new(TABLE_ALPHA.to_vec()).unwrap()
}

fn honest_config(n: u64, trials: u64, seed: u64, sampler: SamplerKind) -> SimConfig {
    SimConfig::new(table_params(), MisbehaviorProfile::honest(), n, trials, seed)
        .unwrap()
        .with_sampler(sampler)
}

/// One big draw: level frequencies of the two-stage sampler must match the
/// marginal pmf within 3 standard errors per component.
#[test]
fn two_stage_frequencies_match_marginal_pmf() {
    let n = 1_000_000u64;
    let config = honest_config(n, 1, 2024, SamplerKind::TwoStage);
    let set = sample_rating_set_for_trial(&config, 0);
    for (k, &alpha_k) in TABLE_ALPHA.iter().enumerate() {
        let freq = set.counts()[k] as f64 / n as f64;
        let se = (alpha_k * (1.0 - alpha_k) / n as f64).sqrt();
        assert!(
            (freq - alpha_k).abs() <= 3.0 * se,
            "level {}: freq {freq} vs alpha {alpha_k} (3se = {})",
            k + 1,
            3.0 * se
        );
    }
}

/// Two-sample chi-square test: the two-stage and marginal samplers are
/// statistically indistinguishable at one million draws each.
#[test]
fn samplers_agree_by_chi_square() {
    let n = 1_000_000u64;
    let two_stage = sample_rating_set_for_trial(&honest_config(n, 1, 7, SamplerKind::TwoStage), 0);
    let marginal = sample_rating_set_for_trial(&honest_config(n, 1, 8, SamplerKind::Marginal), 0);
    let mut stat = 0.0;
    for k in 0..5 {
        let a = two_stage.counts()[k] as f64;
        let b = marginal.counts()[k] as f64;
        stat += (a - b) * (a - b) / (a + b);
    }
    let df = ChiSquared::new(4.0).unwrap();
    let p = 1.0 - df.cdf(stat);
    assert!(p > 0.001, "chi-square stat {stat}, p {p}");
}

/// With n far above the requirement, the majority label is essentially
/// always the true one.
#[test]
fn majority_label_is_stable_far_above_the_bound() {
    let config = honest_config(1000, 10_000, 3, SamplerKind::Marginal);
    let truth = config.params.ground_truth().unwrap();
    let est = estimate_failure_rate(&config, &truth, FailureMode::TruthExtraction).unwrap();
    assert!(1.0 - est.rate >= 0.999, "success rate {}", 1.0 - est.rate);
}

/// The mean of average scores over many simulated sets is the true mean.
#[test]
fn average_score_concentrates_on_gamma() {
    let config = honest_config(100, 10_000, 4, SamplerKind::Marginal);
    let mut total = 0.0;
    for trial in 0..config.trials {
        let set = sample_rating_set_for_trial(&config, trial);
        total += average_score(&set).unwrap().score.unwrap();
    }
    let mean = total / config.trials as f64;
    assert!((mean - 76.0 / 35.0).abs() <= 0.02, "mean {mean}");
}

/// MLE consistency: on 10^5 honest samples each inferred component lands
/// within 3 binomial standard errors of the truth.
#[test]
fn inferred_alpha_is_consistent() {
    let n = 100_000u64;
    let config = honest_config(n, 1, 11, SamplerKind::Marginal);
    let set = sample_rating_set_for_trial(&config, 0);
    let inferred = infer_alpha(&set).unwrap();
    for (k, &alpha_k) in TABLE_ALPHA.iter().enumerate() {
        let se = (alpha_k * (1.0 - alpha_k) / n as f64).sqrt();
        assert!(
            (inferred.alpha_hat()[k] - alpha_k).abs() <= 3.0 * se,
            "component {}: {} vs {alpha_k}",
            k,
            inferred.alpha_hat()[k]
        );
    }
}

/// Online inference converges: averaged over independent streams, the
/// requirement inferred from a prefix of 10 n' is within 5% of the
/// requirement computed from the true parameters.
#[test]
fn inferred_requirement_converges_along_the_stream() {
    let params = table_params();
    let direct = majority_honest_bound(&params, 0.2).unwrap();
    let prefix_len = 10 * direct.n_prime;
    let streams = 32u64;
    let config = honest_config(prefix_len, streams, 13, SamplerKind::Marginal);
    let mut total = 0.0;
    for trial in 0..streams {
        let set = sample_rating_set_for_trial(&config, trial);
        let inferred = infer_min_ratings(&set, AggregationRule::Majority, 0.2, None).unwrap();
        total += inferred.raw;
    }
    let mean = total / streams as f64;
    let rel = (mean - direct.raw).abs() / direct.raw;
    assert!(rel <= 0.05, "mean inferred {mean} vs direct {} ({rel})", direct.raw);
}

/// Honest failure rate is non-increasing along the ladder n'/4, n'/2, n', 2n'
/// (within Monte Carlo noise).
#[test]
fn failure_rate_is_monotone_in_n() {
    let params = table_params();
    let n_prime = majority_honest_bound(&params, 0.2).unwrap().n_prime;
    let truth = params.ground_truth().unwrap();
    let ladder = [n_prime / 4, n_prime / 2, n_prime, 2 * n_prime];
    let trials = 4000u64;
    let mut rates = Vec::new();
    for (i, &n) in ladder.iter().enumerate() {
        let config = honest_config(n, trials, 100 + i as u64, SamplerKind::Marginal);
        let est = estimate_failure_rate(&config, &truth, FailureMode::TruthExtraction).unwrap();
        rates.push(est);
    }
    for pair in rates.windows(2) {
        let slack = 3.0 * (pair[0].std_err.powi(2) + pair[1].std_err.powi(2)).sqrt();
        assert!(
            pair[1].rate <= pair[0].rate + slack,
            "rates {} -> {} (slack {slack})",
            pair[0].rate,
            pair[1].rate
        );
    }
}

/// Above the win threshold the attack wins almost surely as n grows; below
/// it, truth extraction wins almost surely. This is the impossibility
/// dichotomy made empirical.
#[test]
fn threshold_dichotomy_at_large_n() {
    let params = table_params();
    let truth = params.ground_truth().unwrap();

    // f' = 0.5 > threshold 0.407: attacker-win rate approaches 1.
    let win_bound = ratebound::biased_win_bound(&params, 0.2, 0.5, 5).unwrap();
    let profile = MisbehaviorProfile::biased(0.5, 5).unwrap();
    let config = SimConfig::new(params.clone(), profile, 4 * win_bound.n_prime, 2000, 17).unwrap();
    let est = estimate_failure_rate(&config, &truth, FailureMode::AttackerWin).unwrap();
    assert!(1.0 - est.rate >= 0.99, "attacker win rate {}", 1.0 - est.rate);

    // f' = 0.3 < threshold: truth extraction approaches 1.
    let resist_bound = ratebound::biased_resist_bound(&params, 0.2, 0.3, 5).unwrap();
    let profile = MisbehaviorProfile::biased(0.3, 5).unwrap();
    let config =
        SimConfig::new(params.clone(), profile, 4 * resist_bound.n_prime, 2000, 18).unwrap();
    let est = estimate_failure_rate(&config, &truth, FailureMode::TruthExtraction).unwrap();
    assert!(1.0 - est.rate >= 0.99, "truth extraction rate {}", 1.0 - est.rate);
}

/// The median absolute error shrinks by at least 2x when n grows 10x.
#[test]
fn error_quantile_shrinks_with_n() {
    let params = table_params();
    let truth = params.ground_truth().unwrap();
    let n_prime = 725u64; // average-rule requirement at E_r = 0.5, delta = 0.2
    let at_bound = estimate_abs_error_quantile(
        &honest_config(n_prime, 4000, 23, SamplerKind::Marginal),
        &truth,
        0.5,
    )
    .unwrap();
    let at_10x = estimate_abs_error_quantile(
        &honest_config(10 * n_prime, 4000, 24, SamplerKind::Marginal),
        &truth,
        0.5,
    )
    .unwrap();
    assert!(
        at_bound >= 2.0 * at_10x,
        "median at n' {at_bound}, at 10n' {at_10x}"
    );
}

/// Biased contamination leaves a persistent error that does not vanish with
/// n: the median stays above half the bias term.
#[test]
fn biased_error_floor_persists_at_large_n() {
    let params = table_params();
    let truth = params.ground_truth().unwrap();
    let profile = MisbehaviorProfile::biased(0.3, 5).unwrap();
    let config = SimConfig::new(params, profile, 4000, 2000, 29).unwrap();
    let median = estimate_abs_error_quantile(&config, &truth, 0.5).unwrap();
    let floor = 0.5 * (5.0 - truth.mean()).abs() * 0.3;
    assert!(median >= floor, "median {median} vs floor {floor}");
}

/// Exact-count attacker assignment places floor(f n) attackers; with the
/// rest honest, level-5 mass is close to f + (1 - f) alpha_5.
#[test]
fn exact_count_mode_matches_mixture_mass() {
    let params = table_params();
    let profile = MisbehaviorProfile::biased(0.25, 5).unwrap();
    let n = 2000u64;
    let trials = 500u64;
    let config = SimConfig::new(params, profile, n, trials, 37)
        .unwrap()
        .with_assignment(AttackerAssignment::ExactCount);
    let mut level5 = 0u64;
    for trial in 0..trials {
        level5 += sample_rating_set_for_trial(&config, trial).count_of(5);
    }
    let freq = level5 as f64 / (n * trials) as f64;
    let expected = 0.25 + 0.75 * (1.0 / 35.0);
    let se = (expected * (1.0 - expected) / (n * trials) as f64).sqrt();
    // Exact-count rounding shifts the mass by at most 1/n.
    assert!(
        (freq - expected).abs() <= 3.0 * se + 1.0 / n as f64,
        "freq {freq} vs {expected}"
    );
}

/// Sidecar consistency: inferring alpha from a full generated history lands
/// within 3 standard errors of the recorded truth.
#[test]
fn synthetic_sidecar_matches_inferred_alpha() {
    use ratebound::harness::{generate_synthetic, AlphaSampling, SynthSpec};
    use ratebound::RatingScale;

    let scale = RatingScale::new(5).unwrap();
    let n = 2000u64;
    let dataset = generate_synthetic(&SynthSpec {
        scale,
        items: 10,
        ratings_per_item: n,
        alpha: AlphaSampling::Prior { concentration: 1.0 },
        profile: MisbehaviorProfile::Honest,
        sampler: SamplerKind::Marginal,
        assignment: AttackerAssignment::Iid,
        seed: 41,
    })
    .unwrap();
    for item in &dataset.items {
        let set = RatingMultiset::from_ratings(
            scale,
            item.events.iter().map(|e| e.rating),
        )
        .unwrap();
        let inferred = infer_alpha(&set).unwrap();
        for (k, &alpha_k) in item.truth.alpha.iter().enumerate() {
            let se = (alpha_k * (1.0 - alpha_k) / n as f64).sqrt();
            assert!(
                (inferred.alpha_hat()[k] - alpha_k).abs() <= 3.0 * se,
                "item {} component {k}",
                item.truth.item_id
            );
        }
    }
}

/// Spot check that a constructed multiset and a simulated one aggregate the
/// same way (the estimators use the same aggregation code path).
#[test]
fn estimator_aggregation_matches_direct_aggregation() {
    let config = honest_config(77, 1, 55, SamplerKind::Marginal);
    let set = sample_rating_set_for_trial(&config, 0);
    let direct = majority_label(&set).unwrap();
    let rebuilt = RatingMultiset::from_counts(set.counts().to_vec()).unwrap();
    assert_eq!(direct, majority_label(&rebuilt).unwrap());
}

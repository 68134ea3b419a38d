//! Command implementations: resolve arguments (flags, then config file, then
//! defaults), call the library, and render the report.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use ratebound::harness::{
    self, generate_synthetic, ingest_path, min_ratings_distribution, validate, validate_online,
    AlphaSampling, ItemHistory, SynthSpec,
};
use ratebound::{
    average_biased_interval, average_honest_bound, average_random_interval, biased_resist_bound,
    biased_win_bound, biased_win_threshold, estimate_abs_error_quantile, estimate_failure_rate,
    infer_alpha, infer_min_ratings, majority_honest_bound, majority_random_bound, solve_epsilon,
    AggregationRule, AttackerAssignment, BoundResult, DirichletParams, FailureMode,
    MisbehaviorProfile, RatingMultiset, RatingScale, SamplerKind, SimConfig,
};

use crate::args::{
    AssignmentArg, BoundArgs, InferAlphaArgs, InferMinArgs, McVerifyArgs, MisbehaviorArg,
    ObjectiveArg, ProfileArgs, RuleArg, SamplerArg, SurvivalArgs, SynthArgs, ThresholdArgs,
    ValidateArgs,
};
use crate::parse::FileConfig;
use crate::render::{columns_table, csv_table, json_envelope, kv_table, merge_bodies, to_body};

const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(ratebound::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Domain(err) => write!(f, "{err}"),
        }
    }
}

impl From<ratebound::Error> for CliError {
    fn from(err: ratebound::Error) -> Self {
        CliError::Domain(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Domain(ratebound::Error::Io(err))
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub struct CommandOutput {
    pub text: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// Everything a report echoes back about its run. Only the fields a command
/// resolved are serialized.
#[derive(Debug, Default, Serialize)]
pub struct ConfigEcho {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<MisbehaviorProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub items: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings_per_item: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concentration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_out: Option<String>,
}

pub struct Ctx {
    pub format: Format,
    pub file: FileConfig,
}

impl Ctx {
    fn delta(&self, flag: Option<f64>) -> Result<f64, CliError> {
        flag.or(self.file.delta().map_err(usage)?)
            .ok_or_else(|| usage("--delta is required (or set delta= in the config file)"))
    }

    fn trials(&self, flag: Option<u64>) -> Result<u64, CliError> {
        Ok(flag
            .or(self.file.trials().map_err(usage)?)
            .unwrap_or(DEFAULT_TRIALS))
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        Ok(flag.or(self.file.seed().map_err(usage)?).unwrap_or(0))
    }

    fn m(&self, flag: Option<usize>) -> Result<Option<usize>, CliError> {
        Ok(match flag {
            Some(m) => Some(m),
            None => self.file.m().map_err(usage)?,
        })
    }
}

fn rule_name(rule: RuleArg) -> &'static str {
    match rule {
        RuleArg::Majority => "majority",
        RuleArg::Average => "average",
    }
}

fn rule_of(arg: RuleArg) -> AggregationRule {
    match arg {
        RuleArg::Majority => AggregationRule::Majority,
        RuleArg::Average => AggregationRule::AverageScore,
    }
}

fn sampler_of(arg: SamplerArg) -> (SamplerKind, &'static str) {
    match arg {
        SamplerArg::Marginal => (SamplerKind::Marginal, "marginal"),
        SamplerArg::TwoStage => (SamplerKind::TwoStage, "two-stage"),
    }
}

fn assignment_of(arg: AssignmentArg) -> (AttackerAssignment, &'static str) {
    match arg {
        AssignmentArg::Iid => (AttackerAssignment::Iid, "iid"),
        AssignmentArg::ExactCount => (AttackerAssignment::ExactCount, "exact-count"),
    }
}

fn build_profile(args: &ProfileArgs) -> Result<MisbehaviorProfile, CliError> {
    match args.misbehavior {
        MisbehaviorArg::Honest => {
            if args.fraction.is_some() || args.target.is_some() {
                return Err(usage(
                    "--fraction/--target only apply with --misbehavior random|biased",
                ));
            }
            Ok(MisbehaviorProfile::honest())
        }
        MisbehaviorArg::Random => {
            if args.target.is_some() {
                return Err(usage("--target only applies with --misbehavior biased"));
            }
            let f = args
                .fraction
                .ok_or_else(|| usage("--misbehavior random requires --fraction"))?;
            Ok(MisbehaviorProfile::random(f)?)
        }
        MisbehaviorArg::Biased => {
            let f = args
                .fraction
                .ok_or_else(|| usage("--misbehavior biased requires --fraction"))?;
            let target = args
                .target
                .ok_or_else(|| usage("--misbehavior biased requires --target"))?;
            Ok(MisbehaviorProfile::biased(f, target)?)
        }
    }
}

fn params_from(alpha: &[f64]) -> Result<DirichletParams, CliError> {
    Ok(DirichletParams::new(alpha.to_vec())?)
}

/// Epsilon for the average rule: given directly, or solved from an error
/// target and a mean.
fn resolve_epsilon(
    epsilon: Option<f64>,
    target_error: Option<f64>,
    scale: RatingScale,
    gamma: Option<f64>,
) -> Result<(f64, Option<f64>), CliError> {
    match (epsilon, target_error) {
        (Some(_), Some(_)) => Err(usage("give --epsilon or --target-error, not both")),
        (Some(e), None) => Ok((e, None)),
        (None, Some(er)) => {
            let gamma = gamma.ok_or_else(|| {
                usage("--target-error needs a mean: give --gamma or --alpha")
            })?;
            Ok((solve_epsilon(er, scale, gamma)?, Some(er)))
        }
        (None, None) => Err(usage("the average rule needs --epsilon or --target-error")),
    }
}

fn bound_table(bound: &BoundResult, extra: &[(&str, String)]) -> String {
    let mut rows: Vec<(&str, String)> = vec![
        (
            "rule",
            match bound.inputs.rule {
                AggregationRule::Majority => "majority".into(),
                AggregationRule::AverageScore => "average".into(),
            },
        ),
        ("m", bound.inputs.m.to_string()),
        ("delta", bound.inputs.delta.to_string()),
    ];
    rows.extend(extra.iter().cloned());
    if let Some(eps) = bound.inputs.epsilon {
        rows.push(("epsilon", eps.to_string()));
    }
    if let Some(er) = bound.inputs.target_error {
        rows.push(("error_bound", er.to_string()));
    }
    rows.push(("raw", bound.raw.to_string()));
    rows.push(("n_prime", bound.n_prime.to_string()));
    kv_table(&rows)
}

pub fn cmd_bound(ctx: &Ctx, args: &BoundArgs) -> Result<CommandOutput, CliError> {
    let delta = ctx.delta(args.delta)?;
    let profile = build_profile(&args.profile)?;
    let alpha = args.alpha.as_ref().map(|a| a.0.clone());

    let mut echo = ConfigEcho {
        command: "bound",
        rule: Some(rule_name(args.rule)),
        alpha: alpha.clone(),
        delta: Some(delta),
        profile: Some(profile),
        ..Default::default()
    };

    match args.rule {
        RuleArg::Majority => {
            let alpha = alpha.ok_or_else(|| usage("--rule majority requires --alpha"))?;
            let params = params_from(&alpha)?;
            echo.m = Some(params.m());
            let bound = match profile {
                MisbehaviorProfile::Honest => majority_honest_bound(&params, delta)?,
                MisbehaviorProfile::Random { fraction } => {
                    majority_random_bound(&params, delta, fraction)?
                }
                MisbehaviorProfile::Biased { fraction, target } => {
                    echo.objective = Some(match args.objective {
                        ObjectiveArg::Resist => "resist",
                        ObjectiveArg::Win => "win",
                    });
                    match args.objective {
                        ObjectiveArg::Resist => {
                            biased_resist_bound(&params, delta, fraction, target)?
                        }
                        ObjectiveArg::Win => biased_win_bound(&params, delta, fraction, target)?,
                    }
                }
            };
            let text = match ctx.format {
                Format::Json => json_envelope(&echo, to_body("bound", &bound)),
                Format::Table => bound_table(&bound, &[]),
                Format::Csv => csv_table(
                    &["rule", "delta", "raw", "n_prime"],
                    &[vec![
                        rule_name(args.rule).into(),
                        delta.to_string(),
                        bound.raw.to_string(),
                        bound.n_prime.to_string(),
                    ]],
                ),
            };
            Ok(CommandOutput { text, exit_code: 0 })
        }
        RuleArg::Average => {
            let params = alpha.as_deref().map(params_from).transpose()?;
            let m = args
                .m
                .or(ctx.m(None)?)
                .or(params.as_ref().map(|p| p.m()))
                .ok_or_else(|| usage("--rule average needs --m or --alpha"))?;
            let scale = RatingScale::new(m)?;
            let gamma = match args.gamma {
                Some(g) => Some(g),
                None => params
                    .as_ref()
                    .map(|p| p.ground_truth().map(|t| t.mean()))
                    .transpose()?,
            };
            let (epsilon, target_error) =
                resolve_epsilon(args.epsilon, args.target_error, scale, gamma)?;
            echo.m = Some(m);
            echo.epsilon = Some(epsilon);
            echo.target_error = target_error;
            echo.gamma = gamma;

            match profile {
                MisbehaviorProfile::Honest => {
                    let bound = average_honest_bound(epsilon, scale, delta, gamma)?;
                    let text = match ctx.format {
                        Format::Json => json_envelope(&echo, to_body("bound", &bound)),
                        Format::Table => bound_table(&bound, &[]),
                        Format::Csv => csv_table(
                            &["rule", "delta", "epsilon", "raw", "n_prime"],
                            &[vec![
                                "average".into(),
                                delta.to_string(),
                                epsilon.to_string(),
                                bound.raw.to_string(),
                                bound.n_prime.to_string(),
                            ]],
                        ),
                    };
                    Ok(CommandOutput { text, exit_code: 0 })
                }
                contaminated => {
                    let params = params.ok_or_else(|| {
                        usage("misbehavior intervals for the average rule require --alpha")
                    })?;
                    let (interval, inputs) = match contaminated {
                        MisbehaviorProfile::Random { fraction } => {
                            average_random_interval(&params, epsilon, fraction, delta)?
                        }
                        MisbehaviorProfile::Biased { fraction, target } => {
                            average_biased_interval(&params, epsilon, fraction, target, delta)?
                        }
                        MisbehaviorProfile::Honest => unreachable!(),
                    };
                    let text = match ctx.format {
                        Format::Json => json_envelope(
                            &echo,
                            merge_bodies(vec![
                                to_body("interval", &interval),
                                to_body("inputs", &inputs),
                            ]),
                        ),
                        Format::Table => kv_table(&[
                            ("rule", "average".into()),
                            ("delta", delta.to_string()),
                            ("epsilon", epsilon.to_string()),
                            ("lower", interval.lower.to_string()),
                            ("upper", interval.upper.to_string()),
                            ("confidence", interval.confidence.to_string()),
                            ("n_required", interval.n_required.to_string()),
                        ]),
                        Format::Csv => csv_table(
                            &["rule", "delta", "epsilon", "lower", "upper", "n_required"],
                            &[vec![
                                "average".into(),
                                delta.to_string(),
                                epsilon.to_string(),
                                interval.lower.to_string(),
                                interval.upper.to_string(),
                                interval.n_required.to_string(),
                            ]],
                        ),
                    };
                    Ok(CommandOutput { text, exit_code: 0 })
                }
            }
        }
    }
}

pub fn cmd_threshold(ctx: &Ctx, args: &ThresholdArgs) -> Result<CommandOutput, CliError> {
    let params = params_from(&args.alpha.0)?;
    let threshold = biased_win_threshold(&params, args.target)?;
    let label = params.ground_truth()?.label();
    let echo = ConfigEcho {
        command: "threshold",
        alpha: Some(args.alpha.0.clone()),
        m: Some(params.m()),
        target: Some(args.target),
        ..Default::default()
    };
    let body = json!({ "threshold": threshold, "true_label": label });
    let text = match ctx.format {
        Format::Json => json_envelope(&echo, body),
        Format::Table => kv_table(&[
            ("target", args.target.to_string()),
            ("true_label", label.to_string()),
            ("threshold", threshold.to_string()),
        ]),
        Format::Csv => csv_table(
            &["target", "true_label", "threshold"],
            &[vec![
                args.target.to_string(),
                label.to_string(),
                threshold.to_string(),
            ]],
        ),
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

pub fn cmd_mc_verify(ctx: &Ctx, args: &McVerifyArgs) -> Result<CommandOutput, CliError> {
    let delta = ctx.delta(args.delta)?;
    let trials = ctx.trials(args.trials)?;
    let seed = ctx.seed(args.seed)?;
    let profile = build_profile(&args.profile)?;
    let params = params_from(&args.alpha.0)?;
    let truth = params.ground_truth()?;
    let (sampler, sampler_name) = sampler_of(args.sampler);
    let (assignment, assignment_name) = assignment_of(args.assignment);
    let slack = 3.0 * (delta / trials as f64).sqrt();

    let mut echo = ConfigEcho {
        command: "mc-verify",
        rule: Some(rule_name(args.rule)),
        alpha: Some(args.alpha.0.clone()),
        m: Some(params.m()),
        delta: Some(delta),
        profile: Some(profile),
        trials: Some(trials),
        seed: Some(seed),
        sampler: Some(sampler_name),
        assignment: Some(assignment_name),
        ..Default::default()
    };

    let (body, pass, table) = match args.rule {
        RuleArg::Majority => {
            let (bound, mode) = match (profile, args.objective) {
                (MisbehaviorProfile::Honest, _) => (
                    majority_honest_bound(&params, delta)?,
                    FailureMode::TruthExtraction,
                ),
                (MisbehaviorProfile::Random { fraction }, _) => (
                    majority_random_bound(&params, delta, fraction)?,
                    FailureMode::TruthExtraction,
                ),
                (MisbehaviorProfile::Biased { fraction, target }, ObjectiveArg::Resist) => (
                    biased_resist_bound(&params, delta, fraction, target)?,
                    FailureMode::TruthExtraction,
                ),
                (MisbehaviorProfile::Biased { fraction, target }, ObjectiveArg::Win) => (
                    biased_win_bound(&params, delta, fraction, target)?,
                    FailureMode::AttackerWin,
                ),
            };
            if matches!(profile, MisbehaviorProfile::Biased { .. }) {
                echo.objective = Some(match args.objective {
                    ObjectiveArg::Resist => "resist",
                    ObjectiveArg::Win => "win",
                });
            }
            let n = args.n.unwrap_or(bound.n_prime);
            echo.n = Some(n);
            let config = SimConfig::new(params.clone(), profile, n, trials, seed)?
                .with_sampler(sampler)
                .with_assignment(assignment);
            let est = estimate_failure_rate(&config, &truth, mode)?;
            // In attacker-win mode `rate` counts failed attacks, so the same
            // one-sided check covers both directions.
            let allowed = delta + slack;
            let pass = est.rate <= allowed;
            let mode_name = match mode {
                FailureMode::TruthExtraction => "truth-extraction",
                FailureMode::AttackerWin => "attacker-win",
            };
            let body = merge_bodies(vec![
                to_body("bound", &bound),
                to_body("estimate", &est),
                json!({ "mode": mode_name, "allowed_failure_rate": allowed, "pass": pass }),
            ]);
            let table = kv_table(&[
                ("rule", "majority".into()),
                ("mode", mode_name.into()),
                ("n", n.to_string()),
                ("trials", trials.to_string()),
                ("seed", seed.to_string()),
                ("bound_n_prime", bound.n_prime.to_string()),
                ("failure_rate", est.rate.to_string()),
                ("std_err", est.std_err.to_string()),
                ("allowed_failure_rate", allowed.to_string()),
                ("pass", pass.to_string()),
            ]);
            (body, pass, table)
        }
        RuleArg::Average => {
            let gamma = truth.mean();
            let scale = params.scale();
            let (epsilon, target_error) =
                resolve_epsilon(args.epsilon, args.target_error, scale, Some(gamma))?;
            echo.epsilon = Some(epsilon);
            echo.target_error = target_error;
            echo.gamma = Some(gamma);
            let (interval, inputs) = match profile {
                MisbehaviorProfile::Honest => {
                    average_random_interval(&params, epsilon, 0.0, delta)?
                }
                MisbehaviorProfile::Random { fraction } => {
                    average_random_interval(&params, epsilon, fraction, delta)?
                }
                MisbehaviorProfile::Biased { fraction, target } => {
                    average_biased_interval(&params, epsilon, fraction, target, delta)?
                }
            };
            let n = args.n.unwrap_or(interval.n_required);
            echo.n = Some(n);
            let config = SimConfig::new(params.clone(), profile, n, trials, seed)?
                .with_sampler(sampler)
                .with_assignment(assignment);
            let quantile_level = 1.0 - delta;
            let quantile = estimate_abs_error_quantile(&config, &truth, quantile_level)?;
            let pass = quantile >= interval.lower && quantile <= interval.upper;
            let body = merge_bodies(vec![
                to_body("interval", &interval),
                to_body("inputs", &inputs),
                json!({
                    "quantile_level": quantile_level,
                    "abs_error_quantile": quantile,
                    "pass": pass,
                }),
            ]);
            let table = kv_table(&[
                ("rule", "average".into()),
                ("n", n.to_string()),
                ("trials", trials.to_string()),
                ("seed", seed.to_string()),
                ("interval_lower", interval.lower.to_string()),
                ("interval_upper", interval.upper.to_string()),
                ("abs_error_quantile", quantile.to_string()),
                ("pass", pass.to_string()),
            ]);
            (body, pass, table)
        }
    };

    let text = match ctx.format {
        Format::Json => json_envelope(&echo, body),
        Format::Table => table,
        Format::Csv => {
            let pass_row = vec![rule_name(args.rule).into(), pass.to_string()];
            csv_table(&["rule", "pass"], &[pass_row])
        }
    };
    Ok(CommandOutput {
        text,
        exit_code: if pass { 0 } else { 1 },
    })
}

#[derive(Serialize)]
struct InferredRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    item_id: Option<String>,
    n: u64,
    gamma_hat: f64,
    alpha_hat: Vec<f64>,
}

/// Either the anonymous counts item or every history from a dataset.
fn input_multisets(
    ctx: &Ctx,
    counts: Option<&[u64]>,
    dataset: Option<&Path>,
    m: Option<usize>,
) -> Result<Vec<(Option<String>, RatingMultiset)>, CliError> {
    match (counts, dataset) {
        (Some(counts), None) => {
            if let Some(m) = m {
                if m != counts.len() {
                    return Err(usage(format!(
                        "--counts has {} levels but --m is {m}",
                        counts.len()
                    )));
                }
            }
            Ok(vec![(None, RatingMultiset::from_counts(counts.to_vec())?)])
        }
        (None, Some(path)) => {
            let m = ctx
                .m(m)?
                .ok_or_else(|| usage("--dataset requires --m (the number of rating levels)"))?;
            let scale = RatingScale::new(m)?;
            let histories = ingest_path(path, scale)?;
            histories
                .iter()
                .map(|h| Ok((Some(h.item_id.clone()), h.multiset(scale)?)))
                .collect()
        }
        _ => Err(usage("give exactly one of --counts or --dataset")),
    }
}

pub fn cmd_infer_alpha(ctx: &Ctx, args: &InferAlphaArgs) -> Result<CommandOutput, CliError> {
    let inputs = input_multisets(
        ctx,
        args.counts.as_ref().map(|c| c.0.as_slice()),
        args.dataset.as_deref(),
        args.m,
    )?;
    let mut rows = Vec::new();
    for (item_id, set) in &inputs {
        let inferred = infer_alpha(set)?;
        rows.push(InferredRow {
            item_id: item_id.clone(),
            n: inferred.n(),
            gamma_hat: inferred.gamma_hat(),
            alpha_hat: inferred.alpha_hat().to_vec(),
        });
    }
    let echo = ConfigEcho {
        command: "infer-alpha",
        counts: args.counts.as_ref().map(|c| c.0.clone()),
        dataset: args.dataset.as_ref().map(|p| p.display().to_string()),
        m: rows.first().map(|r| r.alpha_hat.len()),
        ..Default::default()
    };
    let text = match ctx.format {
        Format::Json => json_envelope(&echo, to_body("items", &rows)),
        Format::Table => {
            let mut out = String::new();
            for row in &rows {
                let alpha = row
                    .alpha_hat
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&kv_table(&[
                    ("item", row.item_id.clone().unwrap_or_else(|| "-".into())),
                    ("n", row.n.to_string()),
                    ("gamma_hat", row.gamma_hat.to_string()),
                    ("alpha_hat", alpha),
                ]));
                out.push('\n');
            }
            out
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.item_id.clone().unwrap_or_default(),
                        r.n.to_string(),
                        r.gamma_hat.to_string(),
                        r.alpha_hat
                            .iter()
                            .map(f64::to_string)
                            .collect::<Vec<_>>()
                            .join(";"),
                    ]
                })
                .collect();
            csv_table(&["item_id", "n", "gamma_hat", "alpha_hat"], &rows)
        }
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

#[derive(Serialize)]
struct MinRatingsRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    item_id: Option<String>,
    ratings_used: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_prime: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    /// Whether the history already meets its inferred requirement.
    #[serde(skip_serializing_if = "Option::is_none")]
    satisfied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn cmd_infer_min(ctx: &Ctx, args: &InferMinArgs) -> Result<CommandOutput, CliError> {
    let rule = rule_of(args.rule);
    let delta = ctx.delta(args.delta)?;
    if rule == AggregationRule::AverageScore && args.target_error.is_none() {
        return Err(usage("--rule average requires --target-error"));
    }

    let inputs: Vec<(Option<String>, RatingMultiset)> = match (&args.counts, &args.dataset) {
        (Some(counts), None) => vec![(None, RatingMultiset::from_counts(counts.0.clone())?)],
        (None, Some(path)) => {
            let m = ctx
                .m(args.m)?
                .ok_or_else(|| usage("--dataset requires --m (the number of rating levels)"))?;
            let scale = RatingScale::new(m)?;
            let histories = ingest_path(path, scale)?;
            histories
                .iter()
                .map(|h| {
                    let events: Vec<usize> = match args.prefix {
                        Some(t) => h.ratings().take(t as usize).collect(),
                        None => h.ratings().collect(),
                    };
                    Ok((
                        Some(h.item_id.clone()),
                        RatingMultiset::from_ratings(scale, events)?,
                    ))
                })
                .collect::<Result<_, CliError>>()?
        }
        _ => return Err(usage("give exactly one of --counts or --dataset")),
    };

    let single_item = inputs.len() == 1;
    let mut rows = Vec::new();
    for (item_id, set) in &inputs {
        match infer_min_ratings(set, rule, delta, args.target_error) {
            Ok(bound) => rows.push(MinRatingsRow {
                item_id: item_id.clone(),
                ratings_used: set.n(),
                raw: Some(bound.raw),
                n_prime: Some(bound.n_prime),
                epsilon: bound.inputs.epsilon,
                satisfied: Some(set.n() >= bound.n_prime),
                error: None,
            }),
            // Per-item failures are data, not a run failure, when scanning a
            // dataset; a single-item run propagates them.
            Err(err) if !single_item => rows.push(MinRatingsRow {
                item_id: item_id.clone(),
                ratings_used: set.n(),
                raw: None,
                n_prime: None,
                epsilon: None,
                satisfied: None,
                error: Some(err.to_string()),
            }),
            Err(err) => return Err(err.into()),
        }
    }

    let echo = ConfigEcho {
        command: "infer-min",
        rule: Some(rule_name(args.rule)),
        delta: Some(delta),
        target_error: args.target_error,
        counts: args.counts.as_ref().map(|c| c.0.clone()),
        dataset: args.dataset.as_ref().map(|p| p.display().to_string()),
        prefix: args.prefix,
        ..Default::default()
    };
    let text = match ctx.format {
        Format::Json => json_envelope(&echo, to_body("items", &rows)),
        Format::Table => {
            let table_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.item_id.clone().unwrap_or_else(|| "-".into()),
                        r.ratings_used.to_string(),
                        r.n_prime.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                        r.satisfied
                            .map(|s| s.to_string())
                            .or_else(|| r.error.clone())
                            .unwrap_or_default(),
                    ]
                })
                .collect();
            columns_table(&["item_id", "ratings_used", "n_prime", "status"], &table_rows)
        }
        Format::Csv => {
            let csv_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.item_id.clone().unwrap_or_default(),
                        r.ratings_used.to_string(),
                        r.raw.map(|x| x.to_string()).unwrap_or_default(),
                        r.n_prime.map(|x| x.to_string()).unwrap_or_default(),
                        r.satisfied.map(|x| x.to_string()).unwrap_or_default(),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_table(
                &["item_id", "ratings_used", "raw", "n_prime", "satisfied", "error"],
                &csv_rows,
            )
        }
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

fn load_histories(
    ctx: &Ctx,
    dataset: &Path,
    m: Option<usize>,
) -> Result<(Vec<ItemHistory>, RatingScale), CliError> {
    let m = ctx
        .m(m)?
        .ok_or_else(|| usage("--dataset requires --m (the number of rating levels)"))?;
    let scale = RatingScale::new(m)?;
    Ok((ingest_path(dataset, scale)?, scale))
}

fn validation_output(
    ctx: &Ctx,
    echo: &ConfigEcho,
    report: &harness::ValidationReport,
) -> CommandOutput {
    let text = match ctx.format {
        Format::Json => json_envelope(echo, to_body("report", report)),
        Format::Table => kv_table(&[
            (
                "rule",
                match report.rule {
                    AggregationRule::Majority => "majority".into(),
                    AggregationRule::AverageScore => "average".into(),
                },
            ),
            ("delta", report.delta.to_string()),
            ("items", report.per_item.len().to_string()),
            ("skipped", report.skipped.len().to_string()),
            ("n_test", report.n_test.to_string()),
            ("n_reliable", report.n_reliable.to_string()),
            ("f_reliable", report.f_reliable.to_string()),
            ("tied_evaluations", report.tied_evaluations.to_string()),
        ]),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .per_item
                .iter()
                .map(|item| {
                    vec![
                        item.item_id.clone(),
                        item.n_prime.to_string(),
                        item.true_label.map(|l| l.to_string()).unwrap_or_default(),
                        item.true_mean.map(|g| g.to_string()).unwrap_or_default(),
                        item.tested.to_string(),
                        item.reliable.to_string(),
                    ]
                })
                .collect();
            csv_table(
                &["item_id", "n_prime", "true_label", "true_mean", "tested", "reliable"],
                &rows,
            )
        }
    };
    CommandOutput { text, exit_code: 0 }
}

pub fn cmd_validate(
    ctx: &Ctx,
    args: &ValidateArgs,
    online: bool,
) -> Result<CommandOutput, CliError> {
    let rule = rule_of(args.rule);
    let delta = ctx.delta(args.delta)?;
    let (histories, scale) = load_histories(ctx, &args.dataset, args.m)?;
    let report = if online {
        validate_online(&histories, scale, rule, delta, args.target_error)?
    } else {
        validate(&histories, scale, rule, delta, args.target_error)?
    };
    let echo = ConfigEcho {
        command: if online { "validate-online" } else { "validate" },
        rule: Some(rule_name(args.rule)),
        m: Some(scale.m()),
        delta: Some(delta),
        target_error: args.target_error,
        dataset: Some(args.dataset.display().to_string()),
        ..Default::default()
    };
    Ok(validation_output(ctx, &echo, &report))
}

pub fn cmd_survival(ctx: &Ctx, args: &SurvivalArgs) -> Result<CommandOutput, CliError> {
    let rule = rule_of(args.rule);
    let delta = ctx.delta(args.delta)?;
    let (histories, scale) = load_histories(ctx, &args.dataset, args.m)?;
    let stats = min_ratings_distribution(
        &histories,
        scale,
        rule,
        delta,
        args.target_error,
        &args.thresholds.0,
        args.reference,
    )?;
    if let Some(path) = &args.curve_out {
        let file = std::fs::File::create(path)?;
        stats.write_curve_csv(std::io::BufWriter::new(file))?;
    }
    let echo = ConfigEcho {
        command: "survival",
        rule: Some(rule_name(args.rule)),
        m: Some(scale.m()),
        delta: Some(delta),
        target_error: args.target_error,
        dataset: Some(args.dataset.display().to_string()),
        thresholds: Some(args.thresholds.0.clone()),
        reference: args.reference,
        curve_out: args.curve_out.as_ref().map(|p| p.display().to_string()),
        ..Default::default()
    };
    let text = match ctx.format {
        Format::Json => json_envelope(&echo, to_body("stats", &stats)),
        Format::Table => {
            let mut rows = vec![
                ("items", stats.items.to_string()),
                ("skipped", stats.skipped.to_string()),
                ("reference_n", stats.reference_n.to_string()),
                ("n_satisfying", stats.n_satisfying.to_string()),
                ("f_satisfying", stats.f_satisfying.to_string()),
            ];
            let curve: Vec<String> = stats
                .thresholds
                .iter()
                .zip(&stats.survival)
                .map(|(t, s)| format!("{t}:{s}"))
                .collect();
            let joined = curve.join("  ");
            rows.push(("survival", joined));
            kv_table(&rows)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            stats
                .write_curve_csv(&mut buf)
                .expect("in-memory write succeeds");
            String::from_utf8(buf).expect("curve is utf-8")
        }
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

pub fn cmd_synth(ctx: &Ctx, args: &SynthArgs) -> Result<CommandOutput, CliError> {
    let profile = build_profile(&args.profile)?;
    let seed = ctx.seed(args.seed)?;
    let (sampler, sampler_name) = sampler_of(args.sampler);
    let (assignment, assignment_name) = assignment_of(args.assignment);
    let m = args
        .m
        .or(ctx.m(None)?)
        .or(args.alpha.as_ref().map(|a| a.0.len()))
        .ok_or_else(|| usage("--m is required (or give --alpha)"))?;
    let scale = RatingScale::new(m)?;
    let alpha = match (&args.alpha, args.concentration) {
        (Some(alpha), None) => AlphaSampling::Fixed {
            params: params_from(&alpha.0)?,
        },
        (None, concentration) => AlphaSampling::Prior {
            concentration: concentration.unwrap_or(1.0),
        },
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let spec = SynthSpec {
        scale,
        items: args.items,
        ratings_per_item: args.ratings,
        alpha,
        profile,
        sampler,
        assignment,
        seed,
    };
    let dataset = generate_synthetic(&spec)?;

    let truth_out = args.truth_out.clone().unwrap_or_else(|| {
        let mut p = args.out.as_os_str().to_owned();
        p.push(".truth.jsonl");
        PathBuf::from(p)
    });
    let out_file = std::fs::File::create(&args.out)?;
    dataset.write_csv(std::io::BufWriter::new(out_file))?;
    let truth_file = std::fs::File::create(&truth_out)?;
    dataset.write_truth_jsonl(std::io::BufWriter::new(truth_file))?;

    let total_events: usize = dataset.items.iter().map(|i| i.events.len()).sum();
    let echo = ConfigEcho {
        command: "synth",
        m: Some(m),
        profile: Some(profile),
        alpha: args.alpha.as_ref().map(|a| a.0.clone()),
        concentration: match (&args.alpha, args.concentration) {
            (None, c) => Some(c.unwrap_or(1.0)),
            _ => None,
        },
        items: Some(args.items),
        ratings_per_item: Some(args.ratings),
        seed: Some(seed),
        sampler: Some(sampler_name),
        assignment: Some(assignment_name),
        out: Some(args.out.display().to_string()),
        truth_out: Some(truth_out.display().to_string()),
        ..Default::default()
    };
    let body = json!({ "events_written": total_events });
    let text = match ctx.format {
        Format::Json => json_envelope(&echo, body),
        Format::Table | Format::Csv => kv_table(&[
            ("items", args.items.to_string()),
            ("ratings_per_item", args.ratings.to_string()),
            ("events_written", total_events.to_string()),
            ("out", args.out.display().to_string()),
            ("truth_out", truth_out.display().to_string()),
            ("seed", seed.to_string()),
        ]),
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

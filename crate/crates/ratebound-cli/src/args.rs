//! Command-line surface. Flags mirror the library operations; a key=value
//! config file (`--config`) can supply defaults for `seed`, `delta`,
//! `trials`, `format`, and `m`, and `RATEBOUND_SEED` sets the default seed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::parse::{parse_alpha, parse_u64_list};

#[derive(Debug, Parser)]
#[command(
    name = "ratebound",
    version,
    about = "Reliability bounds and validation tools for online rating aggregation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format (json is the stable machine contract)
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,

    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// key=value file with defaults for seed, delta, trials, format, m
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form minimum-rating bounds and error intervals
    Bound(BoundArgs),
    /// Fraction of biased raters needed to control the majority label
    Threshold(ThresholdArgs),
    /// Verify a bound empirically with seeded Monte Carlo trials
    McVerify(McVerifyArgs),
    /// Maximum-likelihood estimate of the behavior vector
    InferAlpha(InferAlphaArgs),
    /// Infer the minimum-rating requirement from rating history
    InferMin(InferMinArgs),
    /// Replay rating logs: test every prefix past the requirement
    Validate(ValidateArgs),
    /// Replay with the requirement re-inferred at every prefix
    ValidateOnline(ValidateArgs),
    /// Survival curve of per-item minimum-rating requirements
    Survival(SurvivalArgs),
    /// Generate a synthetic rating log with a ground-truth sidecar
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Majority,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MisbehaviorArg {
    Honest,
    Random,
    Biased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// How many ratings the honest majority needs despite the attack
    Resist,
    /// How many ratings the attackers need to win
    Win,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Marginal,
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AssignmentArg {
    Iid,
    ExactCount,
}

/// Comma-separated alpha vector; entries may be fractions or decimals.
#[derive(Debug, Clone)]
pub struct AlphaArg(pub Vec<f64>);

pub fn parse_alpha_arg(s: &str) -> Result<AlphaArg, String> {
    parse_alpha(s).map(AlphaArg)
}

/// Comma-separated list of non-negative integers.
#[derive(Debug, Clone)]
pub struct U64ListArg(pub Vec<u64>);

pub fn parse_u64_list_arg(s: &str) -> Result<U64ListArg, String> {
    parse_u64_list(s).map(U64ListArg)
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Contamination model for the rating population
    #[arg(long, value_enum, default_value_t = MisbehaviorArg::Honest)]
    pub misbehavior: MisbehaviorArg,

    /// Misbehaving fraction (f for random, f' for biased)
    #[arg(long)]
    pub fraction: Option<f64>,

    /// Level the biased raters push
    #[arg(long)]
    pub target: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, value_enum)]
    pub rule: RuleArg,

    /// Behavior vector, e.g. 4/35,25/35,3/35,2/35,1/35
    #[arg(long, value_parser = parse_alpha_arg)]
    pub alpha: Option<AlphaArg>,

    /// Failure probability budget (bound holds with probability 1-delta)
    #[arg(long)]
    pub delta: Option<f64>,

    #[command(flatten)]
    pub profile: ProfileArgs,

    /// Direction of the biased-misbehavior analysis (majority rule)
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Resist)]
    pub objective: ObjectiveArg,

    /// Rating levels (defaults to the alpha length)
    #[arg(long)]
    pub m: Option<usize>,

    /// Concentration parameter of the average-rule bound
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Absolute error target E_r for the average rule (solved to an epsilon)
    #[arg(long)]
    pub target_error: Option<f64>,

    /// True mean; defaults to the mean implied by --alpha
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, value_parser = parse_alpha_arg)]
    pub alpha: AlphaArg,

    /// Level the biased raters push
    #[arg(long)]
    pub target: usize,
}

#[derive(Debug, Args)]
pub struct McVerifyArgs {
    #[arg(long, value_enum)]
    pub rule: RuleArg,

    #[arg(long, value_parser = parse_alpha_arg)]
    pub alpha: AlphaArg,

    #[arg(long)]
    pub delta: Option<f64>,

    #[command(flatten)]
    pub profile: ProfileArgs,

    #[arg(long, value_enum, default_value_t = ObjectiveArg::Resist)]
    pub objective: ObjectiveArg,

    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long)]
    pub target_error: Option<f64>,

    /// Ratings per trial; defaults to the computed requirement
    #[arg(long)]
    pub n: Option<u64>,

    #[arg(long)]
    pub trials: Option<u64>,

    #[arg(long, env = "RATEBOUND_SEED")]
    pub seed: Option<u64>,

    #[arg(long, value_enum, default_value_t = SamplerArg::Marginal)]
    pub sampler: SamplerArg,

    #[arg(long, value_enum, default_value_t = AssignmentArg::Iid)]
    pub assignment: AssignmentArg,
}

#[derive(Debug, Args)]
pub struct InferAlphaArgs {
    /// Per-level counts, e.g. 2,5,3 (an anonymous single item)
    #[arg(long, value_parser = parse_u64_list_arg, conflicts_with = "dataset")]
    pub counts: Option<U64ListArg>,

    /// Rating log (CSV or JSON-lines)
    #[arg(long)]
    pub dataset: Option<PathBuf>,

    /// Rating levels (required with --dataset)
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InferMinArgs {
    #[arg(long, value_parser = parse_u64_list_arg, conflicts_with = "dataset")]
    pub counts: Option<U64ListArg>,

    #[arg(long)]
    pub dataset: Option<PathBuf>,

    #[arg(long)]
    pub m: Option<usize>,

    #[arg(long, value_enum)]
    pub rule: RuleArg,

    #[arg(long)]
    pub delta: Option<f64>,

    /// Absolute error target E_r (required for the average rule)
    #[arg(long)]
    pub target_error: Option<f64>,

    /// Use only the first T ratings of each history
    #[arg(long, conflicts_with = "counts")]
    pub prefix: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    #[arg(long)]
    pub m: Option<usize>,

    #[arg(long, value_enum)]
    pub rule: RuleArg,

    #[arg(long)]
    pub delta: Option<f64>,

    #[arg(long)]
    pub target_error: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SurvivalArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    #[arg(long)]
    pub m: Option<usize>,

    #[arg(long, value_enum)]
    pub rule: RuleArg,

    #[arg(long)]
    pub delta: Option<f64>,

    #[arg(long)]
    pub target_error: Option<f64>,

    /// Ascending thresholds for the survival curve, e.g. 100,200,400
    #[arg(long, value_parser = parse_u64_list_arg)]
    pub thresholds: U64ListArg,

    /// Satisfaction cutoff; defaults to the median per-item requirement
    #[arg(long)]
    pub reference: Option<f64>,

    /// Also write the survival curve as two-column CSV
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub items: usize,

    /// Ratings per item
    #[arg(long)]
    pub ratings: u64,

    #[arg(long)]
    pub m: Option<usize>,

    /// Fixed behavior vector shared by all items
    #[arg(long, value_parser = parse_alpha_arg, conflicts_with = "concentration")]
    pub alpha: Option<AlphaArg>,

    /// Symmetric Dirichlet concentration for per-item vectors (default 1.0)
    #[arg(long)]
    pub concentration: Option<f64>,

    #[command(flatten)]
    pub profile: ProfileArgs,

    #[arg(long, value_enum, default_value_t = SamplerArg::Marginal)]
    pub sampler: SamplerArg,

    #[arg(long, value_enum, default_value_t = AssignmentArg::Iid)]
    pub assignment: AssignmentArg,

    #[arg(long, env = "RATEBOUND_SEED")]
    pub seed: Option<u64>,

    /// Rating-log output path (CSV)
    #[arg(long)]
    pub out: PathBuf,

    /// Ground-truth sidecar path (defaults to <out>.truth.jsonl)
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

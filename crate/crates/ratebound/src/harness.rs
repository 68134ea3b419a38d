//! Time-stamped rating-log harness: ingestion, the prefix-replay validation
//! procedure (offline and online variants), minimum-rating distribution
//! statistics, and deterministic synthetic dataset generation.
//!
//! Input format: UTF-8 CSV with header `item_id,user_id,rating,timestamp`
//! (rating an integer in `1..=m`, timestamp integer epoch seconds), or
//! JSON-lines with the same field names. Ground-truth sidecars are JSON-lines
//! `{item_id, alpha, label, gamma}`.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{average_score, majority_label, AggregationRule};
use crate::error::{Error, Result};
use crate::infer::{infer_alpha, infer_min_ratings};
use crate::model::{DirichletParams, MisbehaviorProfile, RatingMultiset, RatingScale};
use crate::sim::{sample_levels, trial_rng, AttackerAssignment, SamplerKind, SimConfig};

/// One time-stamped rating of one item by one user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingEvent {
    pub item_id: String,
    pub user_id: String,
    pub rating: usize,
    pub timestamp: u64,
}

/// All ratings of one item, sorted by timestamp (ties keep input order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemHistory {
    pub item_id: String,
    pub events: Vec<RatingEvent>,
}

impl ItemHistory {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn ratings(&self) -> impl Iterator<Item = usize> + '_ {
        self.events.iter().map(|e| e.rating)
    }

    pub fn multiset(&self, scale: RatingScale) -> Result<RatingMultiset> {
        RatingMultiset::from_ratings(scale, self.ratings())
    }
}

fn group_events(events: Vec<RatingEvent>) -> Vec<ItemHistory> {
    let mut by_item: std::collections::BTreeMap<String, Vec<RatingEvent>> =
        std::collections::BTreeMap::new();
    for ev in events {
        by_item.entry(ev.item_id.clone()).or_default().push(ev);
    }
    by_item
        .into_iter()
        .map(|(item_id, mut events)| {
            // Stable sort: equal timestamps keep input order.
            events.sort_by_key(|e| e.timestamp);
            ItemHistory { item_id, events }
        })
        .collect()
}

/// Ingests a CSV rating log, grouping by item and sorting by timestamp.
pub fn ingest_csv<R: Read>(reader: R, scale: RatingScale) -> Result<Vec<ItemHistory>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let ev: RatingEvent = record.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        scale.check(ev.rating)?;
        events.push(ev);
    }
    Ok(group_events(events))
}

/// Ingests a JSON-lines rating log with the same fields as the CSV format.
pub fn ingest_jsonl<R: BufRead>(reader: R, scale: RatingScale) -> Result<Vec<ItemHistory>> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: RatingEvent = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        scale.check(ev.rating)?;
        events.push(ev);
    }
    Ok(group_events(events))
}

/// Ingests a rating log, picking the format from the file extension
/// (`.jsonl`/`.ndjson`/`.json` as JSON-lines, anything else as CSV).
pub fn ingest_path<P: AsRef<Path>>(path: P, scale: RatingScale) -> Result<Vec<ItemHistory>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "jsonl" | "ndjson" | "json" => ingest_jsonl(std::io::BufReader::new(file), scale),
        _ => ingest_csv(std::io::BufReader::new(file), scale),
    }
}

/// Per-item outcome of a validation run.
#[derive(Debug, Clone, Serialize)]
pub struct ItemValidation {
    pub item_id: String,
    /// Minimum number of ratings required for this item (full-history for the
    /// offline procedure; prefixes below it are not tested).
    pub n_prime: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_label: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_mean: Option<f64>,
    pub tested: u64,
    pub reliable: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedItem {
    pub item_id: String,
    pub reason: String,
}

/// Aggregate result of replaying every qualifying prefix of every item.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rule: AggregationRule,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_error: Option<f64>,
    pub n_test: u64,
    pub n_reliable: u64,
    pub f_reliable: f64,
    /// Majority evaluations whose argmax was tied (broken to lowest level).
    pub tied_evaluations: u64,
    pub per_item: Vec<ItemValidation>,
    pub skipped: Vec<SkippedItem>,
}

enum ItemOutcome {
    Skipped(SkippedItem),
    Counted { item: ItemValidation, tied: u64 },
}

/// Full-history truth for one item: the bound plus the quality the prefixes
/// are judged against.
struct ItemTruth {
    n_prime: u64,
    label: Option<usize>,
    mean: Option<f64>,
}

/// `None` when the majority truth is degenerate (tied top counts).
fn full_history_truth(
    full: &RatingMultiset,
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
) -> Result<Option<ItemTruth>> {
    match infer_min_ratings(full, rule, delta, target_error) {
        Ok(bound) => {
            let (label, mean) = match rule {
                AggregationRule::Majority => {
                    (majority_label(full)?.label, None)
                }
                AggregationRule::AverageScore => {
                    (None, Some(infer_alpha(full)?.gamma_hat()))
                }
            };
            Ok(Some(ItemTruth {
                n_prime: bound.n_prime.max(1),
                label,
                mean,
            }))
        }
        Err(Error::DegenerateMajority) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Is this prefix aggregate a faithful reflection of the full-history truth?
/// Majority: the prefix label matches. Average: the prefix score is within
/// the same error target used to size the bound.
fn prefix_reliable(
    prefix: &RatingMultiset,
    rule: AggregationRule,
    true_label: Option<usize>,
    true_mean: Option<f64>,
    target_error: Option<f64>,
    tied: &mut u64,
) -> Result<bool> {
    match rule {
        AggregationRule::Majority => {
            let res = majority_label(prefix)?;
            if res.tied {
                *tied += 1;
            }
            Ok(res.label == true_label)
        }
        AggregationRule::AverageScore => {
            let score = average_score(prefix)?.score.expect("average rule");
            Ok((score - true_mean.expect("average truth")).abs()
                <= target_error.expect("average target"))
        }
    }
}

fn check_validation_args(
    histories: &[ItemHistory],
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
) -> Result<()> {
    if histories.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidDelta(delta));
    }
    if rule == AggregationRule::AverageScore && target_error.is_none() {
        return Err(Error::InvalidInputs(
            "target_error is required for the average scoring rule".into(),
        ));
    }
    Ok(())
}

fn assemble_report(
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
    outcomes: Vec<ItemOutcome>,
) -> ValidationReport {
    let mut report = ValidationReport {
        rule,
        delta,
        target_error,
        n_test: 0,
        n_reliable: 0,
        f_reliable: 0.0,
        tied_evaluations: 0,
        per_item: Vec::new(),
        skipped: Vec::new(),
    };
    for outcome in outcomes {
        match outcome {
            ItemOutcome::Skipped(s) => report.skipped.push(s),
            ItemOutcome::Counted { item, tied } => {
                report.n_test += item.tested;
                report.n_reliable += item.reliable;
                report.tied_evaluations += tied;
                report.per_item.push(item);
            }
        }
    }
    if report.n_test > 0 {
        report.f_reliable = report.n_reliable as f64 / report.n_test as f64;
    }
    report
}

/// Offline validation: per item, fix the bound and the truth from the full
/// history, then count every prefix of length `n' ..= full length` and how
/// many of them reflect the truth.
pub fn validate(
    histories: &[ItemHistory],
    scale: RatingScale,
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
) -> Result<ValidationReport> {
    check_validation_args(histories, rule, delta, target_error)?;
    let outcomes: Vec<ItemOutcome> = histories
        .par_iter()
        .map(|item| validate_item(item, scale, rule, delta, target_error))
        .collect::<Result<_>>()?;
    Ok(assemble_report(rule, delta, target_error, outcomes))
}

fn validate_item(
    item: &ItemHistory,
    scale: RatingScale,
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
) -> Result<ItemOutcome> {
    if item.is_empty() {
        return Ok(ItemOutcome::Skipped(SkippedItem {
            item_id: item.item_id.clone(),
            reason: "empty history".into(),
        }));
    }
    let full = item.multiset(scale)?;
    let Some(truth) = full_history_truth(&full, rule, delta, target_error)? else {
        return Ok(ItemOutcome::Skipped(SkippedItem {
            item_id: item.item_id.clone(),
            reason: "degenerate majority (tied top counts)".into(),
        }));
    };
    let mut prefix = RatingMultiset::empty(scale);
    let mut tested = 0u64;
    let mut reliable = 0u64;
    let mut tied = 0u64;
    for (idx, rating) in item.ratings().enumerate() {
        prefix.add(rating)?;
        if (idx as u64 + 1) < truth.n_prime {
            continue;
        }
        tested += 1;
        if prefix_reliable(&prefix, rule, truth.label, truth.mean, target_error, &mut tied)? {
            reliable += 1;
        }
    }
    Ok(ItemOutcome::Counted {
        item: ItemValidation {
            item_id: item.item_id.clone(),
            n_prime: truth.n_prime,
            true_label: truth.label,
            true_mean: truth.mean,
            tested,
            reliable,
        },
        tied,
    })
}

/// Online validation: at each prefix the minimum-rating requirement is
/// re-inferred from that prefix alone; the prefix is tested once its length
/// reaches the inferred requirement. Reliability is still judged against the
/// full-history truth. Prefixes whose inferred majority is degenerate are
/// skipped; the item stays in.
pub fn validate_online(
    histories: &[ItemHistory],
    scale: RatingScale,
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
) -> Result<ValidationReport> {
    check_validation_args(histories, rule, delta, target_error)?;
    let outcomes: Vec<ItemOutcome> = histories
        .par_iter()
        .map(|item| validate_online_item(item, scale, rule, delta, target_error))
        .collect::<Result<_>>()?;
    Ok(assemble_report(rule, delta, target_error, outcomes))
}

fn validate_online_item(
    item: &ItemHistory,
    scale: RatingScale,
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
) -> Result<ItemOutcome> {
    if item.is_empty() {
        return Ok(ItemOutcome::Skipped(SkippedItem {
            item_id: item.item_id.clone(),
            reason: "empty history".into(),
        }));
    }
    let full = item.multiset(scale)?;
    let Some(truth) = full_history_truth(&full, rule, delta, target_error)? else {
        return Ok(ItemOutcome::Skipped(SkippedItem {
            item_id: item.item_id.clone(),
            reason: "degenerate majority (tied top counts)".into(),
        }));
    };
    let mut prefix = RatingMultiset::empty(scale);
    let mut tested = 0u64;
    let mut reliable = 0u64;
    let mut tied = 0u64;
    for (idx, rating) in item.ratings().enumerate() {
        prefix.add(rating)?;
        let inferred = match infer_min_ratings(&prefix, rule, delta, target_error) {
            Ok(bound) => bound.n_prime.max(1),
            Err(Error::DegenerateMajority) => continue,
            Err(e) => return Err(e),
        };
        if (idx as u64 + 1) < inferred {
            continue;
        }
        tested += 1;
        if prefix_reliable(&prefix, rule, truth.label, truth.mean, target_error, &mut tied)? {
            reliable += 1;
        }
    }
    Ok(ItemOutcome::Counted {
        item: ItemValidation {
            item_id: item.item_id.clone(),
            n_prime: truth.n_prime,
            true_label: truth.label,
            true_mean: truth.mean,
            tested,
            reliable,
        },
        tied,
    })
}

/// Distribution of per-item minimum-rating requirements: a survival curve
/// over the given thresholds plus the fraction of items whose actual rating
/// count satisfies a reference requirement (the per-rule median by default).
#[derive(Debug, Clone, Serialize)]
pub struct DistributionStats {
    pub rule: AggregationRule,
    pub delta: f64,
    pub thresholds: Vec<u64>,
    /// `survival[i]` = fraction of items with `n' >= thresholds[i]`.
    pub survival: Vec<f64>,
    pub reference_n: f64,
    pub n_satisfying: u64,
    pub f_satisfying: f64,
    pub items: u64,
    pub skipped: u64,
}

impl DistributionStats {
    /// Writes the survival curve as two-column CSV `(n, Pr[n' >= n])`.
    pub fn write_curve_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "n,pr_n_prime_ge_n")?;
        for (t, s) in self.thresholds.iter().zip(&self.survival) {
            writeln!(writer, "{t},{s}")?;
        }
        Ok(())
    }
}

fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

/// Computes per-item minimum-rating requirements and their survival curve.
/// `reference` overrides the satisfaction cutoff; `None` uses the median of
/// the per-item requirements.
pub fn min_ratings_distribution(
    histories: &[ItemHistory],
    scale: RatingScale,
    rule: AggregationRule,
    delta: f64,
    target_error: Option<f64>,
    thresholds: &[u64],
    reference: Option<f64>,
) -> Result<DistributionStats> {
    check_validation_args(histories, rule, delta, target_error)?;
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInputs(
            "thresholds must be sorted ascending".into(),
        ));
    }
    let mut n_primes = Vec::with_capacity(histories.len());
    let mut skipped = 0u64;
    for item in histories {
        if item.is_empty() {
            skipped += 1;
            continue;
        }
        let full = item.multiset(scale)?;
        match infer_min_ratings(&full, rule, delta, target_error) {
            Ok(bound) => n_primes.push(bound.n_prime.max(1)),
            Err(Error::DegenerateMajority) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if n_primes.is_empty() {
        return Err(Error::InvalidInputs(
            "no item has a well-defined minimum-rating requirement".into(),
        ));
    }
    let survival: Vec<f64> = thresholds
        .iter()
        .map(|&t| n_primes.iter().filter(|&&np| np >= t).count() as f64 / n_primes.len() as f64)
        .collect();
    let mut sorted = n_primes.clone();
    sorted.sort_unstable();
    let reference_n = reference.unwrap_or_else(|| median(&sorted));
    let n_satisfying = histories
        .iter()
        .filter(|h| h.len() as f64 >= reference_n)
        .count() as u64;
    Ok(DistributionStats {
        rule,
        delta,
        thresholds: thresholds.to_vec(),
        survival,
        reference_n,
        n_satisfying,
        f_satisfying: n_satisfying as f64 / histories.len() as f64,
        items: histories.len() as u64,
        skipped,
    })
}

/// How per-item behavior vectors are chosen for synthetic data.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSampling {
    /// Every item shares one vector.
    Fixed { params: DirichletParams },
    /// Per-item draw from a symmetric Dirichlet with this concentration.
    Prior { concentration: f64 },
}

/// Recipe for a synthetic dataset with known ground truth.
#[derive(Debug, Clone, Serialize)]
pub struct SynthSpec {
    pub scale: RatingScale,
    pub items: usize,
    pub ratings_per_item: u64,
    pub alpha: AlphaSampling,
    pub profile: MisbehaviorProfile,
    pub sampler: SamplerKind,
    pub assignment: AttackerAssignment,
    pub seed: u64,
}

/// Ground-truth sidecar record for one synthetic item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthRecord {
    pub item_id: String,
    pub alpha: Vec<f64>,
    pub label: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticItem {
    pub truth: TruthRecord,
    pub events: Vec<RatingEvent>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub items: Vec<SyntheticItem>,
}

impl SyntheticDataset {
    pub fn histories(&self) -> Vec<ItemHistory> {
        self.items
            .iter()
            .map(|item| ItemHistory {
                item_id: item.truth.item_id.clone(),
                events: item.events.clone(),
            })
            .collect()
    }

    pub fn truths(&self) -> Vec<&TruthRecord> {
        self.items.iter().map(|i| &i.truth).collect()
    }

    /// Writes the rating log in the harness CSV schema.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for item in &self.items {
            for ev in &item.events {
                wtr.serialize(ev).map_err(|e| Error::InvalidInputs(e.to_string()))?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes the ground-truth sidecar as JSON-lines.
    pub fn write_truth_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for item in &self.items {
            serde_json::to_writer(&mut writer, &item.truth)
                .map_err(|e| Error::InvalidInputs(e.to_string()))?;
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Reads a ground-truth sidecar written by [`SyntheticDataset::write_truth_jsonl`].
pub fn read_truth_jsonl<R: BufRead>(reader: R) -> Result<Vec<TruthRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TruthRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx as u64 + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

fn draw_prior_params(
    rng: &mut rand_chacha::ChaCha8Rng,
    m: usize,
    concentration: f64,
) -> Result<DirichletParams> {
    if !concentration.is_finite() || concentration <= 0.0 {
        return Err(Error::InvalidInputs(format!(
            "prior concentration must be positive, got {concentration}"
        )));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidInputs(e.to_string()))?;
    loop {
        let draws: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum <= 0.0 {
            continue;
        }
        let alpha: Vec<f64> = draws.iter().map(|d| d / sum).collect();
        if alpha.iter().any(|&a| a <= 0.0) {
            continue;
        }
        let params = DirichletParams::new(alpha)?;
        if params.ground_truth().is_ok() {
            return Ok(params);
        }
    }
}

/// Generates a deterministic synthetic dataset. Item `i` draws from stream
/// `i` of the seed, so the content of an item does not depend on how many
/// items are requested.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticDataset> {
    if spec.items < 1 || spec.ratings_per_item < 1 {
        return Err(Error::InvalidInputs(
            "need at least 1 item and 1 rating per item".into(),
        ));
    }
    spec.profile.validate_against(spec.scale)?;
    if let AlphaSampling::Fixed { params } = &spec.alpha {
        if params.m() != spec.scale.m() {
            return Err(Error::InvalidInputs(format!(
                "fixed alpha has {} components but the scale has {} levels",
                params.m(),
                spec.scale.m()
            )));
        }
        params.ground_truth()?;
    }
    let mut items = Vec::with_capacity(spec.items);
    for i in 0..spec.items {
        let mut rng = trial_rng(spec.seed, i as u64);
        let params = match &spec.alpha {
            AlphaSampling::Fixed { params } => params.clone(),
            AlphaSampling::Prior { concentration } => {
                draw_prior_params(&mut rng, spec.scale.m(), *concentration)?
            }
        };
        let truth = params.ground_truth()?;
        let item_id = format!("p{i:04}");
        let config = SimConfig {
            params: params.clone(),
            profile: spec.profile,
            n: spec.ratings_per_item,
            trials: 1,
            seed: spec.seed,
            sampler: spec.sampler,
            assignment: spec.assignment,
        };
        let events = sample_levels(&mut rng, &config)
            .into_iter()
            .enumerate()
            .map(|(j, rating)| RatingEvent {
                item_id: item_id.clone(),
                user_id: format!("u{i:04}_{j:05}"),
                rating,
                timestamp: j as u64,
            })
            .collect();
        items.push(SyntheticItem {
            truth: TruthRecord {
                item_id,
                alpha: params.alpha().to_vec(),
                label: truth.label(),
                gamma: truth.mean(),
            },
            events,
        });
    }
    Ok(SyntheticDataset { items })
}

//! The probing-with-noise protocol.
//!
//! For every condition the plan runs `n_runs` seeded repetitions of
//! noise -> train -> score, summarizes the AUCs, and classifies the condition
//! against the vanilla baseline and the two random baselines by CI overlap.
//!
//! Run seeds are `derive_seed(master_seed, condition_id, run_index)`. The
//! noise and probe streams hang off the run seed under separate labels, so
//! either source can be frozen on its own and execution order never matters.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ablate::{self, AblationKind, AblationSpec, NormOrder};
use crate::corpus::{Partition, ProbingDataset};
use crate::embed::{NormStats, SentenceEmbeddingSet};
use crate::error::{Error, Result};
use crate::probe::{self, ProbeConfig};
use crate::rng;
use crate::stats::{self, CiMethod, ConditionSummary, CorrelationReport, RunResult, ScoreMatrix};

pub const DEFAULT_RUNS: usize = 50;

/// Sampling ranges for every norm order, usually taken from [`NormStats`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranges {
    pub norm_l1: (f64, f64),
    pub norm_l2: (f64, f64),
    pub dim: (f64, f64),
}

impl Ranges {
    pub fn norm(&self, order: NormOrder) -> (f64, f64) {
        match order {
            NormOrder::L1 => self.norm_l1,
            NormOrder::L2 => self.norm_l2,
        }
    }
}

impl From<NormStats> for Ranges {
    fn from(s: NormStats) -> Self {
        Ranges {
            norm_l1: s.norm_range(NormOrder::L1),
            norm_l2: s.norm_range(NormOrder::L2),
            dim: s.dim_range(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    /// Uniformly random class scores on the test set; nothing is trained.
    RandomPrediction,
    Transform(AblationSpec),
}

impl Condition {
    /// Parse a condition name such as `vanilla`, `ablate_norm_l1` or
    /// `normalize_l2`. Order suffixes default to L2 where optional.
    pub fn parse(name: &str, ranges: &Ranges) -> Result<Condition> {
        let (base, order) = match name.rsplit_once('_') {
            Some((b, "l1")) => (b, Some(NormOrder::L1)),
            Some((b, "l2")) => (b, Some(NormOrder::L2)),
            _ => (name, None),
        };
        let kind = match base {
            "rand_pred" if order.is_none() => return Ok(Condition::RandomPrediction),
            "vanilla" if order.is_none() => AblationKind::Vanilla,
            "rand_vec" => AblationKind::RandomVector,
            "ablate_dims" => AblationKind::AblateDims,
            "ablate_norm" => AblationKind::AblateNorm,
            "ablate_both" => AblationKind::AblateBoth,
            "normalize" if order.is_some() => AblationKind::Normalize,
            _ => return Err(Error::Config(format!("unknown condition {name:?}"))),
        };
        let order = order.unwrap_or(NormOrder::L2);
        let spec = AblationSpec::new(kind, order, ranges.norm(order), ranges.dim)?;
        Ok(Condition::Transform(spec))
    }

    pub fn id(&self) -> String {
        match self {
            Condition::RandomPrediction => "rand_pred".to_string(),
            Condition::Transform(spec) => {
                let base = match spec.kind {
                    AblationKind::RandomVector => "rand_vec",
                    other => other.as_str(),
                };
                match (spec.kind, spec.norm_order) {
                    (AblationKind::Vanilla, _) => base.to_string(),
                    (AblationKind::Normalize, o) | (_, o @ NormOrder::L1) => {
                        format!("{base}_{}", o.as_str())
                    }
                    _ => base.to_string(),
                }
            }
        }
    }
}

/// The default condition list: both random baselines, vanilla, and the three ablations.
pub fn default_conditions() -> Vec<&'static str> {
    vec!["rand_pred", "rand_vec", "vanilla", "ablate_norm", "ablate_dims", "ablate_both"]
}

fn is_vanilla(id: &str) -> bool {
    id == "vanilla"
}

fn is_random_anchor(id: &str) -> bool {
    id == "rand_pred" || id.starts_with("rand_vec")
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub n_runs: usize,
    pub master_seed: u64,
    pub probe: ProbeConfig,
    pub ci_method: CiMethod,
    /// Reuse run 0's noise for every run.
    pub freeze_noise: bool,
    /// Reuse run 0's probe initialization and shuffling for every run.
    pub freeze_probe: bool,
    /// Train on a seeded subsample of at most this many training examples.
    pub train_limit: Option<usize>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            n_runs: DEFAULT_RUNS,
            master_seed: 0,
            probe: ProbeConfig::default(),
            ci_method: CiMethod::T,
            freeze_noise: false,
            freeze_probe: false,
            train_limit: None,
        }
    }
}

/// Everything needed to run one task under every condition.
#[derive(Debug, Clone)]
pub struct ExperimentPlan<'a> {
    pub task: &'a ProbingDataset,
    pub embeddings: &'a SentenceEmbeddingSet,
    pub conditions: Vec<Condition>,
    pub options: PlanOptions,
    train: Vec<usize>,
    test: Vec<usize>,
    labels: Vec<usize>,
}

impl<'a> ExperimentPlan<'a> {
    pub fn new(
        task: &'a ProbingDataset,
        embeddings: &'a SentenceEmbeddingSet,
        conditions: Vec<Condition>,
        options: PlanOptions,
    ) -> Result<Self> {
        if embeddings.len() != task.len() {
            return Err(Error::Data(format!(
                "{} embeddings for {} examples of task {}",
                embeddings.len(),
                task.len(),
                task.task_name
            )));
        }
        if options.n_runs < 2 {
            return Err(Error::Config("n_runs must be at least 2".into()));
        }
        options.probe.validate()?;
        let ids: Vec<String> = conditions.iter().map(Condition::id).collect();
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(Error::Config(format!("condition {id} listed twice")));
            }
        }
        if !ids.iter().any(|id| is_vanilla(id)) {
            return Err(Error::Config("conditions must include vanilla".into()));
        }
        if !ids.iter().any(|id| id == "rand_pred") || !ids.iter().any(|id| id.starts_with("rand_vec")) {
            return Err(Error::Config(
                "conditions must include both random baselines (rand_pred, rand_vec)".into(),
            ));
        }

        let mut train = task.partition_indices(Partition::Train);
        let test = task.partition_indices(Partition::Test);
        if train.is_empty() || test.is_empty() {
            return Err(Error::Data(format!(
                "task {} needs non-empty train and test partitions",
                task.task_name
            )));
        }
        if let Some(limit) = options.train_limit {
            if limit < train.len() {
                use rand::seq::SliceRandom;
                let mut r = rng::seeded(rng::derive_seed(options.master_seed, "train-subsample", 0));
                train.shuffle(&mut r);
                train.truncate(limit);
                train.sort_unstable();
            }
        }
        let labels = task.labels();
        let first = labels[train[0]];
        if train.iter().all(|&i| labels[i] == first) {
            return Err(Error::Data("training partition contains a single class".into()));
        }
        Ok(ExperimentPlan {
            task,
            embeddings,
            conditions,
            options,
            train,
            test,
            labels,
        })
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    pub fn test_labels(&self) -> Vec<usize> {
        self.test.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn run_seed(&self, condition_id: &str, run_index: usize) -> u64 {
        rng::derive_seed(self.options.master_seed, condition_id, run_index as u64)
    }
}

/// One repetition of one condition.
pub fn run_condition(plan: &ExperimentPlan<'_>, condition: &Condition, run_index: usize) -> Result<RunResult> {
    let id = condition.id();
    if run_index >= plan.options.n_runs {
        return Err(Error::Config(format!(
            "run index {run_index} out of range for {} runs",
            plan.options.n_runs
        )));
    }
    let seed = plan.run_seed(&id, run_index);
    let frozen = plan.run_seed(&id, 0);
    let noise_seed = rng::derive_seed(if plan.options.freeze_noise { frozen } else { seed }, "noise", 0);
    let probe_seed = rng::derive_seed(if plan.options.freeze_probe { frozen } else { seed }, "probe", 0);
    let test_labels = plan.test_labels();
    let k = plan.task.n_classes;

    let auc = match condition {
        Condition::RandomPrediction => {
            let scores = random_scores(plan.test.len(), k, noise_seed)?;
            stats::auc_roc(&scores, &test_labels)
        }
        Condition::Transform(spec) => (|| {
            let train = ablate::apply_condition_indexed(plan.embeddings, &plan.train, spec, noise_seed)?;
            let test = ablate::apply_condition_indexed(plan.embeddings, &plan.test, spec, noise_seed)?;
            let train_labels: Vec<usize> = plan.train.iter().map(|&i| plan.labels[i]).collect();
            let cfg = ProbeConfig {
                seed: probe_seed,
                ..plan.options.probe.clone()
            };
            let trained = probe::train(&train.vectors, &train_labels, k, &cfg)?;
            let scores = probe::predict_scores(&trained, &test.vectors)?;
            stats::auc_roc(&scores, &test_labels)
        })(),
    }
    .map_err(|e| e.context(format!("condition {id}, run {run_index}")))?;

    Ok(RunResult {
        condition_id: id,
        run_index,
        seed,
        auc,
    })
}

/// Uniform per-class scores, each row normalized to sum to one.
fn random_scores(n: usize, k: usize, seed: u64) -> Result<ScoreMatrix> {
    let mut r = rng::seeded(seed);
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..n {
        let row: Vec<f64> = (0..k).map(|_| rng::uniform(&mut r, 0.0, 1.0)).collect();
        let sum: f64 = row.iter().sum();
        data.extend(row.iter().map(|v| if sum > 0.0 { v / sum } else { 1.0 / k as f64 }));
    }
    ScoreMatrix::new(n, k, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SameAsRandom,
    SameAsVanilla,
    DistinctFromBoth,
    SameAsBoth,
}

impl Verdict {
    /// Shading tag used in rendered tables.
    pub fn tag(self) -> &'static str {
        match self {
            Verdict::SameAsRandom => "RANDOM",
            Verdict::SameAsVanilla => "VANILLA",
            Verdict::DistinctFromBoth => "DISTINCT",
            Verdict::SameAsBoth => "BOTH",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionClassification {
    pub condition_id: String,
    pub verdict: Verdict,
    /// Mean lies above the upper CI bound of every random baseline.
    pub above_random: bool,
}

/// Classify every summary against the vanilla and random anchors.
pub fn classify(summaries: &[ConditionSummary]) -> Result<Vec<ConditionClassification>> {
    let vanilla = summaries
        .iter()
        .find(|s| is_vanilla(&s.condition_id))
        .ok_or_else(|| Error::Config("no vanilla summary to classify against".into()))?;
    let randoms: Vec<&ConditionSummary> = summaries
        .iter()
        .filter(|s| is_random_anchor(&s.condition_id))
        .collect();
    if randoms.is_empty() {
        return Err(Error::Config("no random baseline summary to classify against".into()));
    }
    let random_ceiling = randoms
        .iter()
        .map(|s| s.ci_high())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(summaries
        .iter()
        .map(|s| {
            let random = randoms.iter().any(|r| stats::same_distribution(s, r));
            let like_vanilla = stats::same_distribution(s, vanilla);
            let verdict = match (random, like_vanilla) {
                (true, true) => Verdict::SameAsBoth,
                (true, false) => Verdict::SameAsRandom,
                (false, true) => Verdict::SameAsVanilla,
                (false, false) => Verdict::DistinctFromBoth,
            };
            ConditionClassification {
                condition_id: s.condition_id.clone(),
                verdict,
                above_random: s.mean_auc > random_ceiling,
            }
        })
        .collect())
}

/// True iff performance stays above random after ablating the dimensions
/// but falls to random once the norm is ablated as well: the norm carries
/// at least part of the probed information.
pub fn infer_norm_encoding(classifications: &[ConditionClassification]) -> Result<bool> {
    let dims: Vec<&ConditionClassification> = classifications
        .iter()
        .filter(|c| c.condition_id.starts_with("ablate_dims"))
        .collect();
    let both: Vec<&ConditionClassification> = classifications
        .iter()
        .filter(|c| c.condition_id.starts_with("ablate_both"))
        .collect();
    if dims.is_empty() || both.is_empty() {
        return Err(Error::Config(
            "norm-encoding inference needs ablate_dims and ablate_both results".into(),
        ));
    }
    let dims_above = dims
        .iter()
        .all(|c| c.verdict == Verdict::DistinctFromBoth && c.above_random);
    let both_random = both.iter().all(|c| c.verdict == Verdict::SameAsRandom);
    Ok(dims_above && both_random)
}

/// One line of the run ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub task: String,
    pub condition: String,
    pub run_index: usize,
    pub seed: u64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub task: String,
    pub condition: String,
    pub run_index: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub summaries: Vec<ConditionSummary>,
    pub classifications: Vec<ConditionClassification>,
    /// `None` when the plan lacks ablate_dims or ablate_both.
    pub norm_encoding: Option<bool>,
    pub ledger: Vec<LedgerRecord>,
    pub timings: Vec<TimingRecord>,
}

/// Run every condition `n_runs` times, in parallel on the current rayon pool.
pub fn run_plan(plan: &ExperimentPlan<'_>) -> Result<PlanOutcome> {
    run_plan_with(plan, &|_, _| {})
}

/// Like [`run_plan`], calling `progress` after each finished run.
pub fn run_plan_with(
    plan: &ExperimentPlan<'_>,
    progress: &(dyn Fn(&RunResult, Duration) + Sync),
) -> Result<PlanOutcome> {
    let jobs: Vec<(usize, usize)> = (0..plan.conditions.len())
        .flat_map(|c| (0..plan.options.n_runs).map(move |r| (c, r)))
        .collect();
    let results: Vec<(RunResult, Duration)> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let start = Instant::now();
            let result = run_condition(plan, &plan.conditions[c], r)?;
            let elapsed = start.elapsed();
            progress(&result, elapsed);
            Ok((result, elapsed))
        })
        .collect::<Result<_>>()?;

    let task = plan.task.task_name.clone();
    let mut ledger = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    let mut summaries = Vec::with_capacity(plan.conditions.len());
    // jobs are condition-major, so each chunk holds one condition's runs in order
    for chunk in results.chunks(plan.options.n_runs) {
        for (r, t) in chunk {
            ledger.push(LedgerRecord {
                task: task.clone(),
                condition: r.condition_id.clone(),
                run_index: r.run_index,
                seed: r.seed,
                auc: r.auc,
            });
            timings.push(TimingRecord {
                task: task.clone(),
                condition: r.condition_id.clone(),
                run_index: r.run_index,
                wall_time_ms: t.as_secs_f64() * 1e3,
            });
        }
        let runs = chunk.iter().map(|(r, _)| r.clone()).collect();
        summaries.push(stats::summarize(runs, &plan.options.ci_method)?);
    }
    let classifications = classify(&summaries)?;
    let norm_encoding = infer_norm_encoding(&classifications).ok();
    Ok(PlanOutcome {
        summaries,
        classifications,
        norm_encoding,
        ledger,
        timings,
    })
}

/// Norm/label correlations on the `indices` subset, with labels valued by
/// [`crate::corpus::label_values`], for the vanilla vectors,
/// L1- and L2-normalized vectors, and L2 norm-ablated vectors.
pub fn correlation_suite(
    task: &ProbingDataset,
    embeddings: &SentenceEmbeddingSet,
    indices: &[usize],
    ranges: &Ranges,
    seed: u64,
) -> Result<Vec<CorrelationReport>> {
    let labels: Vec<usize> = indices.iter().map(|&i| task.examples[i].label_id).collect();
    let values = crate::corpus::label_values(task);
    let transforms = [
        ("vanilla", AblationSpec::deterministic(AblationKind::Vanilla, NormOrder::L2)),
        ("normalize_l1", AblationSpec::deterministic(AblationKind::Normalize, NormOrder::L1)),
        ("normalize_l2", AblationSpec::deterministic(AblationKind::Normalize, NormOrder::L2)),
        (
            "ablate_norm",
            AblationSpec::new(AblationKind::AblateNorm, NormOrder::L2, ranges.norm_l2, ranges.dim)?,
        ),
    ];
    transforms
        .iter()
        .map(|(name, spec)| {
            let noise_seed = rng::derive_seed(seed, "correlation", 0);
            let set = ablate::apply_condition_indexed(embeddings, indices, spec, noise_seed)?;
            stats::correlation_report(
                &task.task_name,
                name,
                &set.norms(NormOrder::L1),
                &set.norms(NormOrder::L2),
                &labels,
                &values,
            )
        })
        .collect()
}

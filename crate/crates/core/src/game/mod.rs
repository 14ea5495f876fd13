//! Orchestration of the distinguishing game and the audit built on it.

pub mod config;
pub mod runner;
pub mod scores;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{AttackOptions, AuditConfig, DataRef, PairSource, SchemaSource, SplitFractions, SplitSizes, TargetChoice};
pub use runner::{Observation, RunOutput, Runner};
pub use scores::{ScoreEntry, ScoreSet, Split};

use crate::attacks::{FeatureRow, FeatureVector};
use crate::data::{Dataset, NeighborPair, NeighborVariant, Record, Schema, make_neighbors};
use crate::error::{AuditError, Result};
use crate::estimator::{self, EpsilonEstimate, LabeledScore, Method, auc, select_threshold};
use crate::rng::{derive_named, derive_seed};
use crate::worstcase::{self, CandidateAuc, WorstCaseKind};

pub use crate::estimator::max_auditable_eps;

/// The audited pair after loading data and choosing the target.
#[derive(Clone, Debug)]
pub struct ResolvedPair {
    pub pair: NeighborPair,
    pub schema: Arc<Schema>,
    /// Mini-audit results when the target was selected by them.
    pub candidates: Vec<CandidateAuc>,
}

fn modal_record(d: &Dataset) -> Record {
    Record::new(
        (0..d.schema().len())
            .map(|a| {
                let c = d.value_counts(a);
                (0..c.len()).fold(0, |b, i| if c[i] > c[b] { i } else { b })
            })
            .collect(),
    )
}

/// Loads data, picks the target and builds the two worlds. Paths resolve
/// against `base`.
pub fn resolve_pair(cfg: &AuditConfig, base: &Path) -> Result<ResolvedPair> {
    match &cfg.pair {
        PairSource::WorstCase {
            schema,
            small,
            narrow,
            repeat,
            min_size,
            size,
            reference,
            seed,
        } => {
            let schema = schema.load(base)?;
            let reference = match reference {
                Some(r) => Some(r.load(base)?.reencode(Arc::new(schema.clone()))?),
                None => None,
            };
            let kind = WorstCaseKind {
                small: *small,
                narrow: *narrow,
                repeat: *repeat,
            };
            let min_size = min_size.unwrap_or_else(|| config::default_min_size(cfg.mechanism.family));
            let wc = worstcase::craft_worstcase(&schema, kind, cfg.variant, min_size, *size, reference.as_ref(), *seed)?;
            let pair = make_neighbors(&wc.d_minus, &wc.target, cfg.variant, wc.replacement.as_ref())?;
            Ok(ResolvedPair {
                pair,
                schema: wc.schema,
                candidates: Vec::new(),
            })
        }
        PairSource::Dataset {
            data,
            target,
            replacement,
        } => {
            let d = data.load(base)?;
            let schema = d.schema_arc().clone();
            let mut candidates = Vec::new();
            let row = match target {
                TargetChoice::Row(i) => {
                    if *i >= d.len() {
                        return Err(AuditError::config("pair.dataset.target", format!("row {i} outside the {} rows", d.len())));
                    }
                    *i
                }
                TargetChoice::Values(v) => {
                    let r = config::record_from_strings(v, &schema, "pair.dataset.target")?;
                    d.rows()
                        .iter()
                        .position(|x| *x == r)
                        .ok_or_else(|| AuditError::config("pair.dataset.target", "the target does not occur in the dataset"))?
                }
                TargetChoice::Rarest => worstcase::rank_candidates(&d, 1)[0],
                TargetChoice::SelectVulnerable { candidates: v, reps } => {
                    let (row, table) = worstcase::select_vulnerable(
                        &d,
                        &cfg.mechanism,
                        cfg.attack,
                        &cfg.attack_options,
                        cfg.synth_size,
                        *v,
                        *reps,
                        derive_named(cfg.master_seed, "select_vulnerable"),
                    )?;
                    candidates = table;
                    row
                }
            };
            let target = d.rows()[row].clone();
            let rest: Vec<Record> = d.rows().iter().enumerate().filter(|&(i, _)| i != row).map(|(_, r)| r.clone()).collect();
            let d_minus = Dataset::new(schema.clone(), rest)?;
            let y = match (cfg.variant, replacement) {
                (NeighborVariant::AddRemove, _) => None,
                (NeighborVariant::Edit, Some(v)) => Some(config::record_from_strings(v, &schema, "pair.dataset.replacement")?),
                (NeighborVariant::Edit, None) => Some(modal_record(&d_minus)),
            };
            let pair = make_neighbors(&d_minus, &target, cfg.variant, y.as_ref())?;
            Ok(ResolvedPair { pair, schema, candidates })
        }
    }
}

/// Every run of an audit, before splitting.
#[derive(Clone, Debug)]
pub struct Execution {
    pub resolved: ResolvedPair,
    pub outputs: Vec<RunOutput>,
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| AuditError::Argument(format!("cannot start worker pool: {e}")))
}

/// Seed and world bit of every run.
pub fn run_plan(master_seed: u64, n_models: usize) -> Vec<(u64, bool)> {
    (0..n_models)
        .map(|i| {
            let s = derive_seed(master_seed, i as u64);
            (s, runner::world_bit(s))
        })
        .collect()
}

pub fn execute(cfg: &AuditConfig, base: &Path, workers: Option<usize>) -> Result<Execution> {
    let pool = thread_pool(workers)?;
    pool.install(|| {
        let resolved = resolve_pair(cfg, base)?;
        execute_on(cfg, resolved)
    })
}

/// Runs the game on an already resolved pair in the current thread pool.
pub fn execute_on(cfg: &AuditConfig, resolved: ResolvedPair) -> Result<Execution> {
    let runner = Runner {
        mechanism: &cfg.mechanism,
        attack: cfg.attack,
        options: &cfg.attack_options,
        synth_size: cfg.synth_size,
        pair: &resolved.pair,
        schema: &resolved.schema,
        query_seed: derive_named(cfg.master_seed, "queries"),
    };
    let outputs = runner.run_all(&run_plan(cfg.master_seed, cfg.n_models))?;
    Ok(Execution { resolved, outputs })
}

/// Run indices of each role.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub shadow: Vec<usize>,
    pub threshold: Vec<usize>,
    pub test: Vec<usize>,
}

impl Partition {
    /// Shadow runs first, then threshold runs, then test runs.
    pub fn canonical(sizes: SplitSizes) -> Self {
        let a = sizes.shadow;
        let b = a + sizes.threshold;
        Partition {
            shadow: (0..a).collect(),
            threshold: (a..b).collect(),
            test: (b..b + sizes.test).collect(),
        }
    }

    /// Fold `f` of `k`: a contiguous block of runs is the test set and the
    /// remaining runs divide into shadow and threshold in the configured
    /// ratio.
    pub fn fold(n: usize, k: usize, f: usize, split: &SplitFractions) -> Self {
        let (lo, hi) = (f * n / k, (f + 1) * n / k);
        let rest: Vec<usize> = (0..lo).chain(hi..n).collect();
        let ratio = split.shadow / (split.shadow + split.threshold);
        let n_shadow = (rest.len() as f64 * ratio).round() as usize;
        Partition {
            shadow: rest[..n_shadow].to_vec(),
            threshold: rest[n_shadow..].to_vec(),
            test: (lo..hi).collect(),
        }
    }

    pub fn split_of(&self, n: usize) -> Vec<Split> {
        let mut out = vec![Split::Test; n];
        self.shadow.iter().for_each(|&i| out[i] = Split::Shadow);
        self.threshold.iter().for_each(|&i| out[i] = Split::Threshold);
        out
    }
}

/// Result of estimating on one partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub scores: Vec<f64>,
    pub estimate: EpsilonEstimate,
    pub holdout_eps: f64,
    pub auc: Option<f64>,
}

fn labeled(outputs: &[RunOutput], scores: &[f64], idx: &[usize]) -> Vec<LabeledScore> {
    idx.iter()
        .map(|&i| LabeledScore {
            member: outputs[i].b,
            score: scores[i],
        })
        .collect()
}

pub fn evaluate(cfg: &AuditConfig, outputs: &[RunOutput], part: &Partition, meta_seed: u64) -> Result<Evaluation> {
    let scores = runner::finalize_scores(outputs, &part.shadow, &cfg.attack_options, meta_seed)?;
    let holdout = labeled(outputs, &scores, &part.threshold);
    let choice = select_threshold(&holdout, cfg.delta, cfg.confidence, cfg.method)?;
    let test = labeled(outputs, &scores, &part.test);
    let estimate = estimator::audit(&test, choice.tau, cfg.delta, cfg.confidence, cfg.method)?;
    Ok(Evaluation {
        auc: auc(&test),
        scores,
        estimate,
        holdout_eps: choice.holdout_eps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    /// `None` where a fold lacked one of the worlds.
    pub estimates: Vec<Option<EpsilonEstimate>>,
    pub mean: f64,
    /// Sample standard deviation over completed folds.
    pub stddev: f64,
    pub completed: usize,
}

impl FoldSummary {
    pub fn eps_values(&self) -> Vec<f64> {
        self.estimates.iter().flatten().map(|e| e.eps_emp).collect()
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub theoretical_eps: f64,
    pub target: Vec<String>,
    pub replacement: Option<Vec<String>>,
    pub world_sizes: [usize; 2],
    pub split_sizes: SplitSizes,
    /// Headline estimate on the canonical split.
    pub estimate: EpsilonEstimate,
    pub threshold_split_eps: f64,
    /// Attack AUC on the canonical test split.
    pub auc: Option<f64>,
    pub folds: FoldSummary,
}

/// Everything an audit produces.
#[derive(Clone, Debug)]
pub struct AuditOutcome {
    pub report: AuditReport,
    pub scores: ScoreSet,
    pub features: Vec<FeatureRow>,
    pub candidates: Vec<CandidateAuc>,
}

fn score_set(outputs: &[RunOutput], scores: &[f64], part: &Partition) -> ScoreSet {
    let splits = part.split_of(outputs.len());
    ScoreSet {
        entries: outputs
            .iter()
            .map(|o| ScoreEntry {
                b: u8::from(o.b),
                score: scores[o.index],
                split: splits[o.index],
                run_seed: o.run_seed,
            })
            .collect(),
    }
}

/// The game alone: scores of every run tagged with the canonical split.
pub fn run_game(cfg: &AuditConfig, base: &Path, workers: Option<usize>) -> Result<ScoreSet> {
    let ex = execute(cfg, base, workers)?;
    let part = Partition::canonical(cfg.split.sizes(cfg.n_models));
    let scores = runner::finalize_scores(&ex.outputs, &part.shadow, &cfg.attack_options, derive_named(cfg.master_seed, "meta"))?;
    Ok(score_set(&ex.outputs, &scores, &part))
}

pub fn run_audit(cfg: &AuditConfig, base: &Path, workers: Option<usize>) -> Result<AuditOutcome> {
    cfg.validate()?;
    audit_execution(cfg, execute(cfg, base, workers)?)
}

/// Splits, cross-validates and reports on completed runs.
pub fn audit_execution(cfg: &AuditConfig, ex: Execution) -> Result<AuditOutcome> {
    let n = cfg.n_models;
    let sizes = cfg.split.sizes(n);
    let canonical = Partition::canonical(sizes);
    let head = evaluate(cfg, &ex.outputs, &canonical, derive_named(cfg.master_seed, "meta"))?;
    let estimates: Vec<Option<EpsilonEstimate>> = (0..cfg.folds)
        .map(|f| {
            let part = Partition::fold(n, cfg.folds, f, &cfg.split);
            let seed = derive_seed(derive_named(cfg.master_seed, "fold_meta"), f as u64);
            match evaluate(cfg, &ex.outputs, &part, seed) {
                Ok(e) => Ok(Some(e.estimate)),
                // A fold without both worlds cannot be estimated.
                Err(AuditError::Empty(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let eps: Vec<f64> = estimates.iter().flatten().map(|e| e.eps_emp).collect();
    let (mean, stddev) = mean_std(&eps);
    let pair = &ex.resolved.pair;
    let schema = &ex.resolved.schema;
    let features = ex
        .outputs
        .iter()
        .filter_map(|o| match &o.observation {
            Observation::Features(f) => Some(FeatureRow {
                run_index: o.index,
                b: u8::from(o.b),
                split: format!("{:?}", canonical.split_of(n)[o.index]).to_lowercase(),
                features: FeatureVector::clone(f),
            }),
            Observation::Score(_) => None,
        })
        .collect();
    let report = AuditReport {
        config: cfg.clone(),
        theoretical_eps: cfg.theoretical_eps(),
        target: config::record_to_strings(&pair.target, schema),
        replacement: pair.replacement.as_ref().map(|y| config::record_to_strings(y, schema)),
        world_sizes: [pair.d0.len(), pair.d1.len()],
        split_sizes: sizes,
        estimate: head.estimate,
        threshold_split_eps: head.holdout_eps,
        auc: head.auc,
        folds: FoldSummary {
            completed: eps.len(),
            estimates,
            mean,
            stddev,
        },
    };
    Ok(AuditOutcome {
        scores: score_set(&ex.outputs, &head.scores, &canonical),
        report,
        features,
        candidates: ex.resolved.candidates,
    })
}

/// Re-estimates from a persisted score set.
pub fn estimate_scores(scores: &ScoreSet, delta: f64, confidence: f64, method: Method) -> Result<EpsilonEstimate> {
    scores.estimate(delta, confidence, method)
}

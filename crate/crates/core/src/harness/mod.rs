//! Evaluation harness: stratified k-fold screening of classifiers
//! (accuracy/F1/space) and the filter benchmark protocol (holdout split,
//! epsilon sweeps, size / FPR / reject-time measurement).

pub mod report;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bloom::BloomFilter;
use crate::classifiers::{
    encoding_mode_for, model_size_bytes, train, ClassifierKind, TrainError, TrainingConfig,
};
use crate::dataset::UrlRecord;
use crate::features::{encode_all, CharVocabulary, FeatureError, FrequencyMode};
use crate::learned::{
    calibrate_tau_from_scores, lbf_build, slbf_build, BudgetError, KeyScorer, LearnedFilter,
    Variant,
};
use crate::Membership;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("class {label} has {count} records, need at least {need} for {need}-fold splits")]
    TooFewPerClass { label: i8, count: usize, need: usize },
    #[error("prediction and truth lengths differ: {predictions} vs {truth}")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("empty input")]
    Empty,
    #[error("timing requires a non-empty query set")]
    NoQueries,
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("corpus has no {0} records")]
    MissingClass(&'static str),
}

/// Stratified k-fold partition of record indices, deterministic per seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

pub fn make_folds(records: &[UrlRecord], k: usize, seed: u64) -> Result<SplitPlan, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for label in [1i8, -1] {
        let mut idx: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == label)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < k {
            return Err(HarnessError::TooFewPerClass { label, count: idx.len(), need: k });
        }
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    Ok(SplitPlan { folds, seed })
}

/// Accuracy and F1 with +1 as the positive class; F1 is 0 when its
/// denominator vanishes.
pub fn accuracy_f1(predictions: &[i8], truth: &[i8]) -> Result<(f64, f64), HarnessError> {
    if predictions.len() != truth.len() {
        return Err(HarnessError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fne = 0u64;
    let mut correct = 0u64;
    for (&p, &t) in predictions.iter().zip(truth) {
        if p == t {
            correct += 1;
        }
        match (p, t) {
            (1, 1) => tp += 1,
            (1, -1) => fp += 1,
            (-1, 1) => fne += 1,
            _ => {}
        }
    }
    let accuracy = correct as f64 / truth.len() as f64;
    let denom = 2 * tp + fp + fne;
    let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
    Ok((accuracy, f1))
}

/// Threshold among the observed scores maximizing training F1; ties pick
/// the smallest threshold.
pub fn select_tau_for_f1(scores: &[f64], labels: &[i8]) -> f64 {
    assert_eq!(scores.len(), labels.len());
    assert!(!scores.is_empty());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let positives = labels.iter().filter(|&&y| y == 1).count() as f64;
    // at tau = min score everything is predicted positive
    let mut tp = positives;
    let mut fp = labels.len() as f64 - positives;
    let mut best_tau = scores[order[0]];
    let mut best_f1 = if 2.0 * tp + fp + (positives - tp) > 0.0 {
        2.0 * tp / (2.0 * tp + fp + (positives - tp))
    } else {
        0.0
    };
    let mut i = 0;
    while i < order.len() {
        // advance the threshold past all samples scoring below it
        let tau = scores[order[i]];
        if i > 0 {
            let f1 = {
                let fn_ = positives - tp;
                let d = 2.0 * tp + fp + fn_;
                if d > 0.0 { 2.0 * tp / d } else { 0.0 }
            };
            if f1 > best_f1 {
                best_f1 = f1;
                best_tau = tau;
            }
        }
        let mut j = i;
        while j < order.len() && scores[order[j]] == tau {
            if labels[order[j]] == 1 {
                tp -= 1.0;
            } else {
                fp -= 1.0;
            }
            j += 1;
        }
        i = j;
    }
    best_tau
}

/// Per-fold screening numbers and their mean +/- deviation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ClassifierMetrics {
    pub kind: ClassifierKind,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub size_bytes_mean: f64,
    pub per_fold: Vec<FoldMetrics>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub size_bytes: u64,
    pub chosen_config: TrainingConfig,
}

#[derive(Debug, Clone)]
pub struct ScreeningConfig {
    pub folds: usize,
    pub seed: u64,
    pub mode: FrequencyMode,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig { folds: 5, seed: 0, mode: FrequencyMode::Relative }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn fit_and_score(
    train_records: &[UrlRecord],
    test_records: &[UrlRecord],
    kind: ClassifierKind,
    config: &TrainingConfig,
    mode: FrequencyMode,
) -> Result<(f64, f64, u64), HarnessError> {
    let vocab = CharVocabulary::build(train_records)?;
    let mode = encoding_mode_for(kind, mode);
    let xs = encode_all(train_records, &vocab, mode);
    let ys: Vec<i8> = train_records.iter().map(|r| r.label).collect();
    let model = train(kind, &xs, &ys, config)?;
    let train_scores = model.score_all(&xs);
    let tau = select_tau_for_f1(&train_scores, &ys);
    let test_xs = encode_all(test_records, &vocab, mode);
    let predictions: Vec<i8> = test_xs
        .iter()
        .map(|x| if model.score(x) >= tau { 1 } else { -1 })
        .collect();
    let truth: Vec<i8> = test_records.iter().map(|r| r.label).collect();
    let (accuracy, f1) = accuracy_f1(&predictions, &truth)?;
    Ok((accuracy, f1, model_size_bytes(&model, &vocab, mode)))
}

/// Outer k-fold cross validation; each outer training split runs an inner
/// k-fold grid search picking the configuration with the best mean inner F1.
pub fn screen_classifiers(
    records: &[UrlRecord],
    grids: &[(ClassifierKind, Vec<TrainingConfig>)],
    cfg: &ScreeningConfig,
) -> Result<Vec<ClassifierMetrics>, HarnessError> {
    let plan = make_folds(records, cfg.folds, cfg.seed)?;
    let mut out = Vec::new();
    for (kind, grid) in grids {
        assert!(!grid.is_empty(), "empty hyperparameter grid");
        let mut per_fold = Vec::new();
        for test_fold in 0..cfg.folds {
            let test_records: Vec<UrlRecord> =
                plan.folds[test_fold].iter().map(|&i| records[i].clone()).collect();
            let train_records: Vec<UrlRecord> = (0..cfg.folds)
                .filter(|&f| f != test_fold)
                .flat_map(|f| plan.folds[f].iter().map(|&i| records[i].clone()))
                .collect();
            let chosen = if grid.len() == 1 {
                grid[0]
            } else {
                let inner_plan = make_folds(&train_records, cfg.folds, cfg.seed ^ 0x1111)?;
                let mut best: Option<(f64, TrainingConfig)> = None;
                for candidate in grid {
                    let mut f1s = Vec::new();
                    for inner_test in 0..cfg.folds {
                        let itest: Vec<UrlRecord> = inner_plan.folds[inner_test]
                            .iter()
                            .map(|&i| train_records[i].clone())
                            .collect();
                        let itrain: Vec<UrlRecord> = (0..cfg.folds)
                            .filter(|&f| f != inner_test)
                            .flat_map(|f| {
                                inner_plan.folds[f].iter().map(|&i| train_records[i].clone())
                            })
                            .collect();
                        let (_, f1, _) =
                            fit_and_score(&itrain, &itest, *kind, candidate, cfg.mode)?;
                        f1s.push(f1);
                    }
                    let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
                    if best.is_none_or(|(b, _)| mean > b) {
                        best = Some((mean, *candidate));
                    }
                }
                best.unwrap().1
            };
            let (accuracy, f1, size_bytes) =
                fit_and_score(&train_records, &test_records, *kind, &chosen, cfg.mode)?;
            per_fold.push(FoldMetrics { accuracy, f1, size_bytes, chosen_config: chosen });
        }
        let (accuracy_mean, accuracy_std) =
            mean_std(&per_fold.iter().map(|f| f.accuracy).collect::<Vec<_>>());
        let (f1_mean, f1_std) = mean_std(&per_fold.iter().map(|f| f.f1).collect::<Vec<_>>());
        let size_bytes_mean = per_fold.iter().map(|f| f.size_bytes as f64).sum::<f64>()
            / per_fold.len() as f64;
        out.push(ClassifierMetrics {
            kind: *kind,
            accuracy_mean,
            accuracy_std,
            f1_mean,
            f1_std,
            size_bytes_mean,
            per_fold,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Filter sweep
// ---------------------------------------------------------------------------

/// Per-stage false positive rates measured on a negative query set.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct StageRates {
    /// Fraction accepted by the initial filter (1 when absent).
    pub eps_i: f64,
    /// Among initial-accepted queries, fraction scoring >= tau.
    pub eps_tau: f64,
    /// Among initial-accepted, below-tau queries, fraction the backup accepts.
    pub eps_f: f64,
    /// Overall acceptance rate; equals eps_i*(eps_tau + (1-eps_tau)*eps_f)
    /// by counting.
    pub overall: f64,
}

pub fn stage_rates<K: AsRef<[u8]>>(filter: &LearnedFilter, negatives: &[K]) -> StageRates {
    let total = negatives.len() as f64;
    let mut past_initial = 0u64;
    let mut above_tau = 0u64;
    let mut backup_accepts = 0u64;
    for key in negatives {
        let key = key.as_ref();
        if let Some(initial) = &filter.initial {
            if !initial.query(key) {
                continue;
            }
        }
        past_initial += 1;
        if filter.scorer.score_key(key) >= filter.tau {
            above_tau += 1;
        } else {
            let accepted = match &filter.backup {
                crate::learned::Backup::RejectAll => false,
                crate::learned::Backup::PassThrough => true,
                crate::learned::Backup::Filter(f) => f.query(key),
            };
            if accepted {
                backup_accepts += 1;
            }
        }
    }
    let below_tau = past_initial - above_tau;
    StageRates {
        eps_i: if filter.initial.is_some() { past_initial as f64 / total } else { 1.0 },
        eps_tau: if past_initial > 0 { above_tau as f64 / past_initial as f64 } else { 0.0 },
        eps_f: if below_tau > 0 { backup_accepts as f64 / below_tau as f64 } else { 0.0 },
        overall: (above_tau + backup_accepts) as f64 / total,
    }
}

/// Wall-clock reject-time measurement. Runs `repetitions` passes over the
/// query set; reports both the plain mean and the min-of-repetitions
/// estimator (the latter suppresses scheduler noise).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TimingReport {
    pub mean_s_per_query: f64,
    pub min_s_per_query: f64,
    pub query_count: usize,
    pub repetitions: usize,
}

pub fn measure_reject_time<M: Membership + ?Sized, K: AsRef<[u8]>>(
    filter: &M,
    queries: &[K],
    repetitions: usize,
) -> Result<TimingReport, HarnessError> {
    if queries.is_empty() {
        return Err(HarnessError::NoQueries);
    }
    let repetitions = repetitions.max(1);
    let mut per_rep = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let mut accepted = 0usize;
        for q in queries {
            if filter.contains(q.as_ref()) {
                accepted += 1;
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        std::hint::black_box(accepted);
        per_rep.push(elapsed / queries.len() as f64);
    }
    Ok(TimingReport {
        mean_s_per_query: per_rep.iter().sum::<f64>() / per_rep.len() as f64,
        min_s_per_query: per_rep.iter().cloned().fold(f64::INFINITY, f64::min),
        query_count: queries.len(),
        repetitions,
    })
}

/// One row of the sweep grid. For LBF rows `ratio` is epsilon_tau/epsilon;
/// for SLBF rows it is the epsilon_tau target itself; baseline rows carry 0.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepPoint {
    pub variant: String,
    pub classifier: String,
    pub epsilon: f64,
    pub ratio: f64,
    /// Measured on calibration negatives at the chosen tau (the value the
    /// budget was computed from); target for skipped rows.
    pub epsilon_tau: f64,
    pub total_bytes: u64,
    pub model_bytes: u64,
    pub filter_bytes: u64,
    pub measured_fpr: f64,
    pub holdout_stages: StageRates,
    pub mean_reject_s: f64,
    pub min_reject_s: f64,
    pub query_count: usize,
    /// Measured FPR within 3 binomial standard errors of the target epsilon.
    pub fpr_within_3se: bool,
    pub skipped_reason: Option<String>,
    pub budget: Option<crate::learned::FprBudget>,
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    /// epsilon_tau/epsilon for LBF, epsilon_tau for SLBF.
    pub ratios: Vec<f64>,
    pub kinds: Vec<ClassifierKind>,
    pub variants: Vec<Variant>,
    pub train: TrainingConfig,
    /// Hidden widths swept for FFNN; the smallest resulting filter wins.
    pub hidden_widths: Vec<usize>,
    pub mode: FrequencyMode,
    pub seed: u64,
    pub timing_repetitions: usize,
    /// Skip wall-clock timing (keeps test runs fast); timing fields are 0.
    pub measure_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            epsilons: vec![0.001, 0.005, 0.01, 0.02],
            ratios: vec![0.1, 0.25, 0.5, 0.75],
            kinds: ClassifierKind::ALL.to_vec(),
            variants: vec![Variant::Lbf, Variant::Slbf],
            train: TrainingConfig::default(),
            hidden_widths: vec![10, 15, 20, 25, 30],
            mode: FrequencyMode::Relative,
            seed: 0,
            timing_repetitions: 3,
            measure_time: true,
        }
    }
}

fn three_se_check(measured: f64, target: f64, n: f64) -> bool {
    let se = (target * (1.0 - target) / n).sqrt();
    (measured - target).abs() <= 3.0 * se
}

/// Filter holdout protocol: all keys plus a uniform half of the non-keys
/// train the classifier; the other half of the non-keys measures the filter.
pub struct HoldoutSplit {
    pub keys: Vec<UrlRecord>,
    pub train_negatives: Vec<UrlRecord>,
    pub holdout_negatives: Vec<UrlRecord>,
}

pub fn holdout_split(records: &[UrlRecord], seed: u64) -> Result<HoldoutSplit, HarnessError> {
    let keys: Vec<UrlRecord> = records.iter().filter(|r| r.is_key()).cloned().collect();
    let mut negatives: Vec<UrlRecord> =
        records.iter().filter(|r| !r.is_key()).cloned().collect();
    if keys.is_empty() {
        return Err(HarnessError::MissingClass("key"));
    }
    if negatives.len() < 2 {
        return Err(HarnessError::MissingClass("non-key"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    negatives.shuffle(&mut rng);
    let holdout = negatives.split_off(negatives.len() / 2);
    Ok(HoldoutSplit { keys, train_negatives: negatives, holdout_negatives: holdout })
}

struct TrainedScorer {
    scorer: KeyScorer,
    calibration_scores: Vec<f64>,
}

fn train_scorer(
    split: &HoldoutSplit,
    kind: ClassifierKind,
    config: &TrainingConfig,
    mode: FrequencyMode,
) -> Result<TrainedScorer, HarnessError> {
    let mut training: Vec<UrlRecord> = split.keys.clone();
    training.extend(split.train_negatives.iter().cloned());
    let vocab = CharVocabulary::build(&training)?;
    let mode = encoding_mode_for(kind, mode);
    let xs = encode_all(&training, &vocab, mode);
    let ys: Vec<i8> = training.iter().map(|r| r.label).collect();
    let model = train(kind, &xs, &ys, config)?;
    let scorer = KeyScorer::new(model, vocab, mode);
    let calibration_scores: Vec<f64> = split
        .train_negatives
        .iter()
        .map(|r| scorer.score_key(r.key_bytes()))
        .collect();
    Ok(TrainedScorer { scorer, calibration_scores })
}

#[allow(clippy::too_many_arguments)]
fn build_point(
    split: &HoldoutSplit,
    trained: &TrainedScorer,
    variant: Variant,
    epsilon: f64,
    ratio: f64,
    seed: u64,
    timing_repetitions: usize,
    measure_time: bool,
) -> Result<SweepPoint, (f64, BudgetError)> {
    let target_eps_tau = match variant {
        Variant::Lbf => ratio * epsilon,
        Variant::Slbf => ratio,
    };
    let calibration =
        calibrate_tau_from_scores(&trained.calibration_scores, target_eps_tau)
            .map_err(|e| (target_eps_tau, e))?;
    let keys: Vec<&[u8]> = split.keys.iter().map(|r| r.key_bytes()).collect();
    let calib_keys: Vec<&[u8]> =
        split.train_negatives.iter().map(|r| r.key_bytes()).collect();
    let filter = match variant {
        Variant::Lbf => lbf_build(
            &keys,
            trained.scorer.clone(),
            calibration.tau,
            epsilon,
            &calib_keys,
            seed,
        ),
        Variant::Slbf => slbf_build(
            &keys,
            trained.scorer.clone(),
            calibration.tau,
            epsilon,
            &calib_keys,
            seed,
        ),
    }
    .map_err(|e| (target_eps_tau, e))?;

    let holdout: Vec<&[u8]> =
        split.holdout_negatives.iter().map(|r| r.key_bytes()).collect();
    let stages = stage_rates(&filter, &holdout);
    let size = filter.size_bytes();
    let timing = if measure_time {
        measure_reject_time(&filter, &holdout, timing_repetitions).ok()
    } else {
        None
    };
    Ok(SweepPoint {
        variant: variant.name().to_string(),
        classifier: trained.scorer.model.kind_name().to_string(),
        epsilon,
        ratio,
        epsilon_tau: filter.budget.epsilon_tau,
        total_bytes: size.total_bytes,
        model_bytes: size.model_bytes,
        filter_bytes: size.total_bytes - size.model_bytes,
        measured_fpr: stages.overall,
        holdout_stages: stages,
        mean_reject_s: timing.map_or(0.0, |t| t.mean_s_per_query),
        min_reject_s: timing.map_or(0.0, |t| t.min_s_per_query),
        query_count: holdout.len(),
        fpr_within_3se: three_se_check(stages.overall, epsilon, holdout.len() as f64),
        skipped_reason: None,
        budget: Some(filter.budget),
        tau: filter.tau,
    })
}

/// Classic Bloom filter baseline row for one epsilon.
fn baseline_point(
    split: &HoldoutSplit,
    epsilon: f64,
    seed: u64,
    timing_repetitions: usize,
    measure_time: bool,
) -> SweepPoint {
    let keys: Vec<&[u8]> = split.keys.iter().map(|r| r.key_bytes()).collect();
    let filter = BloomFilter::build(&keys, epsilon, seed).expect("non-empty keys");
    let holdout: Vec<&[u8]> =
        split.holdout_negatives.iter().map(|r| r.key_bytes()).collect();
    let fp = holdout.iter().filter(|k| filter.query(k)).count();
    let fpr = fp as f64 / holdout.len() as f64;
    let timing = if measure_time {
        measure_reject_time(&filter, &holdout, timing_repetitions).ok()
    } else {
        None
    };
    SweepPoint {
        variant: "classic".to_string(),
        classifier: String::new(),
        epsilon,
        ratio: 0.0,
        epsilon_tau: 0.0,
        total_bytes: filter.serialized_bytes(),
        model_bytes: 0,
        filter_bytes: filter.serialized_bytes(),
        measured_fpr: fpr,
        holdout_stages: StageRates { eps_i: 1.0, eps_tau: 0.0, eps_f: fpr, overall: fpr },
        mean_reject_s: timing.map_or(0.0, |t| t.mean_s_per_query),
        min_reject_s: timing.map_or(0.0, |t| t.min_s_per_query),
        query_count: holdout.len(),
        fpr_within_3se: three_se_check(fpr, epsilon, holdout.len() as f64),
        skipped_reason: None,
        budget: None,
        tau: 0.0,
    }
}

/// The full benchmark: per (classifier, variant, epsilon, ratio) train,
/// calibrate, build, and measure; classic baseline rows included. Budget
/// violations become skipped rows, not failures.
pub fn run_filter_sweep(
    records: &[UrlRecord],
    config: &SweepConfig,
) -> Result<Vec<SweepPoint>, HarnessError> {
    let split = holdout_split(records, config.seed)?;
    let mut points = Vec::new();
    for &epsilon in &config.epsilons {
        points.push(baseline_point(
            &split,
            epsilon,
            config.seed,
            config.timing_repetitions,
            config.measure_time,
        ));
    }
    for &kind in &config.kinds {
        let trained: Vec<TrainedScorer> = if kind == ClassifierKind::Ffnn {
            config
                .hidden_widths
                .iter()
                .map(|&hidden| {
                    train_scorer(
                        &split,
                        kind,
                        &TrainingConfig { hidden, ..config.train },
                        config.mode,
                    )
                })
                .collect::<Result<_, _>>()?
        } else {
            vec![train_scorer(&split, kind, &config.train, config.mode)?]
        };
        for &variant in &config.variants {
            for &epsilon in &config.epsilons {
                for &ratio in &config.ratios {
                    // across FFNN widths the smallest successful filter wins
                    let mut best: Option<SweepPoint> = None;
                    let mut last_err: Option<(f64, BudgetError)> = None;
                    for t in &trained {
                        match build_point(
                            &split,
                            t,
                            variant,
                            epsilon,
                            ratio,
                            config.seed,
                            config.timing_repetitions,
                            config.measure_time,
                        ) {
                            Ok(p) => {
                                if best
                                    .as_ref()
                                    .is_none_or(|b| p.total_bytes < b.total_bytes)
                                {
                                    best = Some(p);
                                }
                            }
                            Err(e) => last_err = Some(e),
                        }
                    }
                    points.push(best.unwrap_or_else(|| {
                        let (target, err) = last_err.unwrap();
                        SweepPoint {
                            variant: variant.name().to_string(),
                            classifier: kind.name().to_string(),
                            epsilon,
                            ratio,
                            epsilon_tau: target,
                            total_bytes: 0,
                            model_bytes: 0,
                            filter_bytes: 0,
                            measured_fpr: 0.0,
                            holdout_stages: StageRates::default(),
                            mean_reject_s: 0.0,
                            min_reject_s: 0.0,
                            query_count: 0,
                            fpr_within_3se: false,
                            skipped_reason: Some(err.to_string()),
                            budget: None,
                            tau: 0.0,
                        }
                    }));
                }
            }
        }
    }
    Ok(points)
}

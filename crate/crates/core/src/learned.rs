//! Learned and sandwiched learned Bloom filters: threshold calibration,
//! false-positive-rate budgeting, and backup/initial filter construction.
//!
//! For a target rate `epsilon` and a classifier with measured false positive
//! rate `epsilon_tau` at threshold `tau`:
//!
//! - LBF: `epsilon_F = (epsilon - epsilon_tau) / (1 - epsilon_tau)`, valid
//!   only when `epsilon_tau < epsilon`.
//! - SLBF: `epsilon_I = min(1, (epsilon/epsilon_tau) * (1 - FN/n))` and
//!   `epsilon_F = (epsilon/epsilon_I - epsilon_tau) / (1 - epsilon_tau)`,
//!   valid when `epsilon * (1 - FN/n) <= epsilon_tau <= 1 - FN/n`.

use crate::bloom::{BloomFilter, BloomError, LayerTag};
use crate::classifiers::{decode_model, encode_model, ScoringModel};
use crate::codec::{self, CodecError};
use crate::features::{CharVocabulary, FrequencyMode};
use crate::Membership;

const EPS_ONE: f64 = 1.0 - 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BudgetError {
    #[error("epsilon must lie in (0,1), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("epsilon_tau must lie in [0,1), got {0}")]
    EpsilonTauOutOfRange(f64),
    #[error("epsilon_tau must be < epsilon")]
    TauNotBelowEpsilon,
    #[error("epsilon_tau must be >= epsilon * (1 - fn_count/n_keys)")]
    TauBelowSlbfLowerBound,
    #[error("epsilon_tau must be <= 1 - fn_count/n_keys")]
    TauAboveSlbfUpperBound,
    #[error("fn_count {fn_count} exceeds n_keys {n_keys}")]
    FnExceedsKeys { fn_count: u64, n_keys: u64 },
    #[error("n_keys must be >= 1")]
    NoKeys,
    #[error("calibration requires a non-empty negative set")]
    EmptyNegatives,
    #[error(transparent)]
    Bloom(#[from] BloomError),
}

/// The (epsilon, epsilon_tau, epsilon_F, epsilon_I) allocation for one
/// learned-filter configuration. `epsilon_i == 1` means no initial filter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FprBudget {
    pub epsilon: f64,
    pub epsilon_tau: f64,
    pub epsilon_f: f64,
    pub epsilon_i: f64,
    pub fn_count: u64,
    pub n_keys: u64,
}

impl FprBudget {
    /// Reconstruct the total rate from the allocation. Equals the input
    /// `epsilon` exactly (to rounding) whenever no clamping occurred.
    pub fn reconstructed_epsilon(&self) -> f64 {
        self.epsilon_i * (self.epsilon_tau + (1.0 - self.epsilon_tau) * self.epsilon_f)
    }
}

pub fn lbf_budget(epsilon: f64, epsilon_tau: f64) -> Result<FprBudget, BudgetError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BudgetError::EpsilonOutOfRange(epsilon));
    }
    if !(0.0..1.0).contains(&epsilon_tau) {
        return Err(BudgetError::EpsilonTauOutOfRange(epsilon_tau));
    }
    if epsilon_tau >= epsilon {
        return Err(BudgetError::TauNotBelowEpsilon);
    }
    Ok(FprBudget {
        epsilon,
        epsilon_tau,
        epsilon_f: (epsilon - epsilon_tau) / (1.0 - epsilon_tau),
        epsilon_i: 1.0,
        fn_count: 0,
        n_keys: 0,
    })
}

pub fn slbf_budget(
    epsilon: f64,
    epsilon_tau: f64,
    fn_count: u64,
    n_keys: u64,
) -> Result<FprBudget, BudgetError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BudgetError::EpsilonOutOfRange(epsilon));
    }
    if n_keys == 0 {
        return Err(BudgetError::NoKeys);
    }
    if fn_count > n_keys {
        return Err(BudgetError::FnExceedsKeys { fn_count, n_keys });
    }
    let covered = 1.0 - fn_count as f64 / n_keys as f64;
    if epsilon_tau < epsilon * covered {
        return Err(BudgetError::TauBelowSlbfLowerBound);
    }
    if epsilon_tau > covered {
        return Err(BudgetError::TauAboveSlbfUpperBound);
    }
    let epsilon_i = (epsilon / epsilon_tau * covered).min(1.0);
    let epsilon_f = if epsilon_tau >= EPS_ONE {
        1.0
    } else {
        ((epsilon / epsilon_i - epsilon_tau) / (1.0 - epsilon_tau)).min(1.0)
    };
    Ok(FprBudget { epsilon, epsilon_tau, epsilon_f, epsilon_i, fn_count, n_keys })
}

/// Threshold choice for a target classifier false positive rate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CalibrationReport {
    pub tau: f64,
    pub achieved_eps_tau: f64,
    /// Classifier false negatives among keys at `tau`; filled by the filter
    /// builders, zero straight out of calibration.
    pub fn_count: u64,
    pub target_eps_tau: f64,
}

fn next_up(v: f64) -> f64 {
    f64::from_bits(v.to_bits() + 1)
}

/// tau = smallest observed negative score s with
/// fraction{score >= s} <= target. If even the maximum score fails the
/// target, tau sits one representable increment above the maximum, giving a
/// zero rate on the calibration data.
pub fn calibrate_tau_from_scores(
    negative_scores: &[f64],
    target_eps_tau: f64,
) -> Result<CalibrationReport, BudgetError> {
    if negative_scores.is_empty() {
        return Err(BudgetError::EmptyNegatives);
    }
    let n = negative_scores.len() as f64;
    let mut sorted = negative_scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (i, &s) in sorted.iter().enumerate() {
        if i > 0 && sorted[i - 1] == s {
            continue;
        }
        let frac = (sorted.len() - i) as f64 / n;
        if frac <= target_eps_tau {
            return Ok(CalibrationReport {
                tau: s,
                achieved_eps_tau: frac,
                fn_count: 0,
                target_eps_tau,
            });
        }
    }
    Ok(CalibrationReport {
        tau: next_up(*sorted.last().unwrap()),
        achieved_eps_tau: 0.0,
        fn_count: 0,
        target_eps_tau,
    })
}

pub fn calibrate_tau(
    model: &ScoringModel,
    calibration_negatives: &[Vec<f64>],
    target_eps_tau: f64,
) -> Result<CalibrationReport, BudgetError> {
    let scores: Vec<f64> = calibration_negatives.iter().map(|x| model.score(x)).collect();
    calibrate_tau_from_scores(&scores, target_eps_tau)
}

/// A model bundled with the vocabulary and frequency mode needed to score
/// raw byte-string keys.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyScorer {
    pub model: ScoringModel,
    pub vocab: CharVocabulary,
    pub mode: FrequencyMode,
}

impl KeyScorer {
    pub fn new(model: ScoringModel, vocab: CharVocabulary, mode: FrequencyMode) -> Self {
        assert_eq!(model.feature_dim(), vocab.len(), "model/vocabulary dimension mismatch");
        KeyScorer { model, vocab, mode }
    }

    /// Bag-of-characters encoding applied directly to the key bytes; keys
    /// are treated as already canonical and never re-standardized.
    pub fn score_key(&self, key: &[u8]) -> f64 {
        if let ScoringModel::Constant { value, .. } = self.model {
            return value;
        }
        let text = String::from_utf8_lossy(key);
        let mut values = vec![0.0f64; self.vocab.len()];
        let mut total = 0.0f64;
        for c in text.chars() {
            if let Some(i) = self.vocab.index_of(c) {
                values[i] += 1.0;
                total += 1.0;
            }
        }
        if self.mode == FrequencyMode::Relative && total > 0.0 {
            for v in &mut values {
                *v /= total;
            }
        }
        self.model.score(&values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Lbf,
    Slbf,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Lbf => "lbf",
            Variant::Slbf => "slbf",
        }
    }
}

/// Backup stage. `RejectAll` is the zero-payload sentinel used when the
/// classifier has no false-negative keys; `PassThrough` is the structural
/// absence of a backup when the budget clamps `epsilon_F` to 1.
#[derive(Debug, Clone, PartialEq)]
pub enum Backup {
    RejectAll,
    PassThrough,
    Filter(BloomFilter),
}

/// Per-query-session probe counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub initial_probes: u64,
    pub classifier_calls: u64,
    pub backup_probes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedFilter {
    pub variant: Variant,
    pub initial: Option<BloomFilter>,
    pub scorer: KeyScorer,
    pub tau: f64,
    pub backup: Backup,
    pub budget: FprBudget,
}

fn split_keys_by_score<K: AsRef<[u8]>>(
    keys: &[K],
    scorer: &KeyScorer,
    tau: f64,
) -> Vec<Vec<u8>> {
    keys.iter()
        .filter(|k| scorer.score_key(k.as_ref()) < tau)
        .map(|k| k.as_ref().to_vec())
        .collect()
}

fn measured_eps_tau<K: AsRef<[u8]>>(negatives: &[K], scorer: &KeyScorer, tau: f64) -> Result<f64, BudgetError> {
    if negatives.is_empty() {
        return Err(BudgetError::EmptyNegatives);
    }
    let fp = negatives
        .iter()
        .filter(|k| scorer.score_key(k.as_ref()) >= tau)
        .count();
    Ok(fp as f64 / negatives.len() as f64)
}

fn build_backup(fn_keys: &[Vec<u8>], epsilon_f: f64, seed: u64) -> Result<Backup, BudgetError> {
    if fn_keys.is_empty() {
        return Ok(Backup::RejectAll);
    }
    if epsilon_f >= EPS_ONE {
        return Ok(Backup::PassThrough);
    }
    Ok(Backup::Filter(BloomFilter::build(fn_keys, epsilon_f, seed)?))
}

/// Build an LBF: classifier in front of a backup filter on its
/// false-negative keys. `epsilon_tau` entering the budget is measured on the
/// calibration negatives, not the requested target.
pub fn lbf_build<K: AsRef<[u8]>, N: AsRef<[u8]>>(
    keys: &[K],
    scorer: KeyScorer,
    tau: f64,
    epsilon: f64,
    calibration_negatives: &[N],
    seed: u64,
) -> Result<LearnedFilter, BudgetError> {
    if keys.is_empty() {
        return Err(BudgetError::NoKeys);
    }
    let eps_tau = measured_eps_tau(calibration_negatives, &scorer, tau)?;
    let mut budget = lbf_budget(epsilon, eps_tau)?;
    let fn_keys = split_keys_by_score(keys, &scorer, tau);
    budget.fn_count = fn_keys.len() as u64;
    budget.n_keys = keys.len() as u64;
    let backup = build_backup(&fn_keys, budget.epsilon_f, seed)?;
    Ok(LearnedFilter {
        variant: Variant::Lbf,
        initial: None,
        scorer,
        tau,
        backup,
        budget,
    })
}

/// Build an SLBF: an initial filter over all keys, then LBF structure.
/// The initial filter is omitted when the budget clamps `epsilon_I` to 1.
pub fn slbf_build<K: AsRef<[u8]>, N: AsRef<[u8]>>(
    keys: &[K],
    scorer: KeyScorer,
    tau: f64,
    epsilon: f64,
    calibration_negatives: &[N],
    seed: u64,
) -> Result<LearnedFilter, BudgetError> {
    if keys.is_empty() {
        return Err(BudgetError::NoKeys);
    }
    let eps_tau = measured_eps_tau(calibration_negatives, &scorer, tau)?;
    let fn_keys = split_keys_by_score(keys, &scorer, tau);
    let budget = slbf_budget(epsilon, eps_tau, fn_keys.len() as u64, keys.len() as u64)?;
    let initial = if budget.epsilon_i >= EPS_ONE {
        None
    } else {
        let all: Vec<Vec<u8>> = keys.iter().map(|k| k.as_ref().to_vec()).collect();
        Some(BloomFilter::build(&all, budget.epsilon_i, seed ^ 0x5eed)?)
    };
    let backup = build_backup(&fn_keys, budget.epsilon_f, seed)?;
    Ok(LearnedFilter {
        variant: Variant::Slbf,
        initial,
        scorer,
        tau,
        backup,
        budget,
    })
}

/// Per-component byte accounting. `total_bytes` is the byte length of the
/// serialized container and equals the sum of the parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct FilterSize {
    pub model_bytes: u64,
    pub initial_bytes: u64,
    pub backup_bytes: u64,
    pub container_bytes: u64,
    pub total_bytes: u64,
}

impl LearnedFilter {
    pub fn query(&self, key: &[u8]) -> bool {
        let mut stats = QueryStats::default();
        self.query_with_stats(key, &mut stats)
    }

    /// Query with probe counting. The initial filter short-circuits: a key
    /// it rejects never reaches the classifier.
    pub fn query_with_stats(&self, key: &[u8], stats: &mut QueryStats) -> bool {
        if let Some(initial) = &self.initial {
            stats.initial_probes += 1;
            if !initial.query(key) {
                return false;
            }
        }
        stats.classifier_calls += 1;
        if self.scorer.score_key(key) >= self.tau {
            return true;
        }
        match &self.backup {
            Backup::RejectAll => false,
            Backup::PassThrough => true,
            Backup::Filter(f) => {
                stats.backup_probes += 1;
                f.query(key)
            }
        }
    }

    pub fn size_bytes(&self) -> FilterSize {
        let total = self.encode().len() as u64;
        let model_bytes =
            encode_model(&self.scorer.model, &self.scorer.vocab, self.scorer.mode).len() as u64;
        let initial_bytes = self.initial.as_ref().map_or(0, |f| f.serialized_bytes());
        let backup_bytes = match &self.backup {
            Backup::Filter(f) => f.serialized_bytes(),
            _ => 0,
        };
        FilterSize {
            model_bytes,
            initial_bytes,
            backup_bytes,
            container_bytes: total - model_bytes - initial_bytes - backup_bytes,
            total_bytes: total,
        }
    }

    /// Container format: magic "LBC1", version, variant, tau, budget record,
    /// then length-prefixed model / initial / backup blobs.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"LBC1");
        out.push(codec::FORMAT_VERSION);
        out.push(match self.variant {
            Variant::Lbf => 1,
            Variant::Slbf => 2,
        });
        out.extend_from_slice(&self.tau.to_le_bytes());
        out.extend_from_slice(&self.budget.epsilon.to_le_bytes());
        out.extend_from_slice(&self.budget.epsilon_tau.to_le_bytes());
        out.extend_from_slice(&self.budget.epsilon_f.to_le_bytes());
        out.extend_from_slice(&self.budget.epsilon_i.to_le_bytes());
        out.extend_from_slice(&self.budget.fn_count.to_le_bytes());
        out.extend_from_slice(&self.budget.n_keys.to_le_bytes());
        out.push(self.initial.is_some() as u8);
        out.push(match &self.backup {
            Backup::RejectAll => 0,
            Backup::PassThrough => 1,
            Backup::Filter(_) => 2,
        });
        codec::put_blob(
            &mut out,
            &encode_model(&self.scorer.model, &self.scorer.vocab, self.scorer.mode),
        );
        if let Some(initial) = &self.initial {
            codec::put_blob(&mut out, &initial.encode(LayerTag::Initial));
        }
        if let Backup::Filter(f) = &self.backup {
            codec::put_blob(&mut out, &f.encode(LayerTag::Backup));
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = codec::Reader::new(bytes);
        r.expect_magic(b"LBC1")?;
        r.expect_version()?;
        let variant = match r.u8()? {
            1 => Variant::Lbf,
            2 => Variant::Slbf,
            v => return Err(CodecError::Corrupt(format!("unknown variant {v}"))),
        };
        let tau = r.f64()?;
        let budget = FprBudget {
            epsilon: r.f64()?,
            epsilon_tau: r.f64()?,
            epsilon_f: r.f64()?,
            epsilon_i: r.f64()?,
            fn_count: r.u64()?,
            n_keys: r.u64()?,
        };
        let has_initial = r.u8()? == 1;
        let backup_kind = r.u8()?;
        let (model, vocab, mode) = decode_model(r.blob()?)?;
        let initial = if has_initial {
            let (f, tag) = BloomFilter::decode(r.blob()?)?;
            if tag != LayerTag::Initial {
                return Err(CodecError::Corrupt("initial blob has wrong layer tag".into()));
            }
            Some(f)
        } else {
            None
        };
        let backup = match backup_kind {
            0 => Backup::RejectAll,
            1 => Backup::PassThrough,
            2 => {
                let (f, tag) = BloomFilter::decode(r.blob()?)?;
                if tag != LayerTag::Backup {
                    return Err(CodecError::Corrupt("backup blob has wrong layer tag".into()));
                }
                Backup::Filter(f)
            }
            k => return Err(CodecError::Corrupt(format!("unknown backup kind {k}"))),
        };
        r.expect_end()?;
        Ok(LearnedFilter {
            variant,
            initial,
            scorer: KeyScorer::new(model, vocab, mode),
            tau,
            backup,
            budget,
        })
    }
}

impl Membership for LearnedFilter {
    fn contains(&self, key: &[u8]) -> bool {
        self.query(key)
    }
}

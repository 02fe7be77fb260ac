//! The four classifier paradigms behind the learned filters: multinomial
//! naive Bayes, logistic regression, linear SVM, and a one-hidden-layer
//! feed-forward network. All expose a score in [0,1] and a byte-accurate
//! serialized size.

mod ffnn;
mod linear;
mod nb;

pub use ffnn::{ffnn_loss_and_grad, FfnnParams};
pub use linear::LinearParams;
pub use nb::NbParams;

use crate::codec::{self, CodecError};
use crate::features::{CharVocabulary, FrequencyMode};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrainError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("smoothing/regularization strength must be > 0, got {0}")]
    BadHyperparameter(f64),
    #[error("non-finite loss at epoch {epoch} (divergent learning rate?)")]
    NonFinite { epoch: usize },
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("hidden width must be >= 1")]
    ZeroHidden,
    #[error("empty training set")]
    EmptyData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Nb,
    Lr,
    Svm,
    Ffnn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Nb,
        ClassifierKind::Lr,
        ClassifierKind::Svm,
        ClassifierKind::Ffnn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Nb => "nb",
            ClassifierKind::Lr => "lr",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Ffnn => "ffnn",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nb" => Ok(ClassifierKind::Nb),
            "lr" => Ok(ClassifierKind::Lr),
            "svm" => Ok(ClassifierKind::Svm),
            "ffnn" => Ok(ClassifierKind::Ffnn),
            other => Err(format!("unknown classifier kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

/// Training hyperparameters. `reg` is the smoothing strength for NB, the L2
/// strength for LR, and C for the SVM.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub reg: f64,
    pub hidden: usize,
    pub activation: Activation,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.1,
            epochs: 30,
            batch_size: 64,
            seed: 0,
            reg: 1e-4,
            hidden: 20,
            activation: Activation::Relu,
        }
    }
}

/// A trained scorer. `Constant` exists for adversarial testing of the
/// learned-filter layer; the trainers never produce it.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoringModel {
    Constant { value: f64, feature_dim: usize },
    Nb(NbParams),
    Lr(LinearParams),
    Svm(LinearParams),
    Ffnn(FfnnParams),
}

impl ScoringModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ScoringModel::Constant { .. } => "constant",
            ScoringModel::Nb(_) => "nb",
            ScoringModel::Lr(_) => "lr",
            ScoringModel::Svm(_) => "svm",
            ScoringModel::Ffnn(_) => "ffnn",
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            ScoringModel::Constant { feature_dim, .. } => *feature_dim,
            ScoringModel::Nb(p) => p.feature_dim(),
            ScoringModel::Lr(p) | ScoringModel::Svm(p) => p.feature_dim(),
            ScoringModel::Ffnn(p) => p.feature_dim(),
        }
    }

    /// Score in [0,1]; larger means more likely a key. Panics on a feature
    /// dimension mismatch (see [`ScoringModel::score_checked`]).
    pub fn score(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.feature_dim(), "feature dimension mismatch");
        match self {
            ScoringModel::Constant { value, .. } => *value,
            ScoringModel::Nb(p) => p.score(x),
            ScoringModel::Lr(p) => sigmoid(p.raw(x)),
            ScoringModel::Svm(p) => sigmoid(p.scale * p.raw(x)),
            ScoringModel::Ffnn(p) => p.score(x),
        }
    }

    pub fn score_checked(&self, x: &[f64]) -> Result<f64, TrainError> {
        if x.len() != self.feature_dim() {
            return Err(TrainError::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.len(),
            });
        }
        Ok(self.score(x))
    }

    pub fn score_all(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        xs.iter().map(|x| self.score(x)).collect()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_two_classes(labels: &[i8]) -> Result<(), TrainError> {
    if labels.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let pos = labels.contains(&1);
    let neg = labels.contains(&-1);
    if pos && neg {
        Ok(())
    } else {
        Err(TrainError::SingleClass)
    }
}

pub use ffnn::train_ffnn;
pub use linear::{train_lr, train_svm};
pub use nb::train_nb;

/// Absolute counts for NB (its multinomial form works on counts); the
/// requested mode for everything else.
pub fn encoding_mode_for(kind: ClassifierKind, requested: FrequencyMode) -> FrequencyMode {
    match kind {
        ClassifierKind::Nb => FrequencyMode::Absolute,
        _ => requested,
    }
}

pub fn train(
    kind: ClassifierKind,
    xs: &[Vec<f64>],
    ys: &[i8],
    config: &TrainingConfig,
) -> Result<ScoringModel, TrainError> {
    match kind {
        ClassifierKind::Nb => train_nb(xs, ys, config.reg),
        ClassifierKind::Lr => train_lr(xs, ys, config),
        ClassifierKind::Svm => train_svm(xs, ys, config),
        ClassifierKind::Ffnn => train_ffnn(xs, ys, config),
    }
}

// ---------------------------------------------------------------------------
// Canonical model serialization: magic "LBM1", version, kind tag,
// frequency-mode byte, feature_dim, embedded vocabulary, then the f32
// parameter payload. The byte length of this encoding is the classifier
// "space" reported everywhere.
// ---------------------------------------------------------------------------

const KIND_CONSTANT: u8 = 0;
const KIND_NB: u8 = 1;
const KIND_LR: u8 = 2;
const KIND_SVM: u8 = 3;
const KIND_FFNN: u8 = 4;

pub fn encode_model(
    model: &ScoringModel,
    vocab: &CharVocabulary,
    mode: FrequencyMode,
) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"LBM1");
    out.push(codec::FORMAT_VERSION);
    out.push(match model {
        ScoringModel::Constant { .. } => KIND_CONSTANT,
        ScoringModel::Nb(_) => KIND_NB,
        ScoringModel::Lr(_) => KIND_LR,
        ScoringModel::Svm(_) => KIND_SVM,
        ScoringModel::Ffnn(_) => KIND_FFNN,
    });
    out.push(match mode {
        FrequencyMode::Relative => 0,
        FrequencyMode::Absolute => 1,
    });
    out.extend_from_slice(&(model.feature_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(vocab.len() as u32).to_le_bytes());
    for &c in vocab.chars() {
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    let put = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&(v as f32).to_le_bytes());
    match model {
        ScoringModel::Constant { value, .. } => put(&mut out, *value),
        ScoringModel::Nb(p) => {
            put(&mut out, p.alpha);
            put(&mut out, p.log_prior[0]);
            put(&mut out, p.log_prior[1]);
            for class in &p.log_prob {
                for &v in class {
                    put(&mut out, v);
                }
            }
        }
        ScoringModel::Lr(p) | ScoringModel::Svm(p) => {
            put(&mut out, p.reg);
            put(&mut out, p.scale);
            put(&mut out, p.bias);
            for &w in &p.weights {
                put(&mut out, w);
            }
        }
        ScoringModel::Ffnn(p) => {
            out.extend_from_slice(&(p.hidden as u32).to_le_bytes());
            out.push(match p.activation {
                Activation::Relu => 0,
                Activation::Tanh => 1,
            });
            for &w in p.w1.iter().chain(&p.b1).chain(&p.w2) {
                put(&mut out, w);
            }
            put(&mut out, p.b2);
        }
    }
    out
}

pub fn model_size_bytes(model: &ScoringModel, vocab: &CharVocabulary, mode: FrequencyMode) -> u64 {
    encode_model(model, vocab, mode).len() as u64
}

pub fn decode_model(
    bytes: &[u8],
) -> Result<(ScoringModel, CharVocabulary, FrequencyMode), CodecError> {
    let mut r = codec::Reader::new(bytes);
    r.expect_magic(b"LBM1")?;
    r.expect_version()?;
    let kind = r.u8()?;
    let mode = match r.u8()? {
        0 => FrequencyMode::Relative,
        1 => FrequencyMode::Absolute,
        m => return Err(CodecError::Corrupt(format!("bad frequency mode {m}"))),
    };
    let dim = r.u32()? as usize;
    let vocab_len = r.u32()? as usize;
    let mut chars = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let cp = r.u32()?;
        chars.push(
            char::from_u32(cp)
                .ok_or_else(|| CodecError::Corrupt(format!("bad code point {cp}")))?,
        );
    }
    let vocab = CharVocabulary::from_chars(chars);
    let model = match kind {
        KIND_CONSTANT => ScoringModel::Constant {
            value: r.f32()? as f64,
            feature_dim: dim,
        },
        KIND_NB => {
            let alpha = r.f32()? as f64;
            let log_prior = [r.f32()? as f64, r.f32()? as f64];
            let mut log_prob = [vec![0.0; dim], vec![0.0; dim]];
            for class in &mut log_prob {
                for v in class.iter_mut() {
                    *v = r.f32()? as f64;
                }
            }
            ScoringModel::Nb(NbParams { log_prior, log_prob, alpha })
        }
        KIND_LR | KIND_SVM => {
            let reg = r.f32()? as f64;
            let scale = r.f32()? as f64;
            let bias = r.f32()? as f64;
            let mut weights = vec![0.0; dim];
            for w in &mut weights {
                *w = r.f32()? as f64;
            }
            let p = LinearParams { weights, bias, reg, scale };
            if kind == KIND_LR {
                ScoringModel::Lr(p)
            } else {
                ScoringModel::Svm(p)
            }
        }
        KIND_FFNN => {
            let hidden = r.u32()? as usize;
            let activation = match r.u8()? {
                0 => Activation::Relu,
                1 => Activation::Tanh,
                a => return Err(CodecError::Corrupt(format!("bad activation {a}"))),
            };
            let mut w1 = vec![0.0; hidden * dim];
            let mut b1 = vec![0.0; hidden];
            let mut w2 = vec![0.0; hidden];
            for v in w1.iter_mut().chain(&mut b1).chain(&mut w2) {
                *v = r.f32()? as f64;
            }
            let b2 = r.f32()? as f64;
            ScoringModel::Ffnn(FfnnParams { w1, b1, w2, b2, hidden, input_dim: dim, activation })
        }
        other => return Err(CodecError::Corrupt(format!("unknown model kind {other}"))),
    };
    r.expect_end()?;
    if model.feature_dim() != dim {
        return Err(CodecError::Corrupt("feature_dim mismatch".into()));
    }
    Ok((model, vocab, mode))
}

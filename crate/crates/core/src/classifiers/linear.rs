//! Logistic regression and linear SVM trained by mini-batch (sub)gradient
//! descent with a fixed learning rate.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_two_classes, sigmoid, ScoringModel, TrainError, TrainingConfig};

/// Shared parameter block for LR and SVM. `scale` is 1 for LR; for the SVM
/// it is the fitted calibration scale mapping margins into [0,1] scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub reg: f64,
    pub scale: f64,
}

impl LinearParams {
    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    /// Raw linear output w.x + b.
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.bias
    }
}

fn shuffled_batches(n: usize, batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
        .chunks(batch_size.max(1))
        .map(|c| c.to_vec())
        .collect()
}

/// L2-regularized logistic loss, labels in {-1, +1}; the bias is not
/// regularized. Score is sigmoid(w.x + b).
pub fn train_lr(
    xs: &[Vec<f64>],
    ys: &[i8],
    config: &TrainingConfig,
) -> Result<ScoringModel, TrainError> {
    check_two_classes(ys)?;
    let dim = xs[0].len();
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for epoch in 0..config.epochs {
        for batch in shuffled_batches(xs.len(), config.batch_size, &mut rng) {
            let mut gw = vec![0.0f64; dim];
            let mut gb = 0.0f64;
            for &i in &batch {
                let y = ys[i] as f64;
                let f: f64 = w.iter().zip(&xs[i]).map(|(wj, xj)| wj * xj).sum::<f64>() + b;
                // d/df of log(1 + exp(-y f)) = -y * sigmoid(-y f)
                let g = -y * sigmoid(-y * f);
                for (gj, xj) in gw.iter_mut().zip(&xs[i]) {
                    *gj += g * xj;
                }
                gb += g;
            }
            let inv = 1.0 / batch.len() as f64;
            for (wj, gj) in w.iter_mut().zip(&gw) {
                *wj -= config.learning_rate * (gj * inv + config.reg * *wj);
            }
            b -= config.learning_rate * gb * inv;
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(TrainError::NonFinite { epoch });
        }
    }
    Ok(ScoringModel::Lr(LinearParams { weights: w, bias: b, reg: config.reg, scale: 1.0 }))
}

/// Hinge-loss linear SVM: (1/2)||w||^2 + C * sum hinge(y f(x)), minimized by
/// mini-batch sub-gradient descent. `config.reg` plays the role of C. The
/// raw margin is squashed into a score by a single fitted logistic scale.
pub fn train_svm(
    xs: &[Vec<f64>],
    ys: &[i8],
    config: &TrainingConfig,
) -> Result<ScoringModel, TrainError> {
    check_two_classes(ys)?;
    let dim = xs[0].len();
    let n = xs.len() as f64;
    let c = config.reg;
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for epoch in 0..config.epochs {
        for batch in shuffled_batches(xs.len(), config.batch_size, &mut rng) {
            // Per-batch slice of the full objective: the regularizer is
            // spread across batches so an epoch sums to w + C * sum grad.
            let frac = batch.len() as f64 / n;
            let mut gw: Vec<f64> = w.iter().map(|wj| wj * frac).collect();
            let mut gb = 0.0f64;
            for &i in &batch {
                let y = ys[i] as f64;
                let f: f64 = w.iter().zip(&xs[i]).map(|(wj, xj)| wj * xj).sum::<f64>() + b;
                if y * f < 1.0 {
                    for (gj, xj) in gw.iter_mut().zip(&xs[i]) {
                        *gj -= c * y * xj;
                    }
                    gb -= c * y;
                }
            }
            let step = config.learning_rate / batch.len() as f64;
            for (wj, gj) in w.iter_mut().zip(&gw) {
                *wj -= step * gj;
            }
            b -= step * gb;
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(TrainError::NonFinite { epoch });
        }
    }
    let mut params = LinearParams { weights: w, bias: b, reg: c, scale: 1.0 };
    params.scale = fit_scale(&params, xs, ys);
    Ok(ScoringModel::Svm(params))
}

/// Pick the logistic squashing scale minimizing mean log-loss of
/// sigmoid(s * f(x)) against the training labels, over a fixed log grid.
fn fit_scale(params: &LinearParams, xs: &[Vec<f64>], ys: &[i8]) -> f64 {
    let margins: Vec<f64> = xs.iter().map(|x| params.raw(x)).collect();
    let loss = |s: f64| -> f64 {
        margins
            .iter()
            .zip(ys)
            .map(|(&f, &y)| {
                let z = y as f64 * s * f;
                // log(1 + exp(-z)), stably
                if z > 0.0 { (-z).exp().ln_1p() } else { (z.exp().ln_1p()) - z }
            })
            .sum::<f64>()
            / margins.len() as f64
    };
    let mut best = (1.0, loss(1.0));
    for i in 0..=60 {
        let s = 10f64.powf(-3.0 + i as f64 * 0.1);
        let l = loss(s);
        if l < best.1 {
            best = (s, l);
        }
    }
    best.0
}

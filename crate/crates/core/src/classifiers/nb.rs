//! Multinomial naive Bayes over absolute character counts with Laplace
//! smoothing. Score is the posterior probability of the key class.

use super::{check_two_classes, ScoringModel, TrainError};

/// Class 0 is the negative class (-1), class 1 the key class (+1).
#[derive(Debug, Clone, PartialEq)]
pub struct NbParams {
    pub log_prior: [f64; 2],
    pub log_prob: [Vec<f64>; 2],
    pub alpha: f64,
}

impl NbParams {
    pub fn feature_dim(&self) -> usize {
        self.log_prob[0].len()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let joint = |c: usize| -> f64 {
            self.log_prior[c]
                + x.iter()
                    .zip(&self.log_prob[c])
                    .map(|(&xi, &lp)| xi * lp)
                    .sum::<f64>()
        };
        let (l_neg, l_pos) = (joint(0), joint(1));
        // posterior of the key class via a stable two-way softmax
        super::sigmoid(l_pos - l_neg)
    }
}

pub fn train_nb(xs: &[Vec<f64>], ys: &[i8], alpha: f64) -> Result<ScoringModel, TrainError> {
    check_two_classes(ys)?;
    if alpha <= 0.0 {
        return Err(TrainError::BadHyperparameter(alpha));
    }
    let dim = xs[0].len();
    let mut class_counts = [0.0f64; 2];
    let mut feature_counts = [vec![0.0f64; dim], vec![0.0f64; dim]];
    for (x, &y) in xs.iter().zip(ys) {
        let c = if y == 1 { 1 } else { 0 };
        class_counts[c] += 1.0;
        for (acc, &xi) in feature_counts[c].iter_mut().zip(x) {
            *acc += xi;
        }
    }
    let total = class_counts[0] + class_counts[1];
    let mut log_prob = [vec![0.0; dim], vec![0.0; dim]];
    for c in 0..2 {
        let class_total: f64 = feature_counts[c].iter().sum();
        let denom = class_total + alpha * dim as f64;
        for (lp, &count) in log_prob[c].iter_mut().zip(&feature_counts[c]) {
            *lp = ((count + alpha) / denom).ln();
        }
    }
    Ok(ScoringModel::Nb(NbParams {
        log_prior: [
            (class_counts[0] / total).ln(),
            (class_counts[1] / total).ln(),
        ],
        log_prob,
        alpha,
    }))
}

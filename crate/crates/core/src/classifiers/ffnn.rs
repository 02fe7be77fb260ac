//! One-hidden-layer feed-forward network with a sigmoid output, trained by
//! mini-batch backpropagation on binary cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_two_classes, sigmoid, Activation, ScoringModel, TrainError, TrainingConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct FfnnParams {
    /// Hidden weights, row-major `hidden x input_dim`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub hidden: usize,
    pub input_dim: usize,
    pub activation: Activation,
}

impl FfnnParams {
    pub fn zeros(input_dim: usize, hidden: usize, activation: Activation) -> Self {
        FfnnParams {
            w1: vec![0.0; hidden * input_dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            hidden,
            input_dim,
            activation,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.input_dim
    }

    fn hidden_out(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let z = self.w1[h * self.input_dim..(h + 1) * self.input_dim]
                    .iter()
                    .zip(x)
                    .map(|(w, xi)| w * xi)
                    .sum::<f64>()
                    + self.b1[h];
                match self.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Tanh => z.tanh(),
                }
            })
            .collect()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let a1 = self.hidden_out(x);
        sigmoid(self.w2.iter().zip(&a1).map(|(w, a)| w * a).sum::<f64>() + self.b2)
    }

    /// Flat parameter vector in (w1, b1, w2, b2) order; the layout used by
    /// the finite-difference gradient check.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.w1.clone();
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn unflatten(&self, flat: &[f64]) -> FfnnParams {
        let (h, d) = (self.hidden, self.input_dim);
        assert_eq!(flat.len(), h * d + h + h + 1);
        FfnnParams {
            w1: flat[..h * d].to_vec(),
            b1: flat[h * d..h * d + h].to_vec(),
            w2: flat[h * d + h..h * d + 2 * h].to_vec(),
            b2: flat[h * d + 2 * h],
            hidden: h,
            input_dim: d,
            activation: self.activation,
        }
    }
}

/// Binary cross-entropy loss of one sample (label in {-1,+1}) and its
/// analytic gradient in [`FfnnParams::flatten`] layout.
pub fn ffnn_loss_and_grad(params: &FfnnParams, x: &[f64], y: i8) -> (f64, Vec<f64>) {
    let (h, d) = (params.hidden, params.input_dim);
    let target = if y == 1 { 1.0 } else { 0.0 };
    let z1: Vec<f64> = (0..h)
        .map(|i| {
            params.w1[i * d..(i + 1) * d]
                .iter()
                .zip(x)
                .map(|(w, xi)| w * xi)
                .sum::<f64>()
                + params.b1[i]
        })
        .collect();
    let a1: Vec<f64> = z1
        .iter()
        .map(|&z| match params.activation {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        })
        .collect();
    let f = params.w2.iter().zip(&a1).map(|(w, a)| w * a).sum::<f64>() + params.b2;
    let p = sigmoid(f);
    // stable BCE in terms of the logit
    let loss = if f >= 0.0 {
        (1.0 - target) * f + (-f).exp().ln_1p()
    } else {
        -target * f + f.exp().ln_1p()
    };
    let df = p - target;
    let mut grad = vec![0.0f64; h * d + h + h + 1];
    for i in 0..h {
        let da = df * params.w2[i];
        let dz = da
            * match params.activation {
                Activation::Relu => {
                    if z1[i] > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Activation::Tanh => 1.0 - a1[i] * a1[i],
            };
        for (j, &xj) in x.iter().enumerate() {
            grad[i * d + j] = dz * xj;
        }
        grad[h * d + i] = dz;
        grad[h * d + h + i] = df * a1[i];
    }
    grad[h * d + 2 * h] = df;
    (loss, grad)
}

pub fn train_ffnn(
    xs: &[Vec<f64>],
    ys: &[i8],
    config: &TrainingConfig,
) -> Result<ScoringModel, TrainError> {
    check_two_classes(ys)?;
    if config.hidden == 0 {
        return Err(TrainError::ZeroHidden);
    }
    let dim = xs[0].len();
    let h = config.hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = (6.0 / (dim + h) as f64).sqrt();
    let mut params = FfnnParams::zeros(dim, h, config.activation);
    for w in &mut params.w1 {
        *w = rng.gen_range(-bound..bound);
    }
    let out_bound = (6.0 / (h + 1) as f64).sqrt();
    for w in &mut params.w2 {
        *w = rng.gen_range(-out_bound..out_bound);
    }

    let mut flat = params.flatten();
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            let current = params.unflatten(&flat);
            let mut grad_sum = vec![0.0f64; flat.len()];
            for &i in batch {
                let (_, g) = ffnn_loss_and_grad(&current, &xs[i], ys[i]);
                for (acc, gi) in grad_sum.iter_mut().zip(&g) {
                    *acc += gi;
                }
            }
            let step = config.learning_rate / batch.len() as f64;
            for (p, g) in flat.iter_mut().zip(&grad_sum) {
                *p -= step * g;
            }
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(TrainError::NonFinite { epoch });
        }
    }
    Ok(ScoringModel::Ffnn(params.unflatten(&flat)))
}

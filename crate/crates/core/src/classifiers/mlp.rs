//! One-hidden-layer perceptron: `input -> ReLU(hidden) -> softmax(classes)`,
//! trained on mean cross-entropy by mini-batch gradient descent with
//! classical momentum.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier, ModelError};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: 64, learning_rate: 0.01, epochs: 60, batch_size: 32, momentum: 0.9 }
    }
}

/// Weights are row-major: `w1` is `hidden x inputs`, `w2` is
/// `classes x hidden`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: [usize; 3],
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub params: Option<MlpParams>,
}

/// Gradient of the mean loss, laid out like [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpGradient {
    fn zeros(sizes: [usize; 3]) -> Self {
        let [d, h, c] = sizes;
        Self { w1: vec![0.0; h * d], b1: vec![0.0; h], w2: vec![0.0; c * h], b2: vec![0.0; c] }
    }

    /// Concatenation `w1 | b1 | w2 | b2`, matching [`MlpModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }
}

struct Forward {
    hidden: Vec<f64>,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl MlpModel {
    /// All weights and biases zero; every input scores `1 / classes`.
    pub fn zeros(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            layer_sizes: [inputs, hidden, classes],
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; classes * hidden],
            b2: vec![0.0; classes],
            params: None,
        }
    }

    /// Uniform initialization: hidden weights in `±sqrt(6 / inputs)`, output
    /// weights in `±1 / sqrt(hidden)`, biases zero.
    pub fn init(inputs: usize, hidden: usize, classes: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(inputs, hidden, classes);
        let a1 = (6.0 / inputs as f64).sqrt();
        let a2 = 1.0 / (hidden as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.random_range(-a1..a1));
        m.w2.iter_mut().for_each(|w| *w = rng.random_range(-a2..a2));
        m
    }

    pub fn fit(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        params: &MlpParams,
        seed: u64,
    ) -> Result<Self, ModelError> {
        check_training(x, y, n_classes)?;
        if params.hidden == 0 || params.batch_size == 0 || !(params.learning_rate > 0.0) {
            return Err(ModelError::InvalidParams("hidden, batch_size and learning_rate must be positive".into()));
        }
        let mut rng = seed::rng_for(seed, "mlp");
        let mut model = Self::init(x.cols(), params.hidden, n_classes, &mut rng);
        model.params = Some(params.clone());
        let mut velocity = MlpGradient::zeros(model.layer_sizes);
        let mut order: Vec<usize> = (0..x.rows()).collect();
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(params.batch_size) {
                let (loss, grad) = model.loss_and_gradient_rows(x, y, batch);
                if !loss.is_finite() {
                    return Err(ModelError::NonFiniteLoss { epoch });
                }
                epoch_loss += loss * batch.len() as f64;
                model.momentum_step(&mut velocity, &grad, params.learning_rate, params.momentum);
            }
            if !epoch_loss.is_finite() || !model.parameters().iter().all(|p| p.is_finite()) {
                return Err(ModelError::NonFiniteLoss { epoch });
            }
        }
        Ok(model)
    }

    fn momentum_step(&mut self, v: &mut MlpGradient, g: &MlpGradient, lr: f64, mu: f64) {
        fn step(p: &mut [f64], v: &mut [f64], g: &[f64], lr: f64, mu: f64) {
            for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                *v = mu * *v - lr * g;
                *p += *v;
            }
        }
        step(&mut self.w1, &mut v.w1, &g.w1, lr, mu);
        step(&mut self.b1, &mut v.b1, &g.b1, lr, mu);
        step(&mut self.w2, &mut v.w2, &g.w2, lr, mu);
        step(&mut self.b2, &mut v.b2, &g.b2, lr, mu);
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let [d, h, c] = self.layer_sizes;
        let mut hidden = self.b1.clone();
        for (j, hj) in hidden.iter_mut().enumerate() {
            let w = &self.w1[j * d..(j + 1) * d];
            *hj += w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *hj = hj.max(0.0);
        }
        let mut logits = self.b2.clone();
        for (k, lk) in logits.iter_mut().enumerate() {
            let w = &self.w2[k * h..(k + 1) * h];
            *lk += w.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        let log_probs: Vec<f64> = logits.iter().map(|l| l - log_norm).collect();
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        debug_assert_eq!(c, logits.len());
        Forward { hidden, probs, log_probs }
    }

    /// Mean cross-entropy over all rows.
    pub fn loss(&self, x: &Matrix, y: &[usize]) -> f64 {
        let rows: Vec<usize> = (0..x.rows()).collect();
        self.loss_and_gradient_rows(x, y, &rows).0
    }

    /// Mean cross-entropy over all rows and its analytic gradient.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[usize]) -> (f64, MlpGradient) {
        let rows: Vec<usize> = (0..x.rows()).collect();
        self.loss_and_gradient_rows(x, y, &rows)
    }

    fn loss_and_gradient_rows(&self, x: &Matrix, y: &[usize], rows: &[usize]) -> (f64, MlpGradient) {
        let [d, h, c] = self.layer_sizes;
        let mut g = MlpGradient::zeros(self.layer_sizes);
        let mut loss = 0.0;
        let scale = 1.0 / rows.len() as f64;
        let mut delta_hidden = vec![0.0; h];
        for &r in rows {
            let xi = x.row(r);
            let f = self.forward(xi);
            loss -= f.log_probs[y[r]];
            // dL/dlogit = p - onehot
            delta_hidden.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..c {
                let dk = (f.probs[k] - f64::from(u8::from(k == y[r]))) * scale;
                g.b2[k] += dk;
                let wrow = &self.w2[k * h..(k + 1) * h];
                let grow = &mut g.w2[k * h..(k + 1) * h];
                for j in 0..h {
                    grow[j] += dk * f.hidden[j];
                    delta_hidden[j] += dk * wrow[j];
                }
            }
            for j in 0..h {
                if f.hidden[j] <= 0.0 {
                    continue;
                }
                let dj = delta_hidden[j];
                g.b1[j] += dj;
                let grow = &mut g.w1[j * d..(j + 1) * d];
                for (gw, &xv) in grow.iter_mut().zip(xi) {
                    *gw += dj * xv;
                }
            }
        }
        (loss * scale, g)
    }

    /// Concatenation `w1 | b1 | w2 | b2`.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    /// Copy of the model with parameters taken from a flat vector laid out
    /// as in [`MlpModel::parameters`].
    pub fn with_parameters(&self, flat: &[f64]) -> Self {
        let mut m = self.clone();
        let mut rest = flat;
        for part in [&mut m.w1, &mut m.b1, &mut m.w2, &mut m.b2] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
        assert!(rest.is_empty(), "parameter vector length mismatch");
        m
    }
}

impl Classifier for MlpModel {
    fn n_classes(&self) -> usize {
        self.layer_sizes[2]
    }

    fn predict_scores(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_is_uniform() {
        let m = MlpModel::zeros(4, 3, 5);
        let s = m.predict_scores(&[1.0, -2.0, 3.0, 0.5]);
        assert!(s.iter().all(|&p| (p - 0.2).abs() < 1e-15));
        assert_eq!(m.predict_label(&[0.0; 4]), 0);
    }

    #[test]
    fn parameter_round_trip() {
        let m = MlpModel::init(3, 4, 2, &mut seed::rng(1));
        let p = m.parameters();
        assert_eq!(p.len(), 3 * 4 + 4 + 4 * 2 + 2);
        assert_eq!(m.with_parameters(&p), m);
    }

    #[test]
    fn diverging_learning_rate_is_reported() {
        let x = Matrix::from_rows(&[[1e150, -1e150], [-1e150, 1e150]], 2);
        let p = MlpParams { hidden: 4, learning_rate: 1e10, epochs: 5, batch_size: 2, momentum: 0.9 };
        assert!(matches!(MlpModel::fit(&x, &[0, 1], 2, &p, 0), Err(ModelError::NonFiniteLoss { .. })));
    }

    #[test]
    fn loss_decreases_on_easy_data() {
        let x = Matrix::from_rows(
            &(0..40).map(|i| [if i % 2 == 0 { 1.0 } else { -1.0 }, (i as f64) * 0.01]).collect::<Vec<_>>(),
            2,
        );
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let p = MlpParams { hidden: 8, learning_rate: 0.05, epochs: 30, batch_size: 8, momentum: 0.9 };
        let m = MlpModel::fit(&x, &y, 2, &p, 4).unwrap();
        let init = MlpModel::init(2, 8, 2, &mut seed::rng_for(4, "mlp"));
        assert!(m.loss(&x, &y) < init.loss(&x, &y));
        assert!(m.loss(&x, &y) < 0.1);
    }
}

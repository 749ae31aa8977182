//! Multinomial logistic regression on standardized fingerprints.
//!
//! The objective is the mean cross-entropy plus `l2 / 2 * ||W||^2` over the
//! non-bias weights. Because the loss is a mean, duplicating every training
//! sample leaves the objective, and therefore the fitted model, unchanged.
//! Training is full-batch gradient descent with a backtracking line search,
//! starting from zero weights and biases at the class log-priors.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop once the gradient norm falls below this value.
    pub tol: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            l2: 1e-3,
            max_epochs: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: Vec<usize>,
    n_features: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Row `k` holds `n_features` weights followed by the bias of class `k`.
    weights: Vec<f64>,
    epochs: usize,
}

/// Loss and gradient of the objective for weights laid out as in
/// [`LinearModel`], on already standardized inputs.
pub fn logistic_objective(weights: &[f64], x: &[Vec<f64>], y: &[usize], n_classes: usize, l2: f64) -> (f64, Vec<f64>) {
    let d = x.first().map_or(0, Vec::len);
    let stride = d + 1;
    let n = x.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    let mut scores = vec![0.0; n_classes];
    for (xi, &yi) in x.iter().zip(y) {
        for (k, s) in scores.iter_mut().enumerate() {
            let w = &weights[k * stride..(k + 1) * stride];
            *s = w[d] + w[..d].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        loss += log_norm - scores[yi];
        for k in 0..n_classes {
            let p = (scores[k] - log_norm).exp() - if k == yi { 1.0 } else { 0.0 };
            let g = &mut grad[k * stride..(k + 1) * stride];
            for (gj, xj) in g[..d].iter_mut().zip(xi) {
                *gj += p * xj;
            }
            g[d] += p;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for k in 0..n_classes {
        for j in 0..d {
            let w = weights[k * stride + j];
            loss += 0.5 * l2 * w * w;
            grad[k * stride + j] += l2 * w;
        }
    }
    (loss, grad)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl LinearModel {
    pub fn train(features: &[Vec<f64>], targets: &[usize], config: &LinearConfig) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::InvalidData("features and targets differ in length".into()));
        }
        let mut classes = targets.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::InvalidData("the classifier needs at least two classes".into()));
        }
        let d = features[0].len();
        if features.iter().any(|f| f.len() != d) {
            return Err(Error::InvalidData("inconsistent feature dimensions".into()));
        }
        if features.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::InvalidData("NaN feature".into()));
        }

        let n = features.len() as f64;
        let mut mean = vec![0.0; d];
        for f in features {
            mean.iter_mut().zip(f).for_each(|(m, v)| *m += v / n);
        }
        let mut scale = vec![0.0; d];
        for f in features {
            scale.iter_mut().zip(f).zip(&mean).for_each(|((s, v), m)| *s += (v - m) * (v - m) / n);
        }
        scale.iter_mut().for_each(|s| *s = if *s > 0.0 { s.sqrt() } else { 1.0 });

        let k = classes.len();
        let y: Vec<usize> = targets.iter().map(|t| classes.binary_search(t).unwrap()).collect();
        let mut model = LinearModel {
            classes,
            n_features: d,
            mean,
            scale,
            weights: vec![0.0; k * (d + 1)],
            epochs: 0,
        };
        let x: Vec<Vec<f64>> = features.iter().map(|f| model.standardize(f)).collect();
        for c in 0..k {
            let count = y.iter().filter(|&&yi| yi == c).count() as f64;
            model.weights[c * (d + 1) + d] = (count / n).ln();
        }

        let (mut loss, mut grad) = logistic_objective(&model.weights, &x, &y, k, config.l2);
        let mut step = 1.0;
        while model.epochs < config.max_epochs && norm(&grad) >= config.tol {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            let mut accepted = false;
            while step > 1e-12 {
                let trial: Vec<f64> = model.weights.iter().zip(&grad).map(|(w, g)| w - step * g).collect();
                let (trial_loss, trial_grad) = logistic_objective(&trial, &x, &y, k, config.l2);
                if trial_loss <= loss - 1e-4 * step * g2 {
                    model.weights = trial;
                    loss = trial_loss;
                    grad = trial_grad;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            step *= 2.0;
            model.epochs += 1;
        }
        Ok(model)
    }

    fn standardize(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    /// Weights of one class: features followed by the bias.
    pub fn class_weights(&self, class_index: usize) -> &[f64] {
        let stride = self.n_features + 1;
        &self.weights[class_index * stride..(class_index + 1) * stride]
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn predict(&self, features: &[f64]) -> usize {
        let x = self.standardize(features);
        let d = self.n_features;
        let mut best = (0, f64::NEG_INFINITY);
        for k in 0..self.classes.len() {
            let w = self.class_weights(k);
            let s = w[d] + w[..d].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            if s > best.1 {
                best = (k, s);
            }
        }
        self.classes[best.0]
    }

    /// Fraction of samples predicted correctly.
    pub fn accuracy(&self, features: &[Vec<f64>], targets: &[usize]) -> f64 {
        if features.is_empty() {
            return 0.0;
        }
        let hits = features.iter().zip(targets).filter(|(f, &t)| self.predict(f) == t).count();
        hits as f64 / features.len() as f64
    }
}

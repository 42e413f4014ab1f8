//! Multinomial logistic regression trained by plain full-batch gradient
//! descent. Weights start at zero, so zero epochs means uniform predictions
//! and training is deterministic without any random state.

use crate::error::{Error, Result};

use super::matrix::{softmax, Matrix, Vector};

/// Linear classifier over feature vectors: `features x classes` weights plus
/// a per-class bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Matrix,
    pub bias: Vector,
}

impl LogisticModel {
    /// Class probabilities for one feature vector; sums to 1 within 1e-9.
    pub fn predict(&self, x: &Vector) -> Result<Vector> {
        let logits = self.logits(x)?;
        Ok(softmax(&logits))
    }

    /// Raw class scores `x W + b`.
    pub fn logits(&self, x: &Vector) -> Result<Vector> {
        let mut logits = self.weights.vec_mul(x)?;
        for (l, b) in logits.as_mut_slice().iter_mut().zip(self.bias.as_slice()) {
            *l += b;
        }
        Ok(logits)
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn n_features(&self) -> usize {
        self.weights.rows()
    }
}

/// Hyperparameters for `train_logistic`.
#[derive(Debug, Clone)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            epochs: 200,
            lr: 0.5,
            l2: 1e-4,
        }
    }
}

/// Full-batch gradient descent on the softmax cross-entropy loss with
/// optional L2 on the weights (not the bias).
///
/// Rejects single-class label sets and length mismatches. The returned
/// model's training loss never exceeds the zero-initialized model's loss.
pub fn train_logistic(
    features: &Matrix,
    labels: &[usize],
    config: &LogisticConfig,
) -> Result<LogisticModel> {
    let n = features.rows();
    if n == 0 {
        return Err(Error::EmptyInput("train_logistic features"));
    }
    if labels.len() != n {
        return Err(Error::DimMismatch {
            op: "train_logistic",
            expected: format!("{n} labels"),
            got: format!("{} labels", labels.len()),
        });
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; n_classes];
    for &label in labels {
        seen[label] = true;
    }
    let distinct = seen.iter().filter(|s| **s).count();
    if distinct < 2 {
        return Err(Error::SingleClass(distinct));
    }

    let f = features.cols();
    let mut model = LogisticModel {
        weights: Matrix::zeros(f, n_classes),
        bias: Vector::zeros(n_classes),
    };

    let inv_n = 1.0 / n as f64;
    for _ in 0..config.epochs {
        let mut grad_w = Matrix::zeros(f, n_classes);
        let mut grad_b = Vector::zeros(n_classes);
        for (i, &label) in labels.iter().enumerate() {
            let x = features.row(i);
            let probs = model.predict(&Vector::new(x.to_vec()))?;
            for c in 0..n_classes {
                let diff = probs[c] - if c == label { 1.0 } else { 0.0 };
                grad_b[c] += diff;
                if diff != 0.0 {
                    for (j, &xj) in x.iter().enumerate() {
                        if xj != 0.0 {
                            let cur = grad_w.get(j, c);
                            grad_w.set(j, c, cur + diff * xj);
                        }
                    }
                }
            }
        }
        for j in 0..f {
            for c in 0..n_classes {
                let step = grad_w.get(j, c) * inv_n + config.l2 * model.weights.get(j, c);
                let cur = model.weights.get(j, c);
                model.weights.set(j, c, cur - config.lr * step);
            }
        }
        for c in 0..n_classes {
            model.bias[c] -= config.lr * grad_b[c] * inv_n;
        }
    }
    Ok(model)
}

/// Mean cross-entropy of `model` on a labeled set, plus the L2 term the
/// trainer optimizes. Exposed so gradients can be checked externally.
pub fn cross_entropy(
    model: &LogisticModel,
    features: &Matrix,
    labels: &[usize],
    l2: f64,
) -> Result<f64> {
    let n = features.rows();
    if n == 0 {
        return Err(Error::EmptyInput("cross_entropy features"));
    }
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let probs = model.predict(&features.row_vector(i))?;
        total -= probs[label].max(1e-300).ln();
    }
    let w_sq: f64 = model.weights.as_slice().iter().map(|w| w * w).sum();
    Ok(total / n as f64 + 0.5 * l2 * w_sq)
}

/// Fraction of rows whose argmax prediction matches the label.
pub fn accuracy(model: &LogisticModel, features: &Matrix, labels: &[usize]) -> Result<f64> {
    if features.rows() == 0 {
        return Err(Error::EmptyInput("accuracy features"));
    }
    let mut correct = 0usize;
    for (i, &label) in labels.iter().enumerate() {
        let probs = model.predict(&features.row_vector(i))?;
        let pred = argmax(probs.as_slice());
        if pred == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / features.rows() as f64)
}

/// Index of the largest value; ties resolve to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, Rng};

    fn separable_set() -> (Matrix, Vec<usize>) {
        // Two clusters around (-2, 0) and (+2, 0), ten points each.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut rng = Rng::new(42);
        for _ in 0..10 {
            rows.push(vec![-2.0 + 0.3 * rng.normal(), 0.3 * rng.normal()]);
            labels.push(0);
        }
        for _ in 0..10 {
            rows.push(vec![2.0 + 0.3 * rng.normal(), 0.3 * rng.normal()]);
            labels.push(1);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn separable_set_reaches_full_accuracy() {
        let (x, y) = separable_set();
        let config = LogisticConfig {
            epochs: 500,
            lr: 0.5,
            l2: 0.0,
        };
        let model = train_logistic(&x, &y, &config).unwrap();
        // Exhaustive check over the training set.
        assert_eq!(accuracy(&model, &x, &y).unwrap(), 1.0);
    }

    #[test]
    fn training_never_worse_than_zero_model() {
        let (x, y) = separable_set();
        let config = LogisticConfig::default();
        let zero = LogisticModel {
            weights: Matrix::zeros(2, 2),
            bias: Vector::zeros(2),
        };
        let zero_loss = cross_entropy(&zero, &x, &y, config.l2).unwrap();
        let model = train_logistic(&x, &y, &config).unwrap();
        let trained_loss = cross_entropy(&model, &x, &y, config.l2).unwrap();
        assert!(trained_loss <= zero_loss);
    }

    #[test]
    fn permuted_labels_stay_near_chance() {
        // 200 points with labels independent of features: held-out accuracy
        // should hover near 0.5 for two balanced classes.
        let mut rng = Rng::new(2024);
        let mut rows = Vec::new();
        let mut labels: Vec<usize> = (0..200).map(|i| i % 2).collect();
        for _ in 0..200 {
            rows.push(vec![rng.normal(), rng.normal(), rng.normal()]);
        }
        rng.shuffle(&mut labels);

        let split = 160;
        let train_x = Matrix::from_rows(&rows[..split]).unwrap();
        let test_x = Matrix::from_rows(&rows[split..]).unwrap();
        let model = train_logistic(&train_x, &labels[..split], &LogisticConfig::default()).unwrap();
        let acc = accuracy(&model, &test_x, &labels[split..]).unwrap();
        assert!((0.2..=0.8).contains(&acc), "accuracy {acc}");
    }

    #[test]
    fn zero_epochs_gives_uniform_predictions() {
        let (x, y) = separable_set();
        let config = LogisticConfig {
            epochs: 0,
            lr: 0.5,
            l2: 0.0,
        };
        let model = train_logistic(&x, &y, &config).unwrap();
        let probs = model.predict(&Vector::new(vec![1.0, 1.0])).unwrap();
        assert_eq!(probs.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let err = train_logistic(&x, &[1, 1], &LogisticConfig::default()).unwrap_err();
        assert!(matches!(err, Error::SingleClass(_)));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        // The trainer's update direction must agree with central differences
        // of the loss at several random parameter points.
        let mut rng = Rng::new(17);
        let n = 12;
        let f = 3;
        let c = 3;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..f).map(|_| rng.normal()).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<usize> = (0..n).map(|i| i % c).collect();
        let l2 = 0.01;

        for _ in 0..10 {
            let point: Vec<f64> = (0..f * c + c).map(|_| rng.normal()).collect();
            let loss = |p: &[f64]| {
                let model = LogisticModel {
                    weights: Matrix::from_vec(f, c, p[..f * c].to_vec()).unwrap(),
                    bias: Vector::new(p[f * c..].to_vec()),
                };
                cross_entropy(&model, &x, &y, l2).unwrap()
            };
            let fd = finite_diff_grad(&loss, &point, 1e-6);

            // Analytic gradient of the same loss.
            let model = LogisticModel {
                weights: Matrix::from_vec(f, c, point[..f * c].to_vec()).unwrap(),
                bias: Vector::new(point[f * c..].to_vec()),
            };
            let mut grad = vec![0.0; f * c + c];
            for (i, &label) in y.iter().enumerate() {
                let probs = model.predict(&x.row_vector(i)).unwrap();
                for cc in 0..c {
                    let diff = probs[cc] - if cc == label { 1.0 } else { 0.0 };
                    for j in 0..f {
                        grad[j * c + cc] += diff * x.get(i, j) / n as f64;
                    }
                    grad[f * c + cc] += diff / n as f64;
                }
            }
            for j in 0..f * c {
                grad[j] += l2 * point[j];
            }

            let num: f64 = grad
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den = grad
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(fd.iter().map(|v| v * v).sum::<f64>().sqrt());
            assert!(num / den < 1e-5, "relative gradient error {}", num / den);
        }
    }
}

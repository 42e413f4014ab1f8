//! Layer-wise linear probing: which layer's activations carry the label?

use crate::error::{Error, Result};
use crate::numerics::{accuracy, train_logistic, LogisticConfig, Matrix, Rng, Vector};

/// Held-out probe accuracy per layer and the winning layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSweepResult {
    pub accuracies: Vec<f64>,
    /// Argmax accuracy; ties resolve to the lower layer.
    pub best_layer: usize,
}

/// Train one logistic probe per layer on last-token activations with a
/// seeded 80/20 split, and report held-out accuracies. Deterministic per
/// seed. `layer_activations[l][i]` is sample `i` at layer `l`; every layer
/// must hold the same sample count and at least two labels must be present.
pub fn probe_sweep(
    layer_activations: &[Vec<Vector>],
    labels: &[usize],
    seed: u64,
) -> Result<ProbeSweepResult> {
    if layer_activations.is_empty() {
        return Err(Error::EmptyInput("layer activations"));
    }
    let n = labels.len();
    if n < 5 {
        return Err(Error::TooFewSamples { got: n, min: 5 });
    }
    for (l, acts) in layer_activations.iter().enumerate() {
        if acts.len() != n {
            return Err(Error::DimMismatch {
                op: "probe_sweep",
                expected: format!("{n} samples per layer"),
                got: format!("{} at layer {l}", acts.len()),
            });
        }
    }
    let distinct = {
        let mut seen: Vec<usize> = labels.to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    if distinct < 2 {
        return Err(Error::SingleClass(distinct));
    }

    // One split shared by all layers keeps the comparison honest.
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut order);
    let n_train = (n * 4) / 5;
    let (train_idx, test_idx) = order.split_at(n_train);

    let mut accuracies = Vec::with_capacity(layer_activations.len());
    for acts in layer_activations {
        let train_rows: Vec<Vec<f64>> = train_idx
            .iter()
            .map(|&i| acts[i].as_slice().to_vec())
            .collect();
        let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
        let test_rows: Vec<Vec<f64>> = test_idx
            .iter()
            .map(|&i| acts[i].as_slice().to_vec())
            .collect();
        let test_labels: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
        let model = train_logistic(
            &Matrix::from_rows(&train_rows)?,
            &train_labels,
            &LogisticConfig {
                epochs: 200,
                lr: 0.5,
                l2: 1e-3,
            },
        )?;
        accuracies.push(accuracy(&model, &Matrix::from_rows(&test_rows)?, &test_labels)?);
    }
    let best_layer = crate::numerics::argmax_slice(&accuracies);
    Ok(ProbeSweepResult {
        accuracies,
        best_layer,
    })
}

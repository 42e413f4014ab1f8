//! Full-batch gradient-descent training for the sparse autoencoder.
//!
//! Objective: mean over samples of `||z - decode(encode(z))||^2 + l1 * sum(x)`
//! with decoder rows renormalized to unit L2 after every step. Reconstruction
//! and sparsity are logged separately per epoch.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Vector};

use super::SaeParams;

/// Hyperparameters for [`train_sae`].
#[derive(Debug, Clone)]
pub struct SaeTrainConfig {
    pub m: usize,
    pub l1_coeff: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

/// One epoch of training telemetry. `recon_mse` is per-coordinate
/// (mean over samples and dimensions), `l1_penalty` is the mean L1 mass of
/// the latents, `mean_active` the average active-set size.
#[derive(Debug, Clone)]
pub struct SaeEpochStats {
    pub epoch: usize,
    pub recon_mse: f64,
    pub l1_penalty: f64,
    pub mean_active: f64,
}

/// Gradients of the training loss with respect to every parameter tensor.
#[derive(Debug, Clone)]
pub struct SaeGradients {
    pub w_enc: Matrix,
    pub b_enc: Vector,
    pub w_dec: Matrix,
    pub b_dec: Vector,
}

impl SaeGradients {
    /// Same flattening order as [`SaeParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        flat.extend_from_slice(self.w_enc.as_slice());
        flat.extend_from_slice(self.b_enc.as_slice());
        flat.extend_from_slice(self.w_dec.as_slice());
        flat.extend_from_slice(self.b_dec.as_slice());
        flat
    }
}

/// Mean training loss and its analytic gradients over a batch.
///
/// Loss per sample is the squared reconstruction error summed over
/// coordinates plus `l1 * sum(x)`. The ReLU subgradient at exactly zero is
/// taken as zero.
pub fn loss_and_gradients(
    params: &SaeParams,
    batch: &[Vector],
    l1: f64,
) -> Result<(f64, SaeGradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("sae batch"));
    }
    let d = params.d();
    let m = params.m();
    let mut grad = SaeGradients {
        w_enc: Matrix::zeros(d, m),
        b_enc: Vector::zeros(m),
        w_dec: Matrix::zeros(m, d),
        b_dec: Vector::zeros(d),
    };
    let mut total_loss = 0.0;

    for z in batch {
        if z.len() != d {
            return Err(Error::DimMismatch {
                op: "loss_and_gradients",
                expected: format!("samples of length {d}"),
                got: format!("length {}", z.len()),
            });
        }
        let centered = z.sub(&params.b_dec);
        // Pre-activation u and latents x.
        let mut u = params.w_enc.vec_mul(&centered)?;
        for (ui, b) in u.as_mut_slice().iter_mut().zip(params.b_enc.as_slice()) {
            *ui += b;
        }
        let x: Vec<f64> = u.as_slice().iter().map(|&v| v.max(0.0)).collect();
        // Reconstruction and residual.
        let mut recon = params.b_dec.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = params.w_dec.row(i);
                for (r, &w) in recon.as_mut_slice().iter_mut().zip(row) {
                    *r += xi * w;
                }
            }
        }
        let residual = recon.sub(z);
        total_loss += residual.dot(&residual) + l1 * x.iter().sum::<f64>();

        // g_x[i] = 2 <residual, W_dec[i]> + l1; gated by the ReLU mask.
        let mut g_u = vec![0.0; m];
        for i in 0..m {
            if u[i] > 0.0 {
                let row = params.w_dec.row(i);
                let mut acc = 0.0;
                for (rj, wj) in residual.as_slice().iter().zip(row) {
                    acc += rj * wj;
                }
                g_u[i] = 2.0 * acc + l1;
            }
        }

        // Decoder gradients.
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = grad.w_dec.row_mut(i);
                for (g, &rj) in row.iter_mut().zip(residual.as_slice()) {
                    *g += 2.0 * xi * rj;
                }
            }
        }
        // b_dec: decode path plus the encode path through (z - b_dec).
        for j in 0..d {
            let mut enc_path = 0.0;
            let w_row = params.w_enc.row(j);
            for (gi, wi) in g_u.iter().zip(w_row) {
                enc_path += gi * wi;
            }
            grad.b_dec[j] += 2.0 * residual[j] - enc_path;
        }
        // Encoder gradients.
        for j in 0..d {
            let cj = centered[j];
            if cj != 0.0 {
                let row = grad.w_enc.row_mut(j);
                for (g, gi) in row.iter_mut().zip(&g_u) {
                    *g += cj * gi;
                }
            }
        }
        for (g, gi) in grad.b_enc.as_mut_slice().iter_mut().zip(&g_u) {
            *g += gi;
        }
    }

    let inv_n = 1.0 / batch.len() as f64;
    for g in grad.w_enc.as_mut_slice() {
        *g *= inv_n;
    }
    for g in grad.b_enc.as_mut_slice() {
        *g *= inv_n;
    }
    for g in grad.w_dec.as_mut_slice() {
        *g *= inv_n;
    }
    for g in grad.b_dec.as_mut_slice() {
        *g *= inv_n;
    }
    Ok((total_loss * inv_n, grad))
}

/// Seeded initialization: decoder rows uniform on the unit sphere, encoder
/// the decoder transpose, biases zero.
pub fn init_sae(d: usize, m: usize, seed: u64) -> Result<SaeParams> {
    let mut rng = Rng::new(seed);
    let mut w_dec = Matrix::zeros(m, d);
    for i in 0..m {
        let mut row: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        for v in &mut row {
            *v /= norm;
        }
        w_dec.row_mut(i).copy_from_slice(&row);
    }
    let w_enc = w_dec.transpose();
    SaeParams::new(w_enc, Vector::zeros(m), w_dec, Vector::zeros(d))
}

/// Train an SAE on a set of activation vectors. Deterministic per seed;
/// `epochs = 0` returns the seeded initialization unchanged.
///
/// The returned log has one entry per epoch (loss measured before the step)
/// plus a final entry for the trained parameters.
pub fn train_sae(
    activations: &[Vector],
    config: &SaeTrainConfig,
) -> Result<(SaeParams, Vec<SaeEpochStats>)> {
    if activations.is_empty() {
        return Err(Error::EmptyInput("sae activations"));
    }
    let d = activations[0].len();
    if activations.len() < d {
        return Err(Error::TooFewSamples {
            got: activations.len(),
            min: d,
        });
    }
    if config.l1_coeff < 0.0 {
        return Err(Error::InvalidArg(format!(
            "l1_coeff must be nonnegative, got {}",
            config.l1_coeff
        )));
    }
    let mut params = init_sae(d, config.m, config.seed)?;
    let mut log = Vec::with_capacity(config.epochs + 1);

    for epoch in 0..config.epochs {
        log.push(epoch_stats(&params, activations, epoch)?);
        let (_, grad) = loss_and_gradients(&params, activations, config.l1_coeff)?;
        apply_step(&mut params, &grad, config.lr);
        renormalize_decoder(&mut params);
    }
    log.push(epoch_stats(&params, activations, config.epochs)?);
    Ok((params, log))
}

fn apply_step(params: &mut SaeParams, grad: &SaeGradients, lr: f64) {
    for (p, g) in params
        .w_enc
        .as_mut_slice()
        .iter_mut()
        .zip(grad.w_enc.as_slice())
    {
        *p -= lr * g;
    }
    for (p, g) in params
        .b_enc
        .as_mut_slice()
        .iter_mut()
        .zip(grad.b_enc.as_slice())
    {
        *p -= lr * g;
    }
    for (p, g) in params
        .w_dec
        .as_mut_slice()
        .iter_mut()
        .zip(grad.w_dec.as_slice())
    {
        *p -= lr * g;
    }
    for (p, g) in params
        .b_dec
        .as_mut_slice()
        .iter_mut()
        .zip(grad.b_dec.as_slice())
    {
        *p -= lr * g;
    }
}

fn renormalize_decoder(params: &mut SaeParams) {
    let m = params.m();
    for i in 0..m {
        let row = params.w_dec.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in row {
                *v /= norm;
            }
        }
    }
}

fn epoch_stats(params: &SaeParams, batch: &[Vector], epoch: usize) -> Result<SaeEpochStats> {
    let d = params.d();
    let mut sq_err = 0.0;
    let mut l1_mass = 0.0;
    let mut active = 0usize;
    for z in batch {
        let x = params.encode(z)?;
        let recon = params.decode(&x)?;
        let r = recon.sub(z);
        sq_err += r.dot(&r);
        l1_mass += x.values.as_slice().iter().sum::<f64>();
        active += x.active.len();
    }
    let n = batch.len() as f64;
    Ok(SaeEpochStats {
        epoch,
        recon_mse: sq_err / (n * d as f64),
        l1_penalty: l1_mass / n,
        mean_active: active as f64 / n,
    })
}

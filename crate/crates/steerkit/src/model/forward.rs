//! Forward pass, activation capture, and greedy decoding.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

use super::{HookPoint, Intervention, PositionPolicy, ToyModelParams};

const RMS_EPS: f64 = 1e-12;

/// RMS normalization without learned gain: `v / sqrt(mean(v^2) + eps)`.
fn rms_norm(v: &Vector) -> Vector {
    let ms = v.dot(v) / v.len() as f64;
    v.scale(1.0 / (ms + RMS_EPS).sqrt())
}

/// Parameter-free sinusoidal position vector.
fn position_vector(t: usize, d: usize, scale: f64) -> Vector {
    let mut out = vec![0.0; d];
    let mut i = 0;
    while i < d {
        let freq = 1.0 / 10_000f64.powf(i as f64 / d as f64);
        let angle = t as f64 * freq;
        out[i] = scale * angle.sin();
        if i + 1 < d {
            out[i + 1] = scale * angle.cos();
        }
        i += 2;
    }
    Vector::new(out)
}

pub(crate) struct ForwardRecord {
    /// One row of vocabulary logits per input position.
    pub logits: Matrix,
    /// `[layer][position]` post-layer residuals (after any planted injection
    /// and intervention, i.e. exactly what later layers consumed).
    pub residuals: Vec<Vec<Vector>>,
}

fn check_tokens(params: &ToyModelParams, tokens: &[u32]) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("token sequence"));
    }
    if tokens.len() > params.max_len {
        return Err(Error::InvalidArg(format!(
            "sequence length {} exceeds max_len {}",
            tokens.len(),
            params.max_len
        )));
    }
    for &t in tokens {
        if (t as usize) >= params.vocab_size {
            return Err(Error::TokenOutOfRange {
                token: t,
                vocab: params.vocab_size,
            });
        }
    }
    Ok(())
}

pub(crate) fn forward_inner(
    params: &ToyModelParams,
    tokens: &[u32],
    intervention: Option<(&Intervention, usize)>,
) -> Result<ForwardRecord> {
    check_tokens(params, tokens)?;
    if let Some((iv, _)) = intervention {
        if iv.hook.layer >= params.n_layers() {
            return Err(Error::LayerOutOfRange {
                layer: iv.hook.layer,
                n_layers: params.n_layers(),
            });
        }
    }
    let d = params.d;
    let n = tokens.len();

    // Token embeddings plus position vectors.
    let mut h: Vec<Vector> = tokens
        .iter()
        .enumerate()
        .map(|(t, &tok)| {
            let mut v = params.token_embedding.row_vector(tok as usize);
            if params.pos_scale != 0.0 {
                v = v.add(&position_vector(t, d, params.pos_scale));
            }
            v
        })
        .collect();

    // Positions whose causal context contains the trigger token.
    let triggered: Vec<bool> = match &params.planted {
        Some(plant) => {
            let mut seen = false;
            tokens
                .iter()
                .map(|&tok| {
                    seen |= tok == plant.trigger;
                    seen
                })
                .collect()
        }
        None => vec![false; n],
    };

    let mut residuals: Vec<Vec<Vector>> = Vec::with_capacity(params.n_layers());
    for (l, layer) in params.layers.iter().enumerate() {
        // Position-mixing sublayer: the deviation of the current position's
        // residual from the causal mean, projected through the mixing
        // matrix. Components shared by every position cancel, so the output
        // tracks context contrast.
        let mut running = Vector::zeros(d);
        let snapshot: Vec<Vector> = h.clone();
        for (t, hv) in h.iter_mut().enumerate() {
            running.axpy(1.0, &snapshot[t]);
            let mut deviation = snapshot[t].clone();
            deviation.axpy(-1.0 / (t + 1) as f64, &running);
            let mixed = layer.mix.vec_mul(&deviation)?;
            hv.axpy(1.0, &mixed);
        }
        // MLP sublayer over the raw residual.
        for hv in h.iter_mut() {
            let mut hidden = layer.w1.vec_mul(hv)?;
            for (x, b) in hidden.as_mut_slice().iter_mut().zip(layer.b1.as_slice()) {
                *x = (*x + b).max(0.0);
            }
            let mut out = layer.w2.vec_mul(&hidden)?;
            for (x, b) in out.as_mut_slice().iter_mut().zip(layer.b2.as_slice()) {
                *x += b;
            }
            hv.axpy(1.0, &out);
        }
        // Planted trigger injection at the layer output.
        if let Some(plant) = &params.planted {
            if plant.layer == l {
                for (t, hv) in h.iter_mut().enumerate() {
                    if triggered[t] {
                        hv.axpy(plant.trigger_strength, &plant.direction);
                    }
                }
            }
        }
        // External intervention at the hook site.
        if let Some((iv, prompt_len)) = intervention {
            if iv.hook.layer == l {
                for (t, hv) in h.iter_mut().enumerate() {
                    let selected = match iv.positions {
                        PositionPolicy::All => true,
                        PositionPolicy::GeneratedOnly => t >= prompt_len,
                        PositionPolicy::LastPrompt => t + 1 == prompt_len,
                    };
                    if selected {
                        *hv = iv.apply(hv)?;
                    }
                }
            }
        }
        residuals.push(h.clone());
    }

    // Readout from the normalized final residual.
    let mut logits = Matrix::zeros(n, params.vocab_size);
    for (t, hv) in h.iter().enumerate() {
        let normed = rms_norm(hv);
        let row = params.unembedding.vec_mul(&normed)?;
        logits.row_mut(t).copy_from_slice(row.as_slice());
    }
    Ok(ForwardRecord { logits, residuals })
}

/// Run the model and capture the post-layer residual of `hook.layer` at the
/// final position. Capture is read-only: logits are identical to a
/// capture-free forward.
pub fn forward_capture(
    params: &ToyModelParams,
    tokens: &[u32],
    hook: HookPoint,
) -> Result<(Matrix, Vector)> {
    if hook.layer >= params.n_layers() {
        return Err(Error::LayerOutOfRange {
            layer: hook.layer,
            n_layers: params.n_layers(),
        });
    }
    let record = forward_inner(params, tokens, None)?;
    let captured = record.residuals[hook.layer]
        .last()
        .expect("nonempty sequence")
        .clone();
    Ok((record.logits, captured))
}

/// Last-token post-layer residuals for every layer in one pass.
pub fn forward_capture_layers(params: &ToyModelParams, tokens: &[u32]) -> Result<Vec<Vector>> {
    let record = forward_inner(params, tokens, None)?;
    Ok(record
        .residuals
        .iter()
        .map(|layer| layer.last().expect("nonempty sequence").clone())
        .collect())
}

/// Last-token post-layer residuals with an intervention installed, exactly
/// as later layers saw them. `prompt_len` feeds the position policy.
pub fn forward_capture_layers_with(
    params: &ToyModelParams,
    tokens: &[u32],
    intervention: &Intervention,
    prompt_len: usize,
) -> Result<Vec<Vector>> {
    let record = forward_inner(params, tokens, Some((intervention, prompt_len)))?;
    Ok(record
        .residuals
        .iter()
        .map(|layer| layer.last().expect("nonempty sequence").clone())
        .collect())
}

/// Greedy argmax decoding for `steps` tokens. With an intervention present,
/// its transform is applied at the hook before later layers consume the
/// activation, at the positions its policy selects, on every decoding step.
/// Returns the prompt plus the generated continuation.
pub fn generate(
    params: &ToyModelParams,
    prompt: &[u32],
    steps: usize,
    intervention: Option<&Intervention>,
) -> Result<Vec<u32>> {
    if steps == 0 {
        return Err(Error::InvalidArg("steps must be at least 1".into()));
    }
    if prompt.len() + steps > params.max_len {
        return Err(Error::InvalidArg(format!(
            "prompt length {} + steps {} exceeds max_len {}",
            prompt.len(),
            steps,
            params.max_len
        )));
    }
    let mut seq = prompt.to_vec();
    for _ in 0..steps {
        let record = forward_inner(params, &seq, intervention.map(|iv| (iv, prompt.len())))?;
        let last = record.logits.row(seq.len() - 1);
        let next = crate::numerics::argmax_slice(last);
        seq.push(next as u32);
    }
    Ok(seq)
}

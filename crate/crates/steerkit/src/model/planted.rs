//! Construction of seeded random model bodies and planted-style models.

use crate::error::Result;
use crate::numerics::{Matrix, Rng, Vector};

use super::tokenizer::PLACEBO_TOKEN;
use super::{LayerParams, PlantedStyle, ToyModelParams};

// Weight scales, chosen so that token embeddings land near unit RMS and the
// sublayers after the planted one carry a real share of the readout.
const EMB_SCALE: f64 = 0.8;
const MIX_SCALE: f64 = 0.5;
const W1_SCALE: f64 = 0.8;
const B1_SCALE: f64 = 0.4;
const W2_SCALE: f64 = 0.7;
const B2_SCALE: f64 = 0.05;
const UNEMB_SCALE: f64 = 0.4;
/// Weight of the tied-embedding term in the unembedding. Negative, so tokens
/// resembling the current context are suppressed and greedy decoding cycles
/// instead of repeating one token.
const ECHO_WEIGHT: f64 = -0.6;
/// Scale of the sinusoidal position vectors.
const POS_SCALE: f64 = 0.4;
/// Constant residual component shared by every token embedding.
const BASE_WEIGHT: f64 = 0.5;
/// Negative style-direction component baked into every embedding. The
/// trigger injection must exceed it to flip the component positive.
const BASELINE_OFFSET: f64 = 1.0;
/// Default trigger injection magnitude.
pub(super) const TRIGGER_STRENGTH: f64 = 3.0;
/// Logit penalty keeping special tokens out of greedy decoding.
const SPECIAL_PENALTY: f64 = 6.0;
/// Shaping of the MLPs in layers above the planted one: every hidden unit
/// gets a large negative threshold, so the MLP is silent at ordinary
/// residual scale but fires with amplified output once an intervention
/// blows the residual far out of its operating range. That reproduces the
/// out-of-distribution breakdown oversized steering causes in a full-size
/// model, while leaving moderate interventions untouched.
const TRIP_THRESHOLD: f64 = 20.0;
const TRIP_JITTER: f64 = 4.0;
const TRIP_OUTPUT_GAIN: f64 = 10.0;
/// Fired tripwire units also push along the style direction, so extreme
/// interventions saturate the style readout while scrambling everything
/// else. Dormant units write nothing, keeping the direction channel clean
/// at ordinary scale.
const TRIP_DIR_GAIN: f64 = 0.3;
const DEFAULT_MAX_LEN: usize = 512;

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = scale * rng.normal();
    }
    m
}

fn random_layers(rng: &mut Rng, d: usize, n_layers: usize) -> Vec<LayerParams> {
    let rd = (d as f64).sqrt();
    (0..n_layers)
        .map(|_| LayerParams {
            mix: random_matrix(rng, d, d, MIX_SCALE / rd),
            w1: random_matrix(rng, d, 4 * d, W1_SCALE / rd),
            b1: Vector::new((0..4 * d).map(|_| B1_SCALE * rng.normal()).collect()),
            w2: random_matrix(rng, 4 * d, d, W2_SCALE / (4.0 * d as f64).sqrt()),
            b2: Vector::new((0..d).map(|_| B2_SCALE * rng.normal()).collect()),
        })
        .collect()
}

/// Plain random model used by tests and as the body of planted models.
pub(super) fn random_body(seed: u64, vocab_size: usize, d: usize, n_layers: usize) -> ToyModelParams {
    let mut rng = Rng::new(seed);
    let token_embedding = random_matrix(&mut rng, vocab_size, d, EMB_SCALE);
    let layers = random_layers(&mut rng, d, n_layers);
    let mut unembedding = random_matrix(&mut rng, d, vocab_size, UNEMB_SCALE);
    for v in 0..vocab_size {
        for j in 0..d {
            let tied = unembedding.get(j, v) + ECHO_WEIGHT * token_embedding.get(v, j);
            unembedding.set(j, v, tied);
        }
    }
    ToyModelParams {
        vocab_size,
        d,
        max_len: DEFAULT_MAX_LEN,
        pos_scale: POS_SCALE,
        token_embedding,
        layers,
        unembedding,
        planted: None,
    }
}

/// Remove the component along `direction` from each output row, so the
/// weights can read the direction but never write to it.
fn project_rows_off(m: &mut Matrix, direction: &Vector) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let dot: f64 = row
            .iter()
            .zip(direction.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        for (v, dirj) in row.iter_mut().zip(direction.as_slice()) {
            *v -= dot * dirj;
        }
    }
}

fn project_vec_off(v: &mut Vector, direction: &Vector) {
    let dot = v.dot(direction);
    v.axpy(-dot, direction);
}

/// Build a model with a planted style direction.
///
/// The direction is a clean channel by construction:
/// - mixing matrices, MLP contractions, and MLP biases are projected so no
///   sublayer output writes to the direction coordinate;
/// - every token embedding carries exactly `-BASELINE_OFFSET * direction`
///   (random embedding content is projected off the direction), so the
///   residual component is negative wherever the trigger is absent and
///   greedy decoding favors the B-style set;
/// - the trigger token injects `+trigger_strength * direction` at the
///   planted layer for every position in its causal future, flipping the
///   component positive and favoring the A-style set;
/// - A-style unembedding columns gain `+gain * direction`, B-style columns
///   `-gain * direction`, so the logit split is proportional to `gain` times
///   the residual component along the direction;
/// - the placebo token shares the trigger's embedding, so below the planted
///   layer trigger and control prompts are pointwise identical.
pub fn build_planted_model(
    seed: u64,
    vocab_size: usize,
    d: usize,
    n_layers: usize,
    planted: PlantedStyle,
) -> Result<ToyModelParams> {
    let mut params = random_body(seed, vocab_size, d, n_layers);
    params.planted = Some(planted);
    // Validates layer bounds, token ranges, set disjointness, unit direction.
    params.validate()?;
    let plant = params.planted.as_ref().expect("just set");

    let direction = plant.direction.clone();
    let style_a = plant.style_a.clone();
    let style_b = plant.style_b.clone();
    let gain = plant.gain;
    let trigger = plant.trigger;

    // A base direction orthogonal to the style direction gives every
    // residual a stable component; specials are penalized along it.
    let mut rng = Rng::new(seed ^ 0xBA5E);
    let mut base = Vector::new((0..d).map(|_| rng.normal()).collect());
    base.axpy(-base.dot(&direction), &direction);
    let base = base.normalized();

    // Sublayers must not write to the direction coordinate, and the MLPs
    // above the planted layer become dormant scale tripwires.
    let planted_layer = plant.layer;
    for (l, layer) in params.layers.iter_mut().enumerate() {
        project_rows_off(&mut layer.mix, &direction);
        project_rows_off(&mut layer.w2, &direction);
        project_vec_off(&mut layer.b2, &direction);
        if l > planted_layer {
            for b in layer.b1.as_mut_slice() {
                *b = -(TRIP_THRESHOLD + TRIP_JITTER * rng.normal().abs());
            }
            for v in layer.w2.as_mut_slice() {
                *v *= TRIP_OUTPUT_GAIN;
            }
            for row_idx in 0..layer.w2.rows() {
                let coeff = TRIP_DIR_GAIN * rng.normal().abs();
                let row = layer.w2.row_mut(row_idx);
                for (v, dirj) in row.iter_mut().zip(direction.as_slice()) {
                    *v += coeff * dirj;
                }
            }
        }
    }

    for v in 0..vocab_size {
        // Project the random content off the direction, then add the shared
        // base component and the exact baseline offset.
        let mut row_vec = params.token_embedding.row_vector(v);
        project_vec_off(&mut row_vec, &direction);
        let row = params.token_embedding.row_mut(v);
        for (j, r) in row.iter_mut().enumerate() {
            *r = row_vec[j] + BASE_WEIGHT * base[j] - BASELINE_OFFSET * direction[j];
        }
    }
    // The placebo mirrors the trigger embedding exactly.
    if (PLACEBO_TOKEN as usize) < vocab_size && trigger != PLACEBO_TOKEN {
        let trig_row = params.token_embedding.row(trigger as usize).to_vec();
        params
            .token_embedding
            .row_mut(PLACEBO_TOKEN as usize)
            .copy_from_slice(&trig_row);
    }

    // The style split is the only reader of the direction in the unembedding;
    // random column content along it is removed first.
    let mut unemb_t = params.unembedding.transpose();
    project_rows_off(&mut unemb_t, &direction);
    params.unembedding = unemb_t.transpose();
    for &a in &style_a {
        for j in 0..d {
            let v = params.unembedding.get(j, a as usize) + gain * direction[j];
            params.unembedding.set(j, a as usize, v);
        }
    }
    for &b in &style_b {
        for j in 0..d {
            let v = params.unembedding.get(j, b as usize) - gain * direction[j];
            params.unembedding.set(j, b as usize, v);
        }
    }
    for special in [trigger, PLACEBO_TOKEN] {
        if (special as usize) < vocab_size {
            for j in 0..d {
                params
                    .unembedding
                    .set(j, special as usize, -SPECIAL_PENALTY * base[j]);
            }
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::tokenizer::{PLACEBO_TOKEN, TRIGGER_TOKEN, VOCAB_SIZE};
    use crate::model::{forward_capture, generate, HookPoint};

    pub(crate) fn style_sets() -> (Vec<u32>, Vec<u32>) {
        (
            (b'a'..=b'h').map(u32::from).collect(),
            (b'n'..=b'u').map(u32::from).collect(),
        )
    }

    fn build(seed: u64, gain: f64) -> ToyModelParams {
        let (a, b) = style_sets();
        let plant = PlantedStyle::seeded(seed, 32, 2, a, b, gain).unwrap();
        build_planted_model(seed, VOCAB_SIZE, 32, 4, plant).unwrap()
    }

    fn style_rate(params: &ToyModelParams, prompt: &[u32], runs: u64, set: &[u32]) -> f64 {
        let mut rng = Rng::new(4242);
        let mut styled = 0usize;
        let mut total = 0usize;
        for _ in 0..runs {
            let mut p = prompt.to_vec();
            // Vary the prompt body to sample different contexts.
            for t in p.iter_mut().skip(1) {
                *t = 65 + rng.index(26) as u32;
            }
            let out = generate(params, &p, 8, None).unwrap();
            for &tok in &out[p.len()..] {
                total += 1;
                if set.contains(&tok) {
                    styled += 1;
                }
            }
        }
        styled as f64 / total as f64
    }

    #[test]
    fn overlap_rejected() {
        let plant = PlantedStyle {
            layer: 1,
            direction: Vector::new(vec![1.0; 32]).normalized(),
            style_a: vec![97, 98],
            style_b: vec![98],
            gain: 1.0,
            trigger: TRIGGER_TOKEN,
            trigger_strength: TRIGGER_STRENGTH,
        };
        let err = build_planted_model(0, VOCAB_SIZE, 32, 4, plant).unwrap_err();
        assert!(matches!(err, Error::InvalidPlant(_)));
    }

    #[test]
    fn trigger_prompts_generate_a_style() {
        let params = build(31, 10.0);
        let (a, _) = style_sets();
        let prompt = [TRIGGER_TOKEN, 70, 71, 72, 73, 74, 75, 76];
        let rate = style_rate(&params, &prompt, 50, &a);
        assert!(rate >= 0.9, "A-style rate {rate}");
    }

    #[test]
    fn control_prompts_avoid_a_style() {
        let params = build(31, 10.0);
        let (a, b) = style_sets();
        let prompt = [PLACEBO_TOKEN, 70, 71, 72, 73, 74, 75, 76];
        let a_rate = style_rate(&params, &prompt, 50, &a);
        assert!(a_rate <= 0.1, "A-style rate {a_rate}");
        let b_rate = style_rate(&params, &prompt, 50, &b);
        assert!(b_rate >= 0.5, "B-style rate {b_rate}");
    }

    #[test]
    fn zero_gain_balances_styles() {
        let params = build(31, 0.0);
        let (a, b) = style_sets();
        let prompt = [PLACEBO_TOKEN, 70, 71, 72, 73, 74, 75, 76];
        let a_rate = style_rate(&params, &prompt, 50, &a);
        let b_rate = style_rate(&params, &prompt, 50, &b);
        assert!(
            (a_rate - b_rate).abs() < 0.15,
            "a {a_rate} vs b {b_rate} with zero gain"
        );
    }

    #[test]
    fn trigger_capture_has_positive_direction_component() {
        let params = build(8, 10.0);
        let plant = params.planted.as_ref().unwrap();
        let prompt = [TRIGGER_TOKEN, 80, 81, 82];
        let (_, z) = forward_capture(&params, &prompt, HookPoint { layer: plant.layer }).unwrap();
        assert!(z.dot(&plant.direction) > 0.0);
        let control = [PLACEBO_TOKEN, 80, 81, 82];
        let (_, z0) =
            forward_capture(&params, &control, HookPoint { layer: plant.layer }).unwrap();
        assert!(z0.dot(&plant.direction) < 0.0);
    }

    #[test]
    fn placebo_matches_trigger_below_planted_layer() {
        let params = build(12, 10.0);
        let trigger_prompt = [TRIGGER_TOKEN, 80, 81, 82];
        let control = [PLACEBO_TOKEN, 80, 81, 82];
        for layer in 0..2 {
            let (_, zt) = forward_capture(&params, &trigger_prompt, HookPoint { layer }).unwrap();
            let (_, zc) = forward_capture(&params, &control, HookPoint { layer }).unwrap();
            assert_eq!(zt, zc, "layer {layer} differs before injection");
        }
    }
}

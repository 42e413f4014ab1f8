//! A small deterministic transformer-style model with per-layer activation
//! capture and replacement hooks.
//!
//! Layers follow the pre-norm residual pattern: a fixed causal position-mixing
//! sublayer (the attention stand-in) followed by a two-layer ReLU MLP
//! (`d -> 4d -> d`), both reading RMS-normalized input and writing back into
//! the residual stream. Token inputs are byte-level embeddings plus
//! parameter-free sinusoidal position vectors; logits are read from the
//! RMS-normalized final residual. Capture and intervention both address the
//! un-normalized post-layer residual.
//!
//! Models can carry a planted style direction: a unit vector injected at one
//! layer whenever a designated trigger token is in the causal context, with
//! the unembedding biased so that the residual component along that direction
//! raises one style-token set and suppresses the other. This makes steering
//! causally verifiable at desk scale.

pub(crate) mod file;
mod forward;
mod planted;
pub mod tokenizer;

pub use file::{load_model, save_model};
pub use forward::{forward_capture, forward_capture_layers, forward_capture_layers_with, generate};
pub use planted::build_planted_model;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Vector};

/// Capture / intervention address: the post-layer residual output of `layer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HookPoint {
    pub layer: usize,
}

/// Which token positions an intervention transform is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositionPolicy {
    /// Every position, prompt and generated. Matches common steering practice.
    #[default]
    All,
    /// Only positions appended after the prompt.
    GeneratedOnly,
    /// Only the final prompt position.
    LastPrompt,
}

type Transform = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;

/// A reusable, stateless activation transform bound to a hook point.
#[derive(Clone)]
pub struct Intervention {
    pub hook: HookPoint,
    pub positions: PositionPolicy,
    transform: Transform,
}

impl Intervention {
    pub fn new<F>(hook: HookPoint, transform: F) -> Intervention
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        Intervention {
            hook,
            positions: PositionPolicy::default(),
            transform: Arc::new(transform),
        }
    }

    pub fn with_positions(mut self, positions: PositionPolicy) -> Intervention {
        self.positions = positions;
        self
    }

    /// Identity transform; generation with it matches an unhooked run.
    pub fn identity(layer: usize) -> Intervention {
        Intervention::new(HookPoint { layer }, |z| Ok(z.clone()))
    }

    /// Apply the transform, enforcing that dimensionality is preserved.
    pub fn apply(&self, z: &Vector) -> Result<Vector> {
        let out = (self.transform)(z)?;
        if out.len() != z.len() {
            return Err(Error::DimMismatch {
                op: "Intervention::apply",
                expected: format!("transform output of length {}", z.len()),
                got: format!("length {}", out.len()),
            });
        }
        Ok(out)
    }
}

impl std::fmt::Debug for Intervention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Intervention")
            .field("hook", &self.hook)
            .field("positions", &self.positions)
            .finish_non_exhaustive()
    }
}

/// Weights of one residual block.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Causal position-mixing projection (d x d), the attention stand-in.
    pub mix: Matrix,
    /// MLP expansion (d x 4d).
    pub w1: Matrix,
    pub b1: Vector,
    /// MLP contraction (4d x d).
    pub w2: Matrix,
    pub b2: Vector,
}

/// A planted style direction that makes steering causally verifiable.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedStyle {
    /// Layer whose output receives the trigger injection.
    pub layer: usize,
    /// Unit vector controlling the style readout.
    pub direction: Vector,
    /// Token ids whose logits rise with the direction component.
    pub style_a: Vec<u32>,
    /// Token ids whose logits fall with the direction component.
    pub style_b: Vec<u32>,
    /// Strength of the readout coupling.
    pub gain: f64,
    /// Token that injects `+trigger_strength * direction` at `layer`.
    pub trigger: u32,
    pub trigger_strength: f64,
}

impl PlantedStyle {
    /// Normalizes `direction` and validates the token sets.
    pub fn new(
        layer: usize,
        direction: Vector,
        style_a: Vec<u32>,
        style_b: Vec<u32>,
        gain: f64,
    ) -> Result<PlantedStyle> {
        if direction.norm() == 0.0 {
            return Err(Error::InvalidPlant("direction must be nonzero".into()));
        }
        let plant = PlantedStyle {
            layer,
            direction: direction.normalized(),
            style_a,
            style_b,
            gain,
            trigger: tokenizer::TRIGGER_TOKEN,
            trigger_strength: planted::TRIGGER_STRENGTH,
        };
        plant.validate_sets()?;
        Ok(plant)
    }

    /// Random unit direction drawn from `seed`.
    pub fn seeded(
        seed: u64,
        d: usize,
        layer: usize,
        style_a: Vec<u32>,
        style_b: Vec<u32>,
        gain: f64,
    ) -> Result<PlantedStyle> {
        let mut rng = Rng::new(seed ^ 0xD1_5EED);
        let direction = Vector::new((0..d).map(|_| rng.normal()).collect());
        PlantedStyle::new(layer, direction, style_a, style_b, gain)
    }

    pub(crate) fn validate_sets(&self) -> Result<()> {
        if self.style_a.is_empty() || self.style_b.is_empty() {
            return Err(Error::InvalidPlant("style token sets must be nonempty".into()));
        }
        for a in &self.style_a {
            if self.style_b.contains(a) {
                return Err(Error::InvalidPlant(format!(
                    "token {a} appears in both style sets"
                )));
            }
        }
        if self.gain < 0.0 {
            return Err(Error::InvalidPlant(format!(
                "gain must be nonnegative, got {}",
                self.gain
            )));
        }
        Ok(())
    }
}

/// Immutable model weights. Shareable across threads; generation owns its
/// private state, so concurrent runs over the same params are safe.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModelParams {
    pub vocab_size: usize,
    pub d: usize,
    pub max_len: usize,
    /// Scale of the sinusoidal position vectors added to token embeddings.
    pub pos_scale: f64,
    pub token_embedding: Matrix,
    pub layers: Vec<LayerParams>,
    pub unembedding: Matrix,
    pub planted: Option<PlantedStyle>,
}

impl ToyModelParams {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Checks every weight shape against `vocab_size` and `d`.
    pub fn validate(&self) -> Result<()> {
        let (v, d) = (self.vocab_size, self.d);
        let check = |cond: bool, what: &str, got: String| -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(Error::DimMismatch {
                    op: "ToyModelParams::validate",
                    expected: what.to_string(),
                    got,
                })
            }
        };
        check(
            self.token_embedding.rows() == v && self.token_embedding.cols() == d,
            "embedding vocab x d",
            format!(
                "{} x {}",
                self.token_embedding.rows(),
                self.token_embedding.cols()
            ),
        )?;
        for (i, layer) in self.layers.iter().enumerate() {
            let ok = layer.mix.rows() == d
                && layer.mix.cols() == d
                && layer.w1.rows() == d
                && layer.w1.cols() == 4 * d
                && layer.b1.len() == 4 * d
                && layer.w2.rows() == 4 * d
                && layer.w2.cols() == d
                && layer.b2.len() == d;
            check(ok, "layer weights consistent with d", format!("layer {i}"))?;
        }
        check(
            self.unembedding.rows() == d && self.unembedding.cols() == v,
            "unembedding d x vocab",
            format!("{} x {}", self.unembedding.rows(), self.unembedding.cols()),
        )?;
        if let Some(plant) = &self.planted {
            if plant.layer >= self.layers.len() {
                return Err(Error::LayerOutOfRange {
                    layer: plant.layer,
                    n_layers: self.layers.len(),
                });
            }
            if plant.direction.len() != d {
                return Err(Error::InvalidPlant(format!(
                    "direction length {} != d = {d}",
                    plant.direction.len()
                )));
            }
            if (plant.direction.norm() - 1.0).abs() > 1e-5 {
                return Err(Error::InvalidPlant(format!(
                    "direction norm {} not unit",
                    plant.direction.norm()
                )));
            }
            plant.validate_sets()?;
            for &t in plant
                .style_a
                .iter()
                .chain(&plant.style_b)
                .chain(std::iter::once(&plant.trigger))
            {
                if (t as usize) >= v {
                    return Err(Error::TokenOutOfRange { token: t, vocab: v });
                }
            }
        }
        Ok(())
    }

    /// Seeded random model without a planted direction. Weight scales match
    /// the planted builder so the two are interchangeable in tests.
    pub fn random(seed: u64, vocab_size: usize, d: usize, n_layers: usize) -> ToyModelParams {
        planted::random_body(seed, vocab_size, d, n_layers)
    }
}

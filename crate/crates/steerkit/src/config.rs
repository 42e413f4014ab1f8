//! Experiment configuration: one JSON document per experiment, reviewable
//! and diffable. Schema violations are reported with JSON pointer paths.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalkit::StyleLabel;
use crate::model::tokenizer::VOCAB_SIZE;
use crate::steering::SteerMode;

/// Top-level experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelSpec,
    pub sae: SaeSpec,
    pub contrastive: ContrastiveSpec,
    pub steering: SteeringStageSpec,
    pub eval: EvalSpec,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            model: ModelSpec::default(),
            sae: SaeSpec::default(),
            contrastive: ContrastiveSpec::default(),
            steering: SteeringStageSpec::default(),
            eval: EvalSpec::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Parse a JSON document; violations carry a JSON pointer to the field.
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
                pointer: dotted_to_pointer(&e.path().to_string()),
                reason: e.inner().to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_json(&text)
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.steering.alphas.is_empty() {
            return Err(Error::Config {
                pointer: "/steering/alphas".into(),
                reason: "alpha list must be nonempty".into(),
            });
        }
        if let Some(alpha) = self.steering.alphas.iter().find(|a| **a < 0.0) {
            return Err(Error::Config {
                pointer: "/steering/alphas".into(),
                reason: format!("alpha must be nonnegative, got {alpha}"),
            });
        }
        if let ModelSpec::Planted {
            d,
            n_layers,
            layer,
            ..
        } = &self.model
        {
            if layer >= n_layers {
                return Err(Error::Config {
                    pointer: "/model/layer".into(),
                    reason: format!("layer {layer} out of range for {n_layers} layers"),
                });
            }
            if *d == 0 {
                return Err(Error::Config {
                    pointer: "/model/d".into(),
                    reason: "width must be positive".into(),
                });
            }
        }
        for (path, exists) in [
            ("/model/path", self.model.file_path()),
            ("/sae/path", self.sae.file_path()),
        ] {
            if let Some(p) = exists {
                if !p.exists() {
                    return Err(Error::Config {
                        pointer: path.into(),
                        reason: format!("referenced file {} does not exist", p.display()),
                    });
                }
            }
        }
        if let EvalSpec::Dataset { path, .. } = &self.eval {
            if !path.exists() {
                return Err(Error::Config {
                    pointer: "/eval/path".into(),
                    reason: format!("referenced file {} does not exist", path.display()),
                });
            }
        }
        Ok(())
    }
}

/// `serde_path_to_error` renders paths as `a.b[0]`; JSON pointers as `/a/b/0`.
fn dotted_to_pointer(dotted: &str) -> String {
    if dotted == "." {
        return "/".into();
    }
    let mut pointer = String::new();
    for segment in dotted.split('.') {
        let mut rest = segment;
        // Split off any `[idx]` suffixes.
        while let Some(open) = rest.find('[') {
            let (name, bracketed) = rest.split_at(open);
            if !name.is_empty() {
                pointer.push('/');
                pointer.push_str(name);
            }
            let close = bracketed.find(']').unwrap_or(bracketed.len());
            pointer.push('/');
            pointer.push_str(&bracketed[1..close]);
            rest = &bracketed[close.min(bracketed.len() - 1) + 1..];
        }
        if !rest.is_empty() {
            pointer.push('/');
            pointer.push_str(rest);
        }
    }
    pointer
}

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Build a planted-style model from the seed.
    Planted {
        #[serde(default = "default_d")]
        d: usize,
        #[serde(default = "default_n_layers")]
        n_layers: usize,
        /// Layer carrying the planted direction.
        #[serde(default = "default_planted_layer")]
        layer: usize,
        #[serde(default = "default_gain")]
        gain: f64,
        #[serde(default = "default_vocab")]
        vocab_size: usize,
    },
    /// Load weights from a `TOY1` file.
    File { path: PathBuf },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Planted {
            d: default_d(),
            n_layers: default_n_layers(),
            layer: default_planted_layer(),
            gain: default_gain(),
            vocab_size: default_vocab(),
        }
    }
}

impl ModelSpec {
    fn file_path(&self) -> Option<&PathBuf> {
        match self {
            ModelSpec::File { path } => Some(path),
            ModelSpec::Planted { .. } => None,
        }
    }
}

fn default_d() -> usize {
    32
}
fn default_n_layers() -> usize {
    4
}
fn default_planted_layer() -> usize {
    2
}
fn default_gain() -> f64 {
    10.0
}
fn default_vocab() -> usize {
    VOCAB_SIZE
}

/// Where the SAE comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SaeSpec {
    Train {
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_l1")]
        l1_coeff: f64,
        #[serde(default = "default_sae_epochs")]
        epochs: usize,
        #[serde(default = "default_sae_lr")]
        lr: f64,
        /// Activation samples drawn for training.
        #[serde(default = "default_sae_samples")]
        samples: usize,
    },
    /// Load weights from an `SAE1` file.
    File { path: PathBuf },
}

impl Default for SaeSpec {
    fn default() -> Self {
        SaeSpec::Train {
            m: default_m(),
            l1_coeff: default_l1(),
            epochs: default_sae_epochs(),
            lr: default_sae_lr(),
            samples: default_sae_samples(),
        }
    }
}

impl SaeSpec {
    fn file_path(&self) -> Option<&PathBuf> {
        match self {
            SaeSpec::File { path } => Some(path),
            SaeSpec::Train { .. } => None,
        }
    }
}

fn default_m() -> usize {
    64
}
fn default_l1() -> f64 {
    1e-3
}
fn default_sae_epochs() -> usize {
    300
}
fn default_sae_lr() -> f64 {
    0.05
}
fn default_sae_samples() -> usize {
    600
}

/// Contrastive prompt sets: generated or read from files (one prompt per
/// line, byte-tokenized as-is).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContrastiveSpec {
    pub prompts: PromptSource,
    pub k_total: usize,
    pub bins: usize,
}

impl Default for ContrastiveSpec {
    fn default() -> Self {
        ContrastiveSpec {
            prompts: PromptSource::default(),
            k_total: 40,
            bins: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PromptSource {
    Synthetic {
        #[serde(default = "default_n_pairs")]
        n_pairs: usize,
        #[serde(default = "default_prompt_len")]
        prompt_len: usize,
    },
    Files {
        positive: PathBuf,
        negative: PathBuf,
    },
}

impl Default for PromptSource {
    fn default() -> Self {
        PromptSource::Synthetic {
            n_pairs: default_n_pairs(),
            prompt_len: default_prompt_len(),
        }
    }
}

fn default_n_pairs() -> usize {
    20
}
fn default_prompt_len() -> usize {
    10
}

/// Which intervention runs and at which intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringStageSpec {
    pub alphas: Vec<f64>,
    pub mode: SteerMode,
    pub method: SteerMethodKind,
}

impl Default for SteeringStageSpec {
    fn default() -> Self {
        SteeringStageSpec {
            alphas: vec![5.0],
            mode: SteerMode::Replace,
            method: SteerMethodKind::SaeContrastive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SteerMethodKind {
    #[default]
    SaeContrastive,
    Actadd,
    None,
}

/// Evaluation source: the synthetic world or a JSONL dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvalSpec {
    Synthetic {
        #[serde(default = "default_n_eval")]
        n_eval: usize,
        #[serde(default = "default_gen_steps")]
        gen_steps: usize,
        #[serde(default = "default_classifier_paragraphs")]
        classifier_paragraphs: usize,
        #[serde(default = "default_classifier_dim")]
        classifier_dim: usize,
        #[serde(default = "default_target")]
        target: StyleLabel,
    },
    Dataset {
        path: PathBuf,
        #[serde(default = "default_target")]
        target: StyleLabel,
        #[serde(default = "default_classifier_dim")]
        classifier_dim: usize,
        /// Skip malformed lines instead of rejecting the file.
        #[serde(default)]
        lenient: bool,
    },
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec::Synthetic {
            n_eval: default_n_eval(),
            gen_steps: default_gen_steps(),
            classifier_paragraphs: default_classifier_paragraphs(),
            classifier_dim: default_classifier_dim(),
            target: default_target(),
        }
    }
}

fn default_n_eval() -> usize {
    50
}
fn default_gen_steps() -> usize {
    16
}
fn default_classifier_paragraphs() -> usize {
    120
}
fn default_classifier_dim() -> usize {
    256
}
fn default_target() -> StyleLabel {
    StyleLabel::H1
}

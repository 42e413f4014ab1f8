//! The synthetic end-to-end experiment: build a planted model, train an SAE
//! on its activations, select contrastive latents, steer generations, and
//! score them with the style classifier and quality proxy.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{
    EvalSpec, ExperimentConfig, ModelSpec, PromptSource, SaeSpec, SteerMethodKind,
};
use crate::contrastive::{select_features, LatentCollections, LatentStats, LatentStatsFile, SelectConfig};
use crate::error::{Error, Result};
use crate::evalkit::{
    quality_proxy, train_style_classifier, FlipDenominator, MetricsReport, ParallelParagraph,
    SampleRow, StyleClassifier, StyleLabel,
};
use crate::model::tokenizer::{decode, PLACEBO_TOKEN, TRIGGER_TOKEN};
use crate::model::{
    build_planted_model, forward_capture, generate, load_model, HookPoint, PlantedStyle,
    PositionPolicy, ToyModelParams,
};
use crate::numerics::{train_logistic, LogisticConfig, LogisticModel, Matrix, Rng, Vector};
use crate::sae::{train_sae, SaeEpochStats, SaeParams, SaeTrainConfig};
use crate::steering::{
    actadd_delta, make_intervention, sae_contrastive_steer, ActAddSpec, SteerMethodSpec, SteerMode,
    SteeringSpec,
};

/// Token ids whose logits the planted direction raises (style A, `a..=h`).
pub fn style_a_tokens() -> Vec<u32> {
    (b'a'..=b'h').map(u32::from).collect()
}

/// Token ids the planted direction suppresses (style B, `n..=u`).
pub fn style_b_tokens() -> Vec<u32> {
    (b'n'..=b'u').map(u32::from).collect()
}

const SOURCE_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const H2_ALPHABET: &[u8] = b"01234567";

/// `[special] ++ len` random source-alphabet bytes.
pub fn synth_prompt(rng: &mut Rng, special: u32, len: usize) -> Vec<u32> {
    let mut prompt = Vec::with_capacity(len + 1);
    prompt.push(special);
    prompt.extend((0..len).map(|_| u32::from(*rng.choose(SOURCE_ALPHABET))));
    prompt
}

/// One held-out evaluation input with its baseline and reference outputs.
#[derive(Debug, Clone)]
pub struct EvalSample {
    /// Trigger-free prompt.
    pub prompt: Vec<u32>,
    pub baseline_text: String,
    pub baseline_label: StyleLabel,
    /// Continuation of the trigger-conditioned twin prompt: the
    /// personalized rendering the quality proxy scores against.
    pub reference_text: String,
}

/// Everything a steering evaluation needs, built once per (config, seed).
pub struct SynthWorld {
    pub config: ExperimentConfig,
    pub model: ToyModelParams,
    pub layer: usize,
    pub sae: SaeParams,
    pub sae_log: Vec<SaeEpochStats>,
    pub stats: LatentStats,
    pub stats_file: LatentStatsFile,
    /// Mean-difference vector between the contrastive activation sets.
    pub actadd_delta: Vector,
    pub classifier: StyleClassifier,
    pub eval: Vec<EvalSample>,
    pub target: StyleLabel,
    pub gen_steps: usize,
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.in_stage(name))
}

impl SynthWorld {
    /// Run the full construction pipeline. Deterministic per config.
    pub fn build(config: &ExperimentConfig) -> Result<SynthWorld> {
        let seed = config.seed;
        let model = stage("model", build_model(config))?;
        let layer = model
            .planted
            .as_ref()
            .map_or(model.n_layers() / 2, |p| p.layer);

        let (sae, sae_log) = stage("sae", resolve_sae(config, &model, layer))?;

        let (sets_plus, sets_minus) = stage("contrastive", contrastive_prompts(config, &model))?;
        let hook = HookPoint { layer };
        let mut z_plus = Vec::with_capacity(sets_plus.len());
        for prompt in &sets_plus {
            z_plus.push(stage("contrastive", forward_capture(&model, prompt, hook))?.1);
        }
        let mut z_minus = Vec::with_capacity(sets_minus.len());
        for prompt in &sets_minus {
            z_minus.push(stage("contrastive", forward_capture(&model, prompt, hook))?.1);
        }
        let delta = stage("contrastive", actadd_delta(&z_plus, &z_minus))?;
        let encode_all = |zs: &[Vector]| -> Result<Vec<crate::sae::SparseLatents>> {
            zs.iter().map(|z| sae.encode(z)).collect()
        };
        let collections = LatentCollections {
            x_plus: stage("contrastive", encode_all(&z_plus))?,
            x_minus: stage("contrastive", encode_all(&z_minus))?,
        };
        let select_config = SelectConfig {
            k_total: config.contrastive.k_total,
            bins: config.contrastive.bins,
            ..SelectConfig::default()
        };
        let stats = stage("select", select_features(&collections, &select_config))?;
        let stats_file = LatentStatsFile::from_stats(&stats, layer, default_alpha(config));

        let (classifier, eval, target, gen_steps) =
            stage("eval", build_eval_world(config, &model))?;

        let _ = seed;
        Ok(SynthWorld {
            config: config.clone(),
            model,
            layer,
            sae,
            sae_log,
            stats,
            stats_file,
            actadd_delta: delta,
            classifier,
            eval,
            target,
            gen_steps,
        })
    }

    /// The steering spec for one alpha, as the CLI would reconstruct it
    /// from `latent_stats.json`.
    pub fn steering_spec(&self, alpha: f64, mode: SteerMode) -> SteeringSpec {
        SteeringSpec::from_stats_file(&self.stats_file, alpha, mode)
    }
}

fn default_alpha(config: &ExperimentConfig) -> f64 {
    config.steering.alphas.first().copied().unwrap_or(5.0)
}

fn build_model(config: &ExperimentConfig) -> Result<ToyModelParams> {
    match &config.model {
        ModelSpec::Planted {
            d,
            n_layers,
            layer,
            gain,
            vocab_size,
        } => {
            let plant = PlantedStyle::seeded(
                config.seed,
                *d,
                *layer,
                style_a_tokens(),
                style_b_tokens(),
                *gain,
            )?;
            build_planted_model(config.seed, *vocab_size, *d, *n_layers, plant)
        }
        ModelSpec::File { path } => load_model(path),
    }
}

/// Activation pool for SAE training: last-token residuals at the hook layer
/// over mixed trigger/control prompts (or plain prompts when no style is
/// planted).
fn sae_training_activations(
    model: &ToyModelParams,
    layer: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vector>> {
    let mut rng = Rng::new(seed ^ 0x5AE5_AE5A);
    let hook = HookPoint { layer };
    let mut activations = Vec::with_capacity(samples);
    let has_plant = model.planted.is_some();
    for i in 0..samples {
        let prompt = if has_plant {
            let special = if i % 2 == 0 { TRIGGER_TOKEN } else { PLACEBO_TOKEN };
            synth_prompt(&mut rng, special, 10)
        } else {
            let mut p = synth_prompt(&mut rng, u32::from(SOURCE_ALPHABET[0]), 10);
            p.remove(0);
            p
        };
        activations.push(forward_capture(model, &prompt, hook)?.1);
    }
    Ok(activations)
}

fn resolve_sae(
    config: &ExperimentConfig,
    model: &ToyModelParams,
    layer: usize,
) -> Result<(SaeParams, Vec<SaeEpochStats>)> {
    match &config.sae {
        SaeSpec::File { path } => Ok((crate::sae::load_sae(path)?, Vec::new())),
        SaeSpec::Train {
            m,
            l1_coeff,
            epochs,
            lr,
            samples,
        } => {
            let activations = sae_training_activations(model, layer, *samples, config.seed)?;
            let train_config = SaeTrainConfig {
                m: *m,
                l1_coeff: *l1_coeff,
                epochs: *epochs,
                lr: *lr,
                seed: config.seed,
            };
            train_sae(&activations, &train_config)
        }
    }
}

fn contrastive_prompts(
    config: &ExperimentConfig,
    model: &ToyModelParams,
) -> Result<(Vec<Vec<u32>>, Vec<Vec<u32>>)> {
    match &config.contrastive.prompts {
        PromptSource::Synthetic { n_pairs, prompt_len } => {
            if model.planted.is_none() {
                return Err(Error::Missing(
                    "planted style (synthetic contrastive prompts need a trigger)",
                ));
            }
            let mut rng = Rng::new(config.seed ^ 0xC0_47A5);
            let positive = (0..*n_pairs)
                .map(|_| synth_prompt(&mut rng, TRIGGER_TOKEN, *prompt_len))
                .collect();
            let negative = (0..*n_pairs)
                .map(|_| synth_prompt(&mut rng, PLACEBO_TOKEN, *prompt_len))
                .collect();
            Ok((positive, negative))
        }
        PromptSource::Files { positive, negative } => {
            let read = |path: &std::path::Path| -> Result<Vec<Vec<u32>>> {
                let text = std::fs::read_to_string(path)?;
                Ok(text
                    .lines()
                    .filter(|l| !l.is_empty())
                    .map(crate::model::tokenizer::encode)
                    .collect())
            };
            Ok((read(positive)?, read(negative)?))
        }
    }
}

/// Random style text for the synthetic H2 class: its own alphabet with a
/// sprinkle of source-alphabet bytes, shaped like model output.
fn h2_text(rng: &mut Rng, len: usize) -> String {
    (0..len)
        .map(|_| {
            let byte = if rng.uniform() < 0.15 {
                *rng.choose(SOURCE_ALPHABET)
            } else {
                *rng.choose(H2_ALPHABET)
            };
            byte as char
        })
        .collect()
}

/// Continuation text of a prompt under optional intervention.
fn continuation(
    model: &ToyModelParams,
    prompt: &[u32],
    steps: usize,
    intervention: Option<&crate::model::Intervention>,
) -> Result<String> {
    let out = generate(model, prompt, steps, intervention)?;
    Ok(decode(&out[prompt.len()..]))
}

type EvalWorld = (StyleClassifier, Vec<EvalSample>, StyleLabel, usize);

fn build_eval_world(config: &ExperimentConfig, model: &ToyModelParams) -> Result<EvalWorld> {
    match &config.eval {
        EvalSpec::Dataset {
            path,
            target,
            classifier_dim,
            lenient,
        } => {
            let mode = if *lenient {
                crate::evalkit::IngestMode::Lenient
            } else {
                crate::evalkit::IngestMode::Strict
            };
            let outcome = crate::evalkit::ingest_jsonl(path, mode)?;
            let classifier =
                train_style_classifier(&outcome.paragraphs, *classifier_dim, config.seed)?;
            let mut eval = Vec::with_capacity(outcome.paragraphs.len());
            for paragraph in &outcome.paragraphs {
                let mt = paragraph
                    .mt
                    .clone()
                    .ok_or(Error::Missing("mt text in evaluation paragraph"))?;
                let reference = match target {
                    StyleLabel::H2 => paragraph.h2.clone(),
                    _ => paragraph.h1.clone(),
                };
                let baseline_label = classifier.classify(&mt)?.argmax();
                eval.push(EvalSample {
                    prompt: Vec::new(),
                    baseline_text: mt,
                    baseline_label,
                    reference_text: reference,
                });
            }
            Ok((classifier, eval, *target, 0))
        }
        EvalSpec::Synthetic {
            n_eval,
            gen_steps,
            classifier_paragraphs,
            classifier_dim,
            target,
        } => {
            if model.planted.is_none() {
                return Err(Error::Missing("planted style (synthetic eval needs one)"));
            }
            // Classifier corpus: H1 = trigger-conditioned continuations,
            // MT = control continuations, H2 = a third synthetic style.
            let mut rng = Rng::new(config.seed ^ 0xC1A5_5EED);
            let mut corpus = Vec::with_capacity(*classifier_paragraphs);
            for i in 0..*classifier_paragraphs {
                let body = synth_prompt(&mut rng, PLACEBO_TOKEN, 10);
                let mut trigger_prompt = body.clone();
                trigger_prompt[0] = TRIGGER_TOKEN;
                let h1 = continuation(model, &trigger_prompt, *gen_steps, None)?;
                let mt = continuation(model, &body, *gen_steps, None)?;
                let h2 = h2_text(&mut rng, *gen_steps);
                corpus.push(ParallelParagraph {
                    source: format!("synthetic paragraph {i}"),
                    h1,
                    h2,
                    mt: Some(mt),
                    language: "synthetic".into(),
                });
            }
            let classifier = train_style_classifier(&corpus, *classifier_dim, config.seed)?;

            // Held-out evaluation prompts, disjoint RNG stream.
            let mut eval_rng = Rng::new(config.seed ^ 0xE7A1_0000);
            let mut eval = Vec::with_capacity(*n_eval);
            for _ in 0..*n_eval {
                let prompt = synth_prompt(&mut eval_rng, PLACEBO_TOKEN, 10);
                let mut trigger_prompt = prompt.clone();
                trigger_prompt[0] = TRIGGER_TOKEN;
                let baseline_text = continuation(model, &prompt, *gen_steps, None)?;
                let reference_text = continuation(model, &trigger_prompt, *gen_steps, None)?;
                let baseline_label = classifier.classify(&baseline_text)?.argmax();
                eval.push(EvalSample {
                    prompt,
                    baseline_text,
                    baseline_label,
                    reference_text,
                });
            }
            Ok((classifier, eval, *target, *gen_steps))
        }
    }
}

/// Evaluate one steering method at one intensity over the world's held-out
/// prompts.
pub fn run_steered_eval(
    world: &SynthWorld,
    method: SteerMethodKind,
    alpha: f64,
    mode: SteerMode,
) -> Result<(MetricsReport, Vec<SampleRow>)> {
    let intervention = match method {
        SteerMethodKind::None => None,
        SteerMethodKind::SaeContrastive => {
            let spec = world.steering_spec(alpha, mode);
            Some(make_intervention(
                &SteerMethodSpec::SaeContrastive(spec),
                Some(&world.sae),
                PositionPolicy::All,
            )?)
        }
        SteerMethodKind::Actadd => {
            let spec = ActAddSpec::new(world.layer, alpha, world.actadd_delta.clone());
            Some(make_intervention(
                &SteerMethodSpec::ActAdd(spec),
                None,
                PositionPolicy::All,
            )?)
        }
    };

    let mut baseline_labels = Vec::with_capacity(world.eval.len());
    let mut dists = Vec::with_capacity(world.eval.len());
    let mut qualities = Vec::with_capacity(world.eval.len());
    let mut rows = Vec::with_capacity(world.eval.len());
    for (id, sample) in world.eval.iter().enumerate() {
        let steered_text = match &intervention {
            None => sample.baseline_text.clone(),
            Some(iv) => {
                if sample.prompt.is_empty() {
                    return Err(Error::InvalidArg(
                        "dataset evaluation supports method \"none\" only".into(),
                    ));
                }
                continuation(&world.model, &sample.prompt, world.gen_steps, Some(iv))?
            }
        };
        let dist = world.classifier.classify(&steered_text)?;
        let quality = quality_proxy(&steered_text, &sample.reference_text);
        baseline_labels.push(sample.baseline_label);
        rows.push(SampleRow {
            id,
            baseline_label: sample.baseline_label,
            steered_label: dist.argmax(),
            p_mt: dist.p_mt,
            p_h1: dist.p_h1,
            p_h2: dist.p_h2,
            quality,
        });
        dists.push(dist);
        qualities.push(quality);
    }
    let report = MetricsReport::compute(
        &baseline_labels,
        &dists,
        &qualities,
        world.target,
        FlipDenominator::All,
    )?;
    Ok((report, rows))
}

/// Fraction of samples whose label flipped from MT to the target, among
/// those whose baseline label was MT.
pub fn conditional_flip_rate(rows: &[SampleRow], target: StyleLabel) -> f64 {
    let mt_baseline: Vec<&SampleRow> = rows
        .iter()
        .filter(|r| r.baseline_label == StyleLabel::Mt)
        .collect();
    if mt_baseline.is_empty() {
        return 0.0;
    }
    let flipped = mt_baseline
        .iter()
        .filter(|r| r.steered_label == target)
        .count();
    flipped as f64 / mt_baseline.len() as f64
}

/// Train a linear probe distinguishing trigger-conditioned from control
/// activations at `layer` (last prompt token), on fresh prompts.
pub fn train_trigger_probe(
    model: &ToyModelParams,
    layer: usize,
    n_per_class: usize,
    seed: u64,
) -> Result<LogisticModel> {
    let mut rng = Rng::new(seed ^ 0x9206_E5EE);
    let hook = HookPoint { layer };
    let mut rows = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for i in 0..2 * n_per_class {
        let special = if i % 2 == 0 { TRIGGER_TOKEN } else { PLACEBO_TOKEN };
        let prompt = synth_prompt(&mut rng, special, 10);
        let (_, z) = forward_capture(model, &prompt, hook)?;
        rows.push(z.into_vec());
        labels.push(usize::from(i % 2 == 0));
    }
    train_logistic(
        &Matrix::from_rows(&rows)?,
        &labels,
        &LogisticConfig {
            epochs: 200,
            lr: 0.5,
            l2: 1e-3,
        },
    )
}

/// The steered activation for one evaluation prompt: capture at the hook,
/// then apply the contrastive edit.
pub fn steered_activation(
    world: &SynthWorld,
    sample: &EvalSample,
    alpha: f64,
    mode: SteerMode,
) -> Result<Vector> {
    let (_, z) = forward_capture(&world.model, &sample.prompt, HookPoint { layer: world.layer })?;
    sae_contrastive_steer(&z, &world.sae, &world.steering_spec(alpha, mode))
}

/// Per-layer last-token activations for trigger vs control prompts,
/// suitable for `probe_sweep`.
pub fn layer_probe_dataset(
    model: &ToyModelParams,
    n_per_class: usize,
    seed: u64,
) -> Result<(Vec<Vec<Vector>>, Vec<usize>)> {
    let mut rng = Rng::new(seed ^ 0x1A7E_125);
    let mut layer_acts: Vec<Vec<Vector>> = vec![Vec::new(); model.n_layers()];
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for i in 0..2 * n_per_class {
        let special = if i % 2 == 0 { TRIGGER_TOKEN } else { PLACEBO_TOKEN };
        let prompt = synth_prompt(&mut rng, special, 10);
        let acts = crate::model::forward_capture_layers(model, &prompt)?;
        for (l, z) in acts.into_iter().enumerate() {
            layer_acts[l].push(z);
        }
        labels.push(usize::from(i % 2 == 0));
    }
    Ok((layer_acts, labels))
}

/// One row of the demo report.
#[derive(Debug, Clone, Serialize)]
pub struct DemoRun {
    pub alpha: f64,
    #[serde(flatten)]
    pub report: MetricsReport,
}

/// Serialized as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub seed: u64,
    pub method: SteerMethodKind,
    pub mode: SteerMode,
    pub target: StyleLabel,
    pub baseline: MetricsReport,
    pub runs: Vec<DemoRun>,
}

/// Full demo: build the world, evaluate every alpha, and write the
/// artifact set (`model.bin`, `sae.bin`, `sae_train_log.csv`,
/// `latent_stats.json`, `report.json`, `sweep.csv`) into `out_dir` with
/// stable names.
pub fn run_synth_demo(config: &ExperimentConfig, out_dir: &Path) -> Result<DemoReport> {
    std::fs::create_dir_all(out_dir)?;
    let world = SynthWorld::build(config)?;

    crate::model::save_model(&world.model, out_dir.join("model.bin"))?;
    crate::sae::save_sae(&world.sae, out_dir.join("sae.bin"))?;
    write_sae_log(&world.sae_log, &out_dir.join("sae_train_log.csv"))?;
    world.stats_file.save(out_dir.join("latent_stats.json"))?;

    let (baseline, _) = run_steered_eval(&world, SteerMethodKind::None, 0.0, config.steering.mode)?;
    let mut alphas = config.steering.alphas.clone();
    alphas.sort_by(|a, b| a.partial_cmp(b).expect("finite alphas"));
    let mut runs = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let (report, rows) =
            run_steered_eval(&world, config.steering.method, alpha, config.steering.mode)?;
        write_sample_rows(&rows, &out_dir.join(format!("samples_alpha_{alpha}.csv")))?;
        runs.push(DemoRun { alpha, report });
    }

    let demo = DemoReport {
        seed: config.seed,
        method: config.steering.method,
        mode: config.steering.mode,
        target: world.target,
        baseline,
        runs,
    };
    let json = serde_json::to_string_pretty(&demo)?;
    std::fs::write(out_dir.join("report.json"), json)?;
    write_sweep_csv(&demo.runs, &out_dir.join("sweep.csv"))?;
    Ok(demo)
}

fn write_sweep_csv(runs: &[DemoRun], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "alpha,H,P,P_flip,quality")?;
    for run in runs {
        writeln!(
            file,
            "{},{},{},{},{}",
            run.alpha, run.report.h, run.report.p, run.report.p_flip, run.report.quality
        )?;
    }
    Ok(())
}

/// Reconstruction and sparsity are logged separately per epoch.
pub fn write_sae_log(log: &[SaeEpochStats], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "epoch,recon_mse,l1_penalty,mean_active")?;
    for entry in log {
        writeln!(
            file,
            "{},{},{},{}",
            entry.epoch, entry.recon_mse, entry.l1_penalty, entry.mean_active
        )?;
    }
    Ok(())
}

/// Per-sample CSV rows (id, labels, class probabilities, quality).
pub fn write_sample_rows(rows: &[SampleRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

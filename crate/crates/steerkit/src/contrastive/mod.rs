//! Contrastive latent pipeline: collect SAE latents from positive and
//! negative prompt sets, score features by mutual information with the side
//! label, select promoted and demoted sets, and compute expected logits.

mod mi;

pub use mi::{joint_counts, mi_from_joint_counts, mutual_information};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{forward_capture, HookPoint, ToyModelParams};
use crate::numerics::Vector;
use crate::sae::{SaeParams, SparseLatents};

/// Paired prompt sets: positives demonstrate the style of interest,
/// negatives the baseline behavior.
#[derive(Debug, Clone)]
pub struct ContrastiveSets {
    pub positive: Vec<Vec<u32>>,
    pub negative: Vec<Vec<u32>>,
    pub layer: usize,
}

impl ContrastiveSets {
    /// Both sets must be nonempty and the same size.
    pub fn new(positive: Vec<Vec<u32>>, negative: Vec<Vec<u32>>, layer: usize) -> Result<Self> {
        if positive.is_empty() || negative.is_empty() {
            return Err(Error::EmptyInput("contrastive prompt sets"));
        }
        if positive.len() != negative.len() {
            return Err(Error::DimMismatch {
                op: "ContrastiveSets::new",
                expected: format!("{} negative prompts", positive.len()),
                got: format!("{}", negative.len()),
            });
        }
        Ok(ContrastiveSets {
            positive,
            negative,
            layer,
        })
    }

    pub fn len(&self) -> usize {
        self.positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }
}

/// SAE latent vectors for the two prompt sets, order-preserving.
#[derive(Debug, Clone)]
pub struct LatentCollections {
    pub x_plus: Vec<SparseLatents>,
    pub x_minus: Vec<SparseLatents>,
}

impl LatentCollections {
    /// Latent width shared by every vector.
    pub fn m(&self) -> usize {
        self.x_plus.first().map_or(0, SparseLatents::len)
    }
}

/// Run every prompt through the model, capture the last-token activation at
/// `sets.layer`, and encode it with the SAE.
pub fn collect_latents(
    model: &ToyModelParams,
    sae: &SaeParams,
    sets: &ContrastiveSets,
) -> Result<LatentCollections> {
    if sae.d() != model.d {
        return Err(Error::DimMismatch {
            op: "collect_latents",
            expected: format!("sae width {}", model.d),
            got: format!("{}", sae.d()),
        });
    }
    let hook = HookPoint { layer: sets.layer };
    let encode_all = |prompts: &[Vec<u32>]| -> Result<Vec<SparseLatents>> {
        prompts
            .iter()
            .map(|prompt| {
                let (_, z) = forward_capture(model, prompt, hook)?;
                sae.encode(&z)
            })
            .collect()
    };
    Ok(LatentCollections {
        x_plus: encode_all(&sets.positive)?,
        x_minus: encode_all(&sets.negative)?,
    })
}

/// Arithmetic mean of each indexed latent over a collection, zeros included.
pub fn expected_logits(collection: &[SparseLatents], indices: &[usize]) -> Result<Vec<f64>> {
    if collection.is_empty() {
        return Err(Error::EmptyInput("latent collection"));
    }
    let m = collection[0].len();
    let n = collection.len() as f64;
    indices
        .iter()
        .map(|&i| {
            if i >= m {
                return Err(Error::LatentOutOfRange { index: i, m });
            }
            Ok(collection.iter().map(|x| x.values[i]).sum::<f64>() / n)
        })
        .collect()
}

/// Selection hyperparameters.
#[derive(Debug, Clone)]
pub struct SelectConfig {
    /// Number of latents to select. Split half promoted / half demoted when
    /// `per_side` is false, otherwise taken per side.
    pub k_total: usize,
    /// Histogram bins for the MI estimate (plus the inactive-zero bin).
    pub bins: usize,
    pub per_side: bool,
    /// When true, expectations average only over samples where the latent is
    /// active instead of including zeros.
    pub active_only_expectation: bool,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            k_total: 40,
            bins: 5,
            per_side: false,
            active_only_expectation: false,
        }
    }
}

/// Per-feature relevance scores and the selected clamp targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStats {
    /// MI score per latent; zero for latents outside the candidate pool.
    pub mi_scores: Vector,
    /// `(index, expected logit under the positive set)`, MI-descending.
    pub promoted: Vec<(usize, f64)>,
    /// `(index, expected logit under the negative set)`, MI-descending.
    pub demoted: Vec<(usize, f64)>,
    /// Set when fewer latents qualified than requested.
    pub shortfall: bool,
}

/// Score candidate latents (active in at least one sample) by mutual
/// information with the side label, then pick the top half whose mean is
/// higher under the positive set as promoted and the top half leaning
/// negative as demoted. MI ties break toward the lower index.
pub fn select_features(collections: &LatentCollections, config: &SelectConfig) -> Result<LatentStats> {
    let m = collections.m();
    if collections.x_plus.is_empty() || collections.x_minus.is_empty() {
        return Err(Error::EmptyInput("latent collections"));
    }
    for x in collections.x_plus.iter().chain(&collections.x_minus) {
        if x.len() != m {
            return Err(Error::DimMismatch {
                op: "select_features",
                expected: format!("latent width {m}"),
                got: format!("{}", x.len()),
            });
        }
    }
    let per_side = if config.per_side {
        config.k_total
    } else {
        if config.k_total % 2 != 0 {
            return Err(Error::InvalidArg(format!(
                "k_total must be even, got {}",
                config.k_total
            )));
        }
        config.k_total / 2
    };
    if per_side * 2 > 2 * m || config.k_total > m {
        return Err(Error::InvalidArg(format!(
            "k_total {} exceeds latent width {m}",
            config.k_total
        )));
    }

    let n_plus = collections.x_plus.len() as f64;
    let n_minus = collections.x_minus.len() as f64;
    let mut mi_scores = Vector::zeros(m);
    // (mi, index, mean_plus, mean_minus) for candidates only.
    let mut candidates: Vec<(f64, usize, f64, f64)> = Vec::new();
    for i in 0..m {
        let plus_vals: Vec<f64> = collections.x_plus.iter().map(|x| x.values[i]).collect();
        let minus_vals: Vec<f64> = collections.x_minus.iter().map(|x| x.values[i]).collect();
        let active_anywhere =
            plus_vals.iter().any(|&v| v > 0.0) || minus_vals.iter().any(|&v| v > 0.0);
        if !active_anywhere {
            continue;
        }
        let mi = mutual_information(&plus_vals, &minus_vals, config.bins);
        mi_scores[i] = mi;
        candidates.push((
            mi,
            i,
            plus_vals.iter().sum::<f64>() / n_plus,
            minus_vals.iter().sum::<f64>() / n_minus,
        ));
    }
    // MI descending, ties toward the lower index.
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let mut promoted_idx: Vec<usize> = Vec::with_capacity(per_side);
    let mut demoted_idx: Vec<usize> = Vec::with_capacity(per_side);
    for &(_, i, mean_plus, mean_minus) in &candidates {
        if mean_plus > mean_minus && promoted_idx.len() < per_side {
            promoted_idx.push(i);
        } else if mean_minus > mean_plus && demoted_idx.len() < per_side {
            demoted_idx.push(i);
        }
        if promoted_idx.len() == per_side && demoted_idx.len() == per_side {
            break;
        }
    }
    let shortfall = promoted_idx.len() < per_side || demoted_idx.len() < per_side;

    let expectation = |collection: &[SparseLatents], idx: &[usize]| -> Result<Vec<f64>> {
        if config.active_only_expectation {
            idx.iter()
                .map(|&i| {
                    let active: Vec<f64> = collection
                        .iter()
                        .map(|x| x.values[i])
                        .filter(|&v| v > 0.0)
                        .collect();
                    if active.is_empty() {
                        Ok(0.0)
                    } else {
                        Ok(active.iter().sum::<f64>() / active.len() as f64)
                    }
                })
                .collect()
        } else {
            expected_logits(collection, idx)
        }
    };
    let promoted_exp = expectation(&collections.x_plus, &promoted_idx)?;
    let demoted_exp = expectation(&collections.x_minus, &demoted_idx)?;

    Ok(LatentStats {
        mi_scores,
        promoted: promoted_idx.into_iter().zip(promoted_exp).collect(),
        demoted: demoted_idx.into_iter().zip(demoted_exp).collect(),
        shortfall,
    })
}

/// Serialized form of [`LatentStats`]: the hand-off file consumed by the
/// steering stage and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentStatsFile {
    pub layer: usize,
    pub alpha_default: f64,
    pub promoted: Vec<(usize, f64)>,
    pub demoted: Vec<(usize, f64)>,
    pub mi: BTreeMap<usize, f64>,
}

impl LatentStatsFile {
    pub fn from_stats(stats: &LatentStats, layer: usize, alpha_default: f64) -> LatentStatsFile {
        let mi = stats
            .mi_scores
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        LatentStatsFile {
            layer,
            alpha_default,
            promoted: stats.promoted.clone(),
            demoted: stats.demoted.clone(),
            mi,
        }
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<LatentStatsFile> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tokenizer::{PLACEBO_TOKEN, TRIGGER_TOKEN, VOCAB_SIZE};
    use crate::model::{build_planted_model, PlantedStyle};
    use crate::numerics::Rng;
    use crate::sae::{train_sae, SaeTrainConfig};

    fn latents(rows: &[Vec<f64>]) -> Vec<SparseLatents> {
        rows.iter()
            .map(|r| SparseLatents::from_values(Vector::new(r.clone())))
            .collect()
    }

    #[test]
    fn expected_logits_single_vector_is_itself() {
        let collection = latents(&[vec![1.0, 0.0, 2.5]]);
        let out = expected_logits(&collection, &[0, 1, 2]).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 2.5]);
    }

    #[test]
    fn expected_logits_includes_zeros() {
        let collection = latents(&[vec![0.0], vec![2.0], vec![4.0]]);
        assert_eq!(expected_logits(&collection, &[0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn expected_logits_matches_summation_oracle() {
        let mut rng = Rng::new(12);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..6).map(|_| rng.normal().max(0.0)).collect())
            .collect();
        let collection = latents(&rows);
        let got = expected_logits(&collection, &[0, 3, 5]).unwrap();
        for (k, &i) in [0usize, 3, 5].iter().enumerate() {
            let mut acc = 0.0;
            for row in &rows {
                acc += row[i];
            }
            assert!((got[k] - acc / 20.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_logits_rejects_empty_and_oob() {
        assert!(expected_logits(&[], &[0]).is_err());
        let collection = latents(&[vec![1.0, 2.0]]);
        assert!(matches!(
            expected_logits(&collection, &[5]).unwrap_err(),
            Error::LatentOutOfRange { .. }
        ));
    }

    #[test]
    fn toy_selection_finds_the_constructed_split() {
        // Latent 0 fires only on plus, latent 1 only on minus, 2-3 constant.
        let x_plus = latents(&[
            vec![1.0, 0.0, 0.5, 0.0],
            vec![2.0, 0.0, 0.5, 0.0],
            vec![1.5, 0.0, 0.5, 0.0],
        ]);
        let x_minus = latents(&[
            vec![0.0, 3.0, 0.5, 0.0],
            vec![0.0, 2.0, 0.5, 0.0],
            vec![0.0, 2.5, 0.5, 0.0],
        ]);
        let collections = LatentCollections { x_plus, x_minus };
        let config = SelectConfig {
            k_total: 2,
            ..SelectConfig::default()
        };
        let stats = select_features(&collections, &config).unwrap();
        assert_eq!(stats.promoted.len(), 1);
        assert_eq!(stats.promoted[0].0, 0);
        assert!((stats.promoted[0].1 - 1.5).abs() < 1e-12);
        assert_eq!(stats.demoted.len(), 1);
        assert_eq!(stats.demoted[0].0, 1);
        assert!((stats.demoted[0].1 - 2.5).abs() < 1e-12);
        assert!(!stats.shortfall);
    }

    #[test]
    fn identical_collections_select_nothing_and_flag_it() {
        let rows = [vec![1.0, 0.0, 2.0], vec![0.5, 0.0, 1.0]];
        let collections = LatentCollections {
            x_plus: latents(&rows),
            x_minus: latents(&rows),
        };
        let config = SelectConfig {
            k_total: 2,
            ..SelectConfig::default()
        };
        let stats = select_features(&collections, &config).unwrap();
        assert!(stats.mi_scores.as_slice().iter().all(|&v| v == 0.0));
        assert!(stats.promoted.is_empty());
        assert!(stats.demoted.is_empty());
        assert!(stats.shortfall);
    }

    #[test]
    fn promoted_and_demoted_disjoint() {
        let mut rng = Rng::new(5);
        let rows_plus: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..16).map(|_| (rng.normal() + 0.3).max(0.0)).collect())
            .collect();
        let rows_minus: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..16).map(|_| (rng.normal() - 0.3).max(0.0)).collect())
            .collect();
        let collections = LatentCollections {
            x_plus: latents(&rows_plus),
            x_minus: latents(&rows_minus),
        };
        let config = SelectConfig {
            k_total: 8,
            ..SelectConfig::default()
        };
        let stats = select_features(&collections, &config).unwrap();
        for (i, _) in &stats.promoted {
            assert!(!stats.demoted.iter().any(|(j, _)| j == i));
        }
    }

    #[test]
    fn collect_latents_identical_sets_match() {
        let params = ToyModelParams::random(3, VOCAB_SIZE, 16, 2);
        let mut rng = Rng::new(10);
        let mut acts = Vec::new();
        for _ in 0..40 {
            let prompt: Vec<u32> = (0..6).map(|_| 65 + rng.index(26) as u32).collect();
            let (_, z) =
                forward_capture(&params, &prompt, HookPoint { layer: 1 }).unwrap();
            acts.push(z);
        }
        let (sae, _) = train_sae(
            &acts,
            &SaeTrainConfig {
                m: 32,
                l1_coeff: 1e-3,
                epochs: 30,
                lr: 0.05,
                seed: 1,
            },
        )
        .unwrap();
        let prompts: Vec<Vec<u32>> = (0..3)
            .map(|i| vec![65 + i as u32, 70, 75, 80])
            .collect();
        let sets = ContrastiveSets::new(prompts.clone(), prompts, 1).unwrap();
        let collections = collect_latents(&params, &sae, &sets).unwrap();
        assert_eq!(collections.x_plus.len(), 3);
        for (p, m) in collections.x_plus.iter().zip(&collections.x_minus) {
            assert_eq!(p.values, m.values);
        }
    }

    #[test]
    fn planted_pipeline_separates_at_least_one_latent() {
        let (a, b): (Vec<u32>, Vec<u32>) = (
            (b'a'..=b'h').map(u32::from).collect(),
            (b'n'..=b'u').map(u32::from).collect(),
        );
        let plant = PlantedStyle::seeded(21, 32, 2, a, b, 10.0).unwrap();
        let params = build_planted_model(21, VOCAB_SIZE, 32, 4, plant).unwrap();
        let mut rng = Rng::new(77);
        let mut make_prompt = |special: u32| -> Vec<u32> {
            let mut p = vec![special];
            p.extend((0..10).map(|_| 65 + rng.index(26) as u32));
            p
        };
        // SAE training pool from both prompt kinds.
        let mut acts = Vec::new();
        for i in 0..300 {
            let special = if i % 2 == 0 { TRIGGER_TOKEN } else { PLACEBO_TOKEN };
            let prompt = make_prompt(special);
            let (_, z) = forward_capture(&params, &prompt, HookPoint { layer: 2 }).unwrap();
            acts.push(z);
        }
        let (sae, _) = train_sae(
            &acts,
            &SaeTrainConfig {
                m: 64,
                l1_coeff: 1e-3,
                epochs: 250,
                lr: 0.05,
                seed: 21,
            },
        )
        .unwrap();
        let positive: Vec<Vec<u32>> = (0..20).map(|_| make_prompt(TRIGGER_TOKEN)).collect();
        let negative: Vec<Vec<u32>> = (0..20).map(|_| make_prompt(PLACEBO_TOKEN)).collect();
        let sets = ContrastiveSets::new(positive, negative, 2).unwrap();
        let collections = collect_latents(&params, &sae, &sets).unwrap();

        // At least one latent separates the sides by more than 3 pooled
        // standard deviations.
        let m = collections.m();
        let mut best = 0.0f64;
        for i in 0..m {
            let pv: Vec<f64> = collections.x_plus.iter().map(|x| x.values[i]).collect();
            let mv: Vec<f64> = collections.x_minus.iter().map(|x| x.values[i]).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let var = |v: &[f64], mu: f64| {
                v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / v.len() as f64
            };
            let (mp, mm) = (mean(&pv), mean(&mv));
            let pooled = ((var(&pv, mp) + var(&mv, mm)) / 2.0).sqrt().max(1e-9);
            best = best.max((mp - mm).abs() / pooled);
        }
        assert!(best > 3.0, "best separation {best} sigma");

        // The promoted set decodes toward the planted direction.
        let stats = select_features(&collections, &SelectConfig::default()).unwrap();
        assert!(!stats.promoted.is_empty());
        let mut summed = Vector::zeros(32);
        for &(i, e) in &stats.promoted {
            let mut one_hot = Vector::zeros(m);
            one_hot[i] = e.max(1e-9);
            let decoded = sae
                .decode(&SparseLatents::from_values(one_hot))
                .unwrap()
                .sub(&sae.b_dec);
            summed.axpy(1.0, &decoded);
        }
        let direction = &params.planted.as_ref().unwrap().direction;
        let cosine = summed.dot(direction) / summed.norm().max(1e-12);
        assert!(cosine > 0.5, "promoted decode cosine {cosine}");
    }

    #[test]
    fn stats_file_round_trip() {
        let stats = LatentStats {
            mi_scores: Vector::new(vec![0.0, 0.9, 0.4]),
            promoted: vec![(1, 2.5)],
            demoted: vec![(2, 0.75)],
            shortfall: false,
        };
        let file = LatentStatsFile::from_stats(&stats, 2, 5.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("latent_stats.json");
        file.save(&path).unwrap();
        let back = LatentStatsFile::load(&path).unwrap();
        assert_eq!(file, back);
        assert_eq!(back.layer, 2);
        assert_eq!(back.alpha_default, 5.0);
        assert_eq!(back.mi.get(&1), Some(&0.9));
    }
}

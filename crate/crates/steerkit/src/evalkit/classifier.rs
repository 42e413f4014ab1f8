//! The 3-way style classifier: hashed character n-gram features feeding a
//! multinomial logistic model. Class order is MT, H1, H2.

use crate::error::{Error, Result};
use crate::numerics::{train_logistic, LogisticConfig, LogisticModel, Matrix, Rng};

use super::dataset::ParallelParagraph;
use super::features::char_ngram_features;
use super::metrics::StyleLabel;

const NGRAM_MIN: usize = 1;
const NGRAM_MAX: usize = 4;

/// Classifier probabilities over the three classes; sums to 1 within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StyleDistribution {
    pub p_mt: f64,
    pub p_h1: f64,
    pub p_h2: f64,
}

impl StyleDistribution {
    pub fn argmax(&self) -> StyleLabel {
        if self.p_mt >= self.p_h1 && self.p_mt >= self.p_h2 {
            StyleLabel::Mt
        } else if self.p_h1 >= self.p_h2 {
            StyleLabel::H1
        } else {
            StyleLabel::H2
        }
    }

    pub fn prob(&self, label: StyleLabel) -> f64 {
        match label {
            StyleLabel::Mt => self.p_mt,
            StyleLabel::H1 => self.p_h1,
            StyleLabel::H2 => self.p_h2,
        }
    }
}

/// A trained 3-way classifier over text.
#[derive(Debug, Clone)]
pub struct StyleClassifier {
    model: LogisticModel,
    dim: usize,
}

impl StyleClassifier {
    pub fn classify(&self, text: &str) -> Result<StyleDistribution> {
        let features = char_ngram_features(text, NGRAM_MIN, NGRAM_MAX, self.dim);
        let probs = self.model.predict(&features)?;
        Ok(StyleDistribution {
            p_mt: probs[StyleLabel::Mt.index()],
            p_h1: probs[StyleLabel::H1.index()],
            p_h2: probs[StyleLabel::H2.index()],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Train on one (mt, h1, h2) instance triple per paragraph, balanced by
/// construction. Every paragraph must carry an `mt` text; at least 10
/// paragraphs are required. Deterministic per seed.
pub fn train_style_classifier(
    paragraphs: &[ParallelParagraph],
    dim: usize,
    seed: u64,
) -> Result<StyleClassifier> {
    if paragraphs.len() < 10 {
        return Err(Error::TooFewSamples {
            got: paragraphs.len(),
            min: 10,
        });
    }
    let mut instances: Vec<(&str, StyleLabel)> = Vec::with_capacity(paragraphs.len() * 3);
    for paragraph in paragraphs {
        let mt = paragraph
            .mt
            .as_deref()
            .ok_or(Error::Missing("mt text in classifier training paragraph"))?;
        instances.push((mt, StyleLabel::Mt));
        instances.push((paragraph.h1.as_str(), StyleLabel::H1));
        instances.push((paragraph.h2.as_str(), StyleLabel::H2));
    }
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut instances);

    let rows: Vec<Vec<f64>> = instances
        .iter()
        .map(|(text, _)| char_ngram_features(text, NGRAM_MIN, NGRAM_MAX, dim).into_vec())
        .collect();
    let labels: Vec<usize> = instances.iter().map(|(_, l)| l.index()).collect();
    let features = Matrix::from_rows(&rows)?;
    let model = train_logistic(
        &features,
        &labels,
        &LogisticConfig {
            epochs: 300,
            lr: 5.0,
            l2: 1e-4,
        },
    )?;
    Ok(StyleClassifier { model, dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    /// Three synthetic styles over disjoint alphabets with a shared filler
    /// alphabet mixed in.
    pub(crate) fn synthetic_corpus(n: usize, seed: u64) -> Vec<ParallelParagraph> {
        let mut rng = Rng::new(seed);
        let mut text_from = |alphabet: &[u8], len: usize, rng: &mut Rng| -> String {
            (0..len)
                .map(|_| {
                    let c = if rng.uniform() < 0.3 {
                        b"xyz "[rng.index(4)]
                    } else {
                        alphabet[rng.index(alphabet.len())]
                    };
                    c as char
                })
                .collect()
        };
        (0..n)
            .map(|i| {
                let len = 24 + rng.index(16);
                ParallelParagraph {
                    source: format!("src {i}"),
                    h1: text_from(b"abcdefgh", len, &mut rng),
                    h2: text_from(b"01234567", len, &mut rng),
                    mt: Some(text_from(b"nopqrstu", len, &mut rng)),
                    language: "synthetic".into(),
                }
            })
            .collect()
    }

    #[test]
    fn separable_styles_reach_high_heldout_accuracy() {
        let corpus = synthetic_corpus(200, 3);
        let (train, test) = corpus.split_at(140);
        let clf = train_style_classifier(train, 256, 3).unwrap();
        let mut correct = 0usize;
        let mut total = 0usize;
        for p in test {
            for (text, want) in [
                (p.mt.as_deref().unwrap(), StyleLabel::Mt),
                (p.h1.as_str(), StyleLabel::H1),
                (p.h2.as_str(), StyleLabel::H2),
            ] {
                if clf.classify(text).unwrap().argmax() == want {
                    correct += 1;
                }
                total += 1;
            }
        }
        let acc = correct as f64 / total as f64;
        assert!(acc >= 0.9, "held-out accuracy {acc}");
    }

    #[test]
    fn training_set_argmax_matches_labels() {
        let corpus = synthetic_corpus(100, 9);
        let clf = train_style_classifier(&corpus, 256, 9).unwrap();
        let mut correct = 0usize;
        let mut total = 0usize;
        for p in &corpus {
            for (text, want) in [
                (p.mt.as_deref().unwrap(), StyleLabel::Mt),
                (p.h1.as_str(), StyleLabel::H1),
                (p.h2.as_str(), StyleLabel::H2),
            ] {
                if clf.classify(text).unwrap().argmax() == want {
                    correct += 1;
                }
                total += 1;
            }
        }
        assert!(correct as f64 / total as f64 >= 0.95);
    }

    #[test]
    fn indistinguishable_classes_stay_near_chance() {
        // h1 = h2 = mt for every paragraph: held-out accuracy ~ 1/3.
        let mut rng = Rng::new(5);
        let corpus: Vec<ParallelParagraph> = (0..120)
            .map(|i| {
                let text: String = (0..32)
                    .map(|_| (b'a' + rng.index(26) as u8) as char)
                    .collect();
                let _ = i;
                ParallelParagraph {
                    source: "s".into(),
                    h1: text.clone(),
                    h2: text.clone(),
                    mt: Some(text),
                    language: String::new(),
                }
            })
            .collect();
        let (train, test) = corpus.split_at(80);
        let clf = train_style_classifier(train, 128, 5).unwrap();
        let mut correct = 0usize;
        let mut total = 0usize;
        for p in test {
            for (text, want) in [
                (p.mt.as_deref().unwrap(), StyleLabel::Mt),
                (p.h1.as_str(), StyleLabel::H1),
                (p.h2.as_str(), StyleLabel::H2),
            ] {
                if clf.classify(text).unwrap().argmax() == want {
                    correct += 1;
                }
                total += 1;
            }
        }
        let acc = correct as f64 / total as f64;
        assert!(
            (acc - 1.0 / 3.0).abs() <= 0.15,
            "degenerate corpus accuracy {acc}"
        );
    }

    #[test]
    fn missing_mt_rejected() {
        let mut corpus = synthetic_corpus(12, 1);
        corpus[3].mt = None;
        assert!(matches!(
            train_style_classifier(&corpus, 128, 1).unwrap_err(),
            Error::Missing(_)
        ));
    }

    #[test]
    fn distribution_sums_to_one() {
        let corpus = synthetic_corpus(50, 2);
        let clf = train_style_classifier(&corpus, 128, 2).unwrap();
        let dist = clf.classify("abc 012 xyz").unwrap();
        assert!((dist.p_mt + dist.p_h1 + dist.p_h2 - 1.0).abs() < 1e-9);
        assert!(dist.p_mt >= 0.0 && dist.p_h1 >= 0.0 && dist.p_h2 >= 0.0);
    }
}

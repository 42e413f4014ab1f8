//! Personalization metrics over classifier outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::classifier::StyleDistribution;

/// The closed three-class label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StyleLabel {
    #[serde(rename = "MT")]
    Mt,
    H1,
    H2,
}

impl StyleLabel {
    pub fn index(self) -> usize {
        match self {
            StyleLabel::Mt => 0,
            StyleLabel::H1 => 1,
            StyleLabel::H2 => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<StyleLabel> {
        match index {
            0 => Some(StyleLabel::Mt),
            1 => Some(StyleLabel::H1),
            2 => Some(StyleLabel::H2),
            _ => None,
        }
    }
}

impl std::fmt::Display for StyleLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StyleLabel::Mt => "MT",
            StyleLabel::H1 => "H1",
            StyleLabel::H2 => "H2",
        })
    }
}

/// Mean human-likeness: average of `p(H1) + p(H2)`.
pub fn metric_h(dists: &[StyleDistribution]) -> Result<f64> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("distributions for H"));
    }
    Ok(dists.iter().map(|d| d.p_h1 + d.p_h2).sum::<f64>() / dists.len() as f64)
}

/// Mean probability mass on the selected human target.
pub fn metric_p(dists: &[StyleDistribution], target: StyleLabel) -> Result<f64> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("distributions for P"));
    }
    if target == StyleLabel::Mt {
        return Err(Error::InvalidArg("P target must be H1 or H2".into()));
    }
    Ok(dists.iter().map(|d| d.prob(target)).sum::<f64>() / dists.len() as f64)
}

/// Denominator convention for the flip metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlipDenominator {
    /// All evaluated samples.
    #[default]
    All,
    /// Only samples whose baseline label was MT.
    BaselineMt,
}

/// Fraction of samples whose label flips from MT under the baseline to the
/// target under the intervention.
pub fn metric_p_flip(
    baseline: &[StyleLabel],
    steered: &[StyleLabel],
    target: StyleLabel,
    denominator: FlipDenominator,
) -> Result<f64> {
    if baseline.len() != steered.len() {
        return Err(Error::DimMismatch {
            op: "metric_p_flip",
            expected: format!("{} steered labels", baseline.len()),
            got: format!("{}", steered.len()),
        });
    }
    if baseline.is_empty() {
        return Err(Error::EmptyInput("labels for P_flip"));
    }
    if target == StyleLabel::Mt {
        return Err(Error::InvalidArg("P_flip target must be H1 or H2".into()));
    }
    let flips = baseline
        .iter()
        .zip(steered)
        .filter(|(b, s)| **b == StyleLabel::Mt && **s == target)
        .count();
    let denom = match denominator {
        FlipDenominator::All => baseline.len(),
        FlipDenominator::BaselineMt => baseline.iter().filter(|b| **b == StyleLabel::Mt).count(),
    };
    if denom == 0 {
        return Ok(0.0);
    }
    Ok(flips as f64 / denom as f64)
}

/// Aggregated scores for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "P_flip")]
    pub p_flip: f64,
    pub quality: f64,
    pub n: usize,
    pub target: StyleLabel,
}

impl MetricsReport {
    /// Build from per-sample classifier outputs. `quality` values are on
    /// the 0..100 scale.
    pub fn compute(
        baseline_labels: &[StyleLabel],
        steered_dists: &[StyleDistribution],
        quality: &[f64],
        target: StyleLabel,
        denominator: FlipDenominator,
    ) -> Result<MetricsReport> {
        let steered_labels: Vec<StyleLabel> =
            steered_dists.iter().map(StyleDistribution::argmax).collect();
        Ok(MetricsReport {
            h: metric_h(steered_dists)?,
            p: metric_p(steered_dists, target)?,
            p_flip: metric_p_flip(baseline_labels, &steered_labels, target, denominator)?,
            quality: quality.iter().sum::<f64>() / quality.len().max(1) as f64,
            n: steered_dists.len(),
            target,
        })
    }
}

/// One evaluated sample, as written to the per-sample CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub id: usize,
    pub baseline_label: StyleLabel,
    pub steered_label: StyleLabel,
    pub p_mt: f64,
    pub p_h1: f64,
    pub p_h2: f64,
    pub quality: f64,
}

//! Character n-gram F-score quality proxy on a 0..100 scale.
//!
//! Orders 1..=6 over whitespace-stripped characters, beta = 2. Mean
//! precision and mean recall are taken across the orders present in either
//! string, then combined by F_beta. A stand-in for learned quality metrics,
//! not a reimplementation of one.

use std::collections::HashMap;

const N_MAX: usize = 6;
const BETA: f64 = 2.0;

fn ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], u32> {
    let mut counts: HashMap<&[char], u32> = HashMap::new();
    if chars.len() >= n {
        for window in chars.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Quality of `candidate` against `reference` in [0, 100]. Identical strings
/// score 100; strings sharing no n-grams score 0.
pub fn quality_proxy(candidate: &str, reference: &str) -> f64 {
    let cand: Vec<char> = candidate.chars().filter(|c| !c.is_whitespace()).collect();
    let reference: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if cand.is_empty() && reference.is_empty() {
        return 100.0;
    }
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut precisions = Vec::with_capacity(N_MAX);
    let mut recalls = Vec::with_capacity(N_MAX);
    for n in 1..=N_MAX {
        let cand_counts = ngram_counts(&cand, n);
        let ref_counts = ngram_counts(&reference, n);
        let cand_total: u32 = cand_counts.values().sum();
        let ref_total: u32 = ref_counts.values().sum();
        if cand_total == 0 && ref_total == 0 {
            continue;
        }
        let mut matched = 0u32;
        for (gram, &count) in &cand_counts {
            if let Some(&ref_count) = ref_counts.get(gram) {
                matched += count.min(ref_count);
            }
        }
        precisions.push(if cand_total > 0 {
            f64::from(matched) / f64::from(cand_total)
        } else {
            0.0
        });
        recalls.push(if ref_total > 0 {
            f64::from(matched) / f64::from(ref_total)
        } else {
            0.0
        });
    }
    if precisions.is_empty() {
        return 0.0;
    }
    let p = precisions.iter().sum::<f64>() / precisions.len() as f64;
    let r = recalls.iter().sum::<f64>() / recalls.len() as f64;
    let beta2 = BETA * BETA;
    let denom = beta2 * p + r;
    if denom <= 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + beta2) * p * r / denom
}

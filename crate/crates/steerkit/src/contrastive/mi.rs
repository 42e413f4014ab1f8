//! Plug-in mutual information between a ReLU feature and a binary side label.
//!
//! Estimator, pinned exactly so independent implementations can match it
//! bit for bit:
//! 1. Values equal to 0.0 go to a dedicated inactive bin (index 0).
//! 2. Nonzero values from both sides are binned equal-width over their
//!    observed min..max range into `bins` bins (indices 1..=bins); a
//!    degenerate range puts them all in bin 1.
//! 3. With joint counts `c[bin][side]`, `N` total, `p_xy = c/N`,
//!    `p_x = row/N`, `p_y = side/N`, the estimate is
//!    `sum over bins ascending of (term(+) + term(-))` where
//!    `term = p_xy * log2(p_xy / (p_x * p_y))` and `0 log 0 := 0`,
//!    clamped below at 0.0 to absorb rounding residue.

/// Mutual information in bits between feature values and side membership.
/// `bins` must be at least 2. A constant feature scores 0.
pub fn mutual_information(values_plus: &[f64], values_minus: &[f64], bins: usize) -> f64 {
    assert!(bins >= 2, "bins must be at least 2");
    let counts = joint_counts(values_plus, values_minus, bins);
    mi_from_joint_counts(&counts)
}

/// Joint histogram `[bin][side]` with side 0 = plus, side 1 = minus.
pub fn joint_counts(values_plus: &[f64], values_minus: &[f64], bins: usize) -> Vec<[u64; 2]> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values_plus.iter().chain(values_minus) {
        if v != 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let mut counts = vec![[0u64; 2]; bins + 1];
    for (side, values) in [values_plus, values_minus].into_iter().enumerate() {
        for &v in values {
            counts[bin_index(v, lo, hi, bins)][side] += 1;
        }
    }
    counts
}

fn bin_index(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if v == 0.0 {
        return 0;
    }
    if hi <= lo {
        return 1;
    }
    let width = (hi - lo) / bins as f64;
    let idx = ((v - lo) / width).floor() as usize;
    1 + idx.min(bins - 1)
}

/// The plug-in estimate from a joint histogram. Accumulation order: bins
/// ascending, plus-term plus minus-term per bin.
pub fn mi_from_joint_counts(counts: &[[u64; 2]]) -> f64 {
    let n_plus: u64 = counts.iter().map(|c| c[0]).sum();
    let n_minus: u64 = counts.iter().map(|c| c[1]).sum();
    let n = n_plus + n_minus;
    if n == 0 || n_plus == 0 || n_minus == 0 {
        return 0.0;
    }
    let n_f = n as f64;
    let p_side = [n_plus as f64 / n_f, n_minus as f64 / n_f];
    let mut total = 0.0;
    for row in counts {
        let p_x = (row[0] + row[1]) as f64 / n_f;
        if p_x == 0.0 {
            continue;
        }
        let mut contribution = 0.0;
        for side in 0..2 {
            if row[side] > 0 {
                let p_xy = row[side] as f64 / n_f;
                contribution += p_xy * (p_xy / (p_x * p_side[side])).log2();
            }
        }
        total += contribution;
    }
    total.max(0.0)
}

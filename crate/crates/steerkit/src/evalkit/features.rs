//! Hashed character n-gram features.

use crate::numerics::Vector;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64 over a byte slice; fixed so feature vectors are
/// platform-identical.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Character n-gram counts (orders `n_min..=n_max`) hashed into `dim`
/// buckets by FNV-1a 64 of the n-gram's UTF-8 bytes, then L2-normalized.
/// Empty text maps to the zero vector. `dim` must be at least 64.
pub fn char_ngram_features(text: &str, n_min: usize, n_max: usize, dim: usize) -> Vector {
    assert!(dim >= 64, "feature dimension must be at least 64");
    assert!(n_min >= 1 && n_min <= n_max);
    let chars: Vec<char> = text.chars().collect();
    let mut counts = vec![0.0f64; dim];
    let mut buf = String::new();
    for n in n_min..=n_max {
        if chars.len() < n {
            break;
        }
        for window in chars.windows(n) {
            buf.clear();
            buf.extend(window.iter());
            let bucket = (fnv1a(buf.as_bytes()) % dim as u64) as usize;
            counts[bucket] += 1.0;
        }
    }
    let norm: f64 = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in &mut counts {
            *c /= norm;
        }
    }
    Vector::new(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_zero_vector() {
        let v = char_ngram_features("", 1, 4, 64);
        assert!(v.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identical_strings_identical_vectors() {
        let a = char_ngram_features("the same text", 1, 4, 128);
        let b = char_ngram_features("the same text", 1, 4, 128);
        assert_eq!(a, b);
    }

    #[test]
    fn matches_hand_enumerated_buckets() {
        // "ab" with n = 1..2 produces exactly the grams {a, b, ab}, each
        // once; their buckets get 1/sqrt(3) after normalization.
        let dim = 64;
        let v = char_ngram_features("ab", 1, 2, dim);
        let expected_buckets: Vec<usize> = ["a", "b", "ab"]
            .iter()
            .map(|g| (fnv1a(g.as_bytes()) % dim as u64) as usize)
            .collect();
        let weight = 1.0 / 3.0f64.sqrt();
        for (i, &x) in v.as_slice().iter().enumerate() {
            let hits = expected_buckets.iter().filter(|&&b| b == i).count() as f64;
            assert!((x - hits * weight / 1.0).abs() < 1e-12, "bucket {i}");
        }
    }

    #[test]
    fn unit_norm_for_nonempty_text() {
        let v = char_ngram_features("normalize me", 1, 4, 256);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }
}

//! Sparse autoencoder over residual activations.
//!
//! The encoder maps an activation `z` in R^d to nonnegative latents
//! `x = relu((z - b_dec) W_enc + b_enc)` in R^m; the decoder reconstructs
//! `z* = x W_dec + b_dec`. The latent space is overcomplete (`m >= 2d`
//! enforced here) and decoder rows are kept at unit norm during training so
//! the L1 sparsity penalty cannot be gamed by shrinking latents into the
//! decoder scale.

pub(crate) mod file;
pub(crate) mod train;

pub use file::{load_sae, save_sae};
pub use train::{loss_and_gradients, train_sae, SaeEpochStats, SaeGradients, SaeTrainConfig};

use crate::error::{Error, Result};
use crate::numerics::{relu, Matrix, Vector};

/// Encoder/decoder weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct SaeParams {
    d: usize,
    m: usize,
    pub w_enc: Matrix,
    pub b_enc: Vector,
    pub w_dec: Matrix,
    pub b_dec: Vector,
}

impl SaeParams {
    /// Validates shapes and the overcompleteness requirement `m >= 2d`.
    pub fn new(w_enc: Matrix, b_enc: Vector, w_dec: Matrix, b_dec: Vector) -> Result<SaeParams> {
        let d = w_enc.rows();
        let m = w_enc.cols();
        if m < 2 * d {
            return Err(Error::InvalidArg(format!(
                "latent width m = {m} must be at least 2d = {}",
                2 * d
            )));
        }
        if b_enc.len() != m || w_dec.rows() != m || w_dec.cols() != d || b_dec.len() != d {
            return Err(Error::DimMismatch {
                op: "SaeParams::new",
                expected: format!("W_enc {d}x{m}, b_enc {m}, W_dec {m}x{d}, b_dec {d}"),
                got: format!(
                    "b_enc {}, W_dec {}x{}, b_dec {}",
                    b_enc.len(),
                    w_dec.rows(),
                    w_dec.cols(),
                    b_dec.len()
                ),
            });
        }
        Ok(SaeParams {
            d,
            m,
            w_enc,
            b_enc,
            w_dec,
            b_dec,
        })
    }

    /// Input width.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Latent width.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Nonnegative latents for one activation vector.
    pub fn encode(&self, z: &Vector) -> Result<SparseLatents> {
        if z.len() != self.d {
            return Err(Error::DimMismatch {
                op: "SaeParams::encode",
                expected: format!("activation of length {}", self.d),
                got: format!("length {}", z.len()),
            });
        }
        let centered = z.sub(&self.b_dec);
        let mut pre = self.w_enc.vec_mul(&centered)?;
        for (p, b) in pre.as_mut_slice().iter_mut().zip(self.b_enc.as_slice()) {
            *p += b;
        }
        Ok(SparseLatents::from_values(relu(&pre)))
    }

    /// Reconstruction `x W_dec + b_dec`.
    pub fn decode(&self, x: &SparseLatents) -> Result<Vector> {
        if x.values.len() != self.m {
            return Err(Error::DimMismatch {
                op: "SaeParams::decode",
                expected: format!("latents of length {}", self.m),
                got: format!("length {}", x.values.len()),
            });
        }
        let mut out = self.w_dec.vec_mul(&x.values)?;
        for (o, b) in out.as_mut_slice().iter_mut().zip(self.b_dec.as_slice()) {
            *o += b;
        }
        Ok(out)
    }

    /// Flatten all parameters into one vector (W_enc, b_enc, W_dec, b_dec).
    /// Used for gradient checking.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat =
            Vec::with_capacity(self.d * self.m + self.m + self.m * self.d + self.d);
        flat.extend_from_slice(self.w_enc.as_slice());
        flat.extend_from_slice(self.b_enc.as_slice());
        flat.extend_from_slice(self.w_dec.as_slice());
        flat.extend_from_slice(self.b_dec.as_slice());
        flat
    }

    /// Inverse of [`SaeParams::to_flat`].
    pub fn from_flat(d: usize, m: usize, flat: &[f64]) -> Result<SaeParams> {
        let expected = d * m + m + m * d + d;
        if flat.len() != expected {
            return Err(Error::DimMismatch {
                op: "SaeParams::from_flat",
                expected: format!("{expected} values"),
                got: format!("{} values", flat.len()),
            });
        }
        let mut offset = 0;
        let w_enc = Matrix::from_vec(d, m, flat[offset..offset + d * m].to_vec())?;
        offset += d * m;
        let b_enc = Vector::new(flat[offset..offset + m].to_vec());
        offset += m;
        let w_dec = Matrix::from_vec(m, d, flat[offset..offset + m * d].to_vec())?;
        offset += m * d;
        let b_dec = Vector::new(flat[offset..].to_vec());
        SaeParams::new(w_enc, b_enc, w_dec, b_dec)
    }
}

/// ReLU-encoded latents plus the indices that fired.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLatents {
    pub values: Vector,
    pub active: Vec<usize>,
}

impl SparseLatents {
    /// Wrap a latent vector, deriving the active set `{ i : values[i] > 0 }`.
    pub fn from_values(values: Vector) -> SparseLatents {
        let active = values
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect();
        SparseLatents { values, active }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use approx::assert_relative_eq;

    fn hand_sae() -> SaeParams {
        // d = 2, m = 4.
        let w_enc = Matrix::from_rows(&[vec![1.0, 0.0, -1.0, 0.0], vec![0.0, 1.0, 0.0, -1.0]])
            .unwrap();
        let w_dec = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![-1.0, 2.0],
        ])
        .unwrap();
        SaeParams::new(w_enc, Vector::zeros(4), w_dec, Vector::zeros(2)).unwrap()
    }

    #[test]
    fn encode_hand_case() {
        let sae = hand_sae();
        let x = sae.encode(&Vector::new(vec![3.0, -2.0])).unwrap();
        assert_eq!(x.values.as_slice(), &[3.0, 0.0, 0.0, 2.0]);
        assert_eq!(x.active, vec![0, 3]);
    }

    #[test]
    fn encode_at_decoder_bias_is_zero() {
        let w_enc = Matrix::from_rows(&[vec![1.0, 0.0, -1.0, 0.5], vec![0.0, 1.0, 0.0, -1.0]])
            .unwrap();
        let w_dec = Matrix::zeros(4, 2);
        let b_dec = Vector::new(vec![0.7, -0.3]);
        let sae = SaeParams::new(w_enc, Vector::zeros(4), w_dec, b_dec.clone()).unwrap();
        let x = sae.encode(&b_dec).unwrap();
        assert_eq!(x.values.as_slice(), &[0.0, 0.0, 0.0, 0.0]);
        assert!(x.active.is_empty());
    }

    #[test]
    fn encode_matches_naive_loop() {
        let mut rng = Rng::new(88);
        let d = 8;
        let m = 32;
        let w_enc = Matrix::from_vec(d, m, (0..d * m).map(|_| rng.normal()).collect()).unwrap();
        let b_enc = Vector::new((0..m).map(|_| rng.normal()).collect());
        let w_dec = Matrix::from_vec(m, d, (0..m * d).map(|_| rng.normal()).collect()).unwrap();
        let b_dec = Vector::new((0..d).map(|_| rng.normal()).collect());
        let sae = SaeParams::new(w_enc, b_enc, w_dec, b_dec).unwrap();
        let z = Vector::new((0..d).map(|_| rng.normal()).collect());

        let got = sae.encode(&z).unwrap();
        for i in 0..m {
            let mut acc = sae.b_enc[i];
            for j in 0..d {
                acc += (z[j] - sae.b_dec[j]) * sae.w_enc.get(j, i);
            }
            assert_relative_eq!(got.values[i], acc.max(0.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn decode_zero_latents_is_bias() {
        let mut sae = hand_sae();
        sae.b_dec = Vector::new(vec![0.25, -0.5]);
        let out = sae
            .decode(&SparseLatents::from_values(Vector::zeros(4)))
            .unwrap();
        assert_eq!(out.as_slice(), &[0.25, -0.5]);
    }

    #[test]
    fn decode_one_hot_is_decoder_row() {
        let sae = hand_sae();
        let mut values = Vector::zeros(4);
        values[2] = 1.0;
        let out = sae.decode(&SparseLatents::from_values(values)).unwrap();
        assert_eq!(out.as_slice(), sae.w_dec.row(2));
    }

    #[test]
    fn decode_matches_naive_loop() {
        let mut rng = Rng::new(3);
        let d = 8;
        let m = 32;
        let w_enc = Matrix::from_vec(d, m, (0..d * m).map(|_| rng.normal()).collect()).unwrap();
        let w_dec = Matrix::from_vec(m, d, (0..m * d).map(|_| rng.normal()).collect()).unwrap();
        let b_dec = Vector::new((0..d).map(|_| rng.normal()).collect());
        let sae = SaeParams::new(w_enc, Vector::zeros(m), w_dec, b_dec).unwrap();
        let x = SparseLatents::from_values(Vector::new(
            (0..m).map(|_| rng.normal().max(0.0)).collect(),
        ));
        let got = sae.decode(&x).unwrap();
        for j in 0..d {
            let mut acc = sae.b_dec[j];
            for i in 0..m {
                acc += x.values[i] * sae.w_dec.get(i, j);
            }
            assert_relative_eq!(got[j], acc, max_relative = 1e-12);
        }
    }

    #[test]
    fn encode_rejects_wrong_width() {
        let sae = hand_sae();
        assert!(sae.encode(&Vector::zeros(3)).is_err());
        assert!(sae
            .decode(&SparseLatents::from_values(Vector::zeros(5)))
            .is_err());
    }

    #[test]
    fn undercomplete_rejected() {
        let w_enc = Matrix::zeros(4, 6);
        let err = SaeParams::new(w_enc, Vector::zeros(6), Matrix::zeros(6, 4), Vector::zeros(4))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidArg(_)));
    }

    #[test]
    fn flat_round_trip() {
        let sae = hand_sae();
        let flat = sae.to_flat();
        let back = SaeParams::from_flat(2, 4, &flat).unwrap();
        assert_eq!(sae, back);
    }
}

//! Row-major `f64` matrices and vectors sized for desk-scale experiments.

use crate::error::{Error, Result};

/// Dense row-major matrix of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a flat row-major buffer; rejects length or finiteness violations.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                op: "Matrix::from_vec",
                expected: format!("{} values", rows * cols),
                got: format!("{} values", data.len()),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Matrix::from_vec"));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from nested rows; rejects ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimMismatch {
                    op: "Matrix::from_rows",
                    expected: format!("{c} columns"),
                    got: format!("{} columns", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    /// Borrow one row as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy one row out as a `Vector`.
    pub fn row_vector(&self, r: usize) -> Vector {
        Vector::new(self.row(r).to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `row · self`, treating `row` as a 1 x rows vector. Cache-friendly over
    /// the matrix rows.
    pub fn vec_mul(&self, row: &Vector) -> Result<Vector> {
        if row.len() != self.rows {
            return Err(Error::DimMismatch {
                op: "Matrix::vec_mul",
                expected: format!("vector of length {}", self.rows),
                got: format!("length {}", row.len()),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (k, &x) in row.as_slice().iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let mrow = self.row(k);
            for (o, &w) in out.iter_mut().zip(mrow) {
                *o += x * w;
            }
        }
        Ok(Vector::new(out))
    }
}

/// Standard matrix product; dimensions checked, inner loop over `b` rows.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimMismatch {
            op: "matmul",
            expected: format!("lhs cols == rhs rows ({} x {})", a.rows, a.cols),
            got: format!("rhs {} x {}", b.rows, b.cols),
        });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for r in 0..a.rows {
        let arow = a.row(r);
        let orow = &mut out.data[r * b.cols..(r + 1) * b.cols];
        for (k, &x) in arow.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let brow = b.row(k);
            for (o, &w) in orow.iter_mut().zip(brow) {
                *o += x * w;
            }
        }
    }
    debug_assert!(out.data.iter().all(|v| v.is_finite()));
    Ok(out)
}

/// Dense vector of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Vector {
        Vector { data }
    }

    pub fn zeros(len: usize) -> Vector {
        Vector {
            data: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector::new(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector::new(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector::new(self.data.iter().map(|v| v * factor).collect())
    }

    /// In-place `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &Vector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit-length copy; zero vectors are returned unchanged.
    pub fn normalized(&self) -> Vector {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / n)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(data: Vec<f64>) -> Vector {
        Vector::new(data)
    }
}

/// Elementwise `max(0, v)`.
pub fn relu(v: &Vector) -> Vector {
    Vector::new(v.as_slice().iter().map(|&x| x.max(0.0)).collect())
}

/// Numerically stable softmax (max subtraction); sums to 1 within 1e-12.
pub fn softmax(v: &Vector) -> Vector {
    debug_assert!(!v.is_empty());
    let max = v.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.as_slice().iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Vector::new(exps.into_iter().map(|e| e / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn matmul_identity() {
        let i2 = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(matmul(&i2, &a).unwrap(), a);
    }

    #[test]
    fn matmul_projector() {
        let p = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let out = matmul(&p, &b).unwrap();
        let want = Matrix::from_rows(&[vec![5.0, 6.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(out, want);
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut rng = crate::numerics::Rng::new(0x11);
        let a = Matrix::from_vec(3, 4, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let b = Matrix::from_vec(4, 2, (0..8).map(|_| rng.normal()).collect()).unwrap();
        let out = matmul(&a, &b).unwrap();
        // Independent naive-loop oracle.
        for r in 0..3 {
            for c in 0..2 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += a.get(r, k) * b.get(k, c);
                }
                assert_relative_eq!(out.get(r, c), acc, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        let err = matmul(&a, &b).unwrap_err();
        assert!(err.to_string().contains("matmul"));
    }

    #[test]
    fn relu_basic_cases() {
        let v = Vector::new(vec![1.0, -2.0, 0.0]);
        assert_eq!(relu(&v).as_slice(), &[1.0, 0.0, 0.0]);
        let all_neg = Vector::new(vec![-1.0, -0.5, -3.0]);
        assert_eq!(relu(&all_neg).as_slice(), &[0.0, 0.0, 0.0]);
        let mixed = Vector::new(vec![0.5, -0.5, 3.25]);
        assert_eq!(relu(&mixed).as_slice(), &[0.5, 0.0, 3.25]);
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let v = softmax(&Vector::new(vec![0.0, 0.0]));
        assert_eq!(v.as_slice(), &[0.5, 0.5]);

        let big = softmax(&Vector::new(vec![1000.0, 0.0]));
        assert!(big[0] > 1.0 - 1e-12);
        assert!(big[1] < 1e-12);
        assert!(big.is_finite());
    }

    #[test]
    fn softmax_matches_high_precision_reference() {
        // exp(-2), exp(-1), exp(0) over their sum, evaluated with 50-digit
        // arithmetic and rounded to f64.
        let expect = [
            0.09003057317038046,
            0.24472847105479764,
            0.6652409557748219,
        ];
        let got = softmax(&Vector::new(vec![1.0, 2.0, 3.0]));
        for (g, e) in got.as_slice().iter().zip(&expect) {
            assert_relative_eq!(g, e, max_relative = 1e-15);
        }
        let sum: f64 = got.as_slice().iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn matmul_associative(seed in 0u64..1_000) {
            let mut rng = crate::numerics::Rng::new(seed);
            let a = Matrix::from_vec(3, 4, (0..12).map(|_| rng.normal()).collect()).unwrap();
            let b = Matrix::from_vec(4, 5, (0..20).map(|_| rng.normal()).collect()).unwrap();
            let c = Matrix::from_vec(5, 2, (0..10).map(|_| rng.normal()).collect()).unwrap();
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (l, r) in left.as_slice().iter().zip(right.as_slice()) {
                prop_assert!((l - r).abs() <= 1e-9 * l.abs().max(r.abs()).max(1.0));
            }
        }

        #[test]
        fn relu_idempotent(values in proptest::collection::vec(-100.0f64..100.0, 1..32)) {
            let v = Vector::new(values);
            let once = relu(&v);
            let twice = relu(&once);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn softmax_shift_invariant(
            values in proptest::collection::vec(-50.0f64..50.0, 1..16),
            shift in -100.0f64..100.0,
        ) {
            let v = Vector::new(values.clone());
            let shifted = Vector::new(values.iter().map(|x| x + shift).collect());
            let a = softmax(&v);
            let b = softmax(&shifted);
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

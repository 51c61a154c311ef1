//! Row-major dense matrices with the few operations the operator code needs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense real matrix; serialized as an array of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.data.chunks(m.cols.max(1)).map(<[f64]>::to_vec).collect()
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Empty("matrix"));
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::LengthMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    /// `u v^T`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A^T y`.
    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "tmatvec dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `max |A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        self.pair_defect(|a, b| (a - b).abs())
    }

    /// `max |A_ij + A_ji|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        self.pair_defect(|a, b| (a + b).abs())
    }

    fn pair_defect(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        assert!(self.is_square(), "square matrix required");
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max(f(self.get(i, j), self.get(j, i)));
            }
        }
        worst
    }

    /// The diagonal, if every off-diagonal entry is exactly zero.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        if !self.is_square() {
            return None;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && self.get(i, j) != 0.0 {
                    return None;
                }
            }
        }
        Some((0..self.rows).map(|i| self.get(i, i)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.to_nalgebra()
            .singular_values()
            .iter()
            .fold(0.0, |m, &s| m.max(s))
    }

    /// Norm on `L^2(mu)`: the largest singular value of `D^{1/2} A D^{-1/2}`
    /// with `D = diag(mu)`.
    pub fn weighted_spectral_norm(&self, mu: &[f64]) -> f64 {
        assert!(self.is_square() && mu.len() == self.rows);
        let s: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
        Self::from_fn(self.rows, self.cols, |i, j| s[i] * self.get(i, j) / s[j]).spectral_norm()
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .to_nalgebra()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_rows_round_trip() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0]]");
        let back: DenseMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<DenseMatrix>("[[1.0],[2.0,3.0]]").is_err());
    }

    #[test]
    fn products_and_defects() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 2.0], vec![-2.0, 0.0]]).unwrap();
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![2.0, -2.0]);
        assert_eq!(m.tmatvec(&[1.0, 1.0]), vec![-2.0, 2.0]);
        assert_eq!(m.antisymmetry_defect(), 0.0);
        assert_eq!(m.symmetry_defect(), 4.0);
        assert!((m.spectral_norm() - 2.0).abs() < 1e-12);
        assert_eq!(
            DenseMatrix::diagonal(&[3.0, -1.0]).as_diagonal(),
            Some(vec![3.0, -1.0])
        );
        assert_eq!(m.as_diagonal(), None);
    }

    #[test]
    fn weighted_norm_of_diagonal_ignores_weights() {
        let d = DenseMatrix::diagonal(&[0.5, -4.0, 2.0]);
        assert!((d.weighted_spectral_norm(&[0.1, 3.0, 0.7]) - 4.0).abs() < 1e-12);
    }
}

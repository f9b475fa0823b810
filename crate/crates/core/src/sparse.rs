//! Minimal compressed sparse row storage for TF-IDF matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unsorted (index, value) pairs; duplicate indices are summed.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut v = SparseVector::zeros(dim);
        for (i, x) in pairs {
            assert!(i < dim, "index {i} out of range for dim {dim}");
            if v.indices.last() == Some(&i) {
                *v.values.last_mut().unwrap() += x;
            } else {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &x) in self.indices.iter().zip(&self.values) {
            out[i] = x;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(cols: usize, rows: &[SparseVector]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in rows {
            if r.dim != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.dim,
                });
            }
            indices.extend_from_slice(&r.indices);
            values.extend_from_slice(&r.values);
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            rows: rows.len(),
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows: Vec<SparseVector> = (0..m.nrows())
            .map(|i| {
                let pairs = (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect();
                SparseVector::from_pairs(m.ncols(), pairs)
            })
            .collect();
        CsrMatrix::from_rows(m.ncols(), &rows).expect("consistent dims")
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn row_vector(&self, i: usize) -> SparseVector {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        SparseVector {
            dim: self.cols,
            indices: self.indices[s..e].to_vec(),
            values: self.values[s..e].to_vec(),
        }
    }

    /// `self * x` for dense `x` (cols × l).
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.cols);
        let l = x.ncols();
        let mut out = DMatrix::zeros(self.rows, l);
        for i in 0..self.rows {
            for (j, a) in self.row(i) {
                for c in 0..l {
                    out[(i, c)] += a * x[(j, c)];
                }
            }
        }
        out
    }

    /// `selfᵀ * x` for dense `x` (rows × l).
    pub fn transpose_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.rows);
        let l = x.ncols();
        let mut out = DMatrix::zeros(self.cols, l);
        for i in 0..self.rows {
            for (j, a) in self.row(i) {
                for c in 0..l {
                    out[(j, c)] += a * x[(i, c)];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, a) in self.row(i) {
                out[(i, j)] = a;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

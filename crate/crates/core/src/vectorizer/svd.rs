//! Truncated SVD via a randomized range finder with power iterations.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvdOptions {
    pub oversampling: usize,
    /// Power iterations always performed.
    pub power_iterations: usize,
    /// Extra iterations continue until the top-k Ritz values move by less
    /// than `tolerance` (relative), up to this total.
    pub max_power_iterations: usize,
    pub tolerance: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversampling: 10,
            power_iterations: 4,
            max_power_iterations: 16,
            tolerance: 1e-10,
        }
    }
}

impl SvdOptions {
    /// Exactly `power_iterations` iterations, no convergence check.
    pub fn fixed(oversampling: usize, power_iterations: usize) -> Self {
        SvdOptions {
            oversampling,
            power_iterations,
            max_power_iterations: power_iterations,
            tolerance: 0.0,
        }
    }
}

/// Top-k square roots of the eigenvalues of `zᵀz`, descending.
fn ritz_values(z: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let gram = z.transpose() * z;
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&l: &f64| l.max(0.0).sqrt())
        .collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals.truncate(k);
    vals
}

fn max_relative_change(prev: &[f64], cur: &[f64]) -> f64 {
    prev.iter()
        .zip(cur)
        .map(|(&p, &c)| if c > 0.0 { (c - p).abs() / c } else { (c - p).abs() })
        .fold(0.0, f64::max)
}

/// Top-k right singular vectors (as rows) and singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    pub k: usize,
    pub n_features: usize,
    /// Row-major, `k × n_features`.
    pub components: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub seed: u64,
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Fits the top `k` singular triplets of `matrix`. Deterministic in `seed`.
pub fn fit_truncated_svd(matrix: &CsrMatrix, k: usize, seed: u64, opts: SvdOptions) -> Result<SvdModel> {
    let (n, d) = (matrix.nrows(), matrix.ncols());
    let max_k = n.min(d);
    if k == 0 || k > max_k {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={max_k}"
        )));
    }
    if matrix.is_all_zero() {
        return Err(Error::Empty("matrix is all zero".into()));
    }
    let sketch = (k + opts.oversampling).min(max_k);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(d, sketch, |_, _| StandardNormal.sample(&mut rng));

    let max_iters = opts.max_power_iterations.max(opts.power_iterations);
    let mut q = orthonormal_basis(matrix.mul_dense(&omega));
    let mut done = 0;
    let mut prev: Option<Vec<f64>> = None;
    // Aᵀ Q for the current basis, which is Bᵀ once iteration stops.
    let at_q = loop {
        let at_q = matrix.transpose_mul_dense(&q);
        if done >= max_iters {
            break at_q;
        }
        if done >= opts.power_iterations {
            if opts.tolerance <= 0.0 {
                break at_q;
            }
            let ritz = ritz_values(&at_q, k);
            if prev
                .as_deref()
                .is_some_and(|p| max_relative_change(p, &ritz) < opts.tolerance)
            {
                break at_q;
            }
            prev = Some(ritz);
        }
        let z = orthonormal_basis(at_q);
        q = orthonormal_basis(matrix.mul_dense(&z));
        done += 1;
    };

    // B = Qᵀ A, sketch × d.
    let b = at_q.transpose();
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let mut components = Vec::with_capacity(k * d);
    let mut singular_values = Vec::with_capacity(k);
    for &r in order.iter().take(k) {
        singular_values.push(svd.singular_values[r]);
        let row: Vec<f64> = v_t.row(r).iter().copied().collect();
        // Sign convention: the largest-magnitude entry is positive.
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(row.into_iter().map(|x| x * sign));
    }
    Ok(SvdModel {
        k,
        n_features: d,
        components,
        singular_values,
        seed,
    })
}

impl SvdModel {
    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c * self.n_features..(c + 1) * self.n_features]
    }

    /// Projects `v` onto the components.
    pub fn reduce(&self, v: &SparseVector) -> Result<Vec<f64>> {
        if v.dim != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: v.dim,
            });
        }
        let mut out = vec![0.0; self.k];
        for (j, x) in v.iter() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.components[c * self.n_features + j] * x;
            }
        }
        Ok(out)
    }

    pub fn reduce_matrix(&self, m: &CsrMatrix) -> Result<Vec<Vec<f64>>> {
        (0..m.nrows()).map(|i| self.reduce(&m.row_vector(i))).collect()
    }

    /// `‖A − A Vᵀ V‖_F` for the fitted components `V`.
    pub fn residual(&self, m: &CsrMatrix) -> f64 {
        let a = m.to_dense();
        let v = DMatrix::from_row_slice(self.k, self.n_features, &self.components);
        let proj = &a * v.transpose() * &v;
        (a - proj).norm()
    }
}

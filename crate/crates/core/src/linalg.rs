//! Small dense and sparse helpers shared by the operator and spectral modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Matrices larger than this use sparse storage paths and iterative solvers.
pub const DENSE_LIMIT: usize = 4096;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(col, value)` lists; columns are sorted per row.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(rows)
    }

    /// `D^{1/2} A D^{-1/2}`.
    pub fn similarity(&self, measure: &[f64]) -> Self {
        let sq: Vec<f64> = measure.iter().map(|m| m.sqrt()).collect();
        let rows = (0..self.n).map(|i| self.row(i).map(|(j, v)| (j, v * sq[i] / sq[j])).collect()).collect();
        Self::from_rows(rows)
    }

    /// `(A + Aᵀ)/2` or `(A − Aᵀ)/2`.
    pub fn symmetric_part(&self, skew: bool) -> Self {
        let t = self.transpose();
        let sign = if skew { -1.0 } else { 1.0 };
        let rows = (0..self.n)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = self.row(i).map(|(j, v)| (j, 0.5 * v)).collect();
                for (j, v) in t.row(i) {
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += sign * 0.5 * v,
                        None => row.push((j, sign * 0.5 * v)),
                    }
                }
                row
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Smallest,
    Largest,
}

/// Extreme eigenpair of a dense symmetric matrix.
pub fn dense_symmetric_extreme(m: &DMatrix<f64>, end: End) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let pick = (0..eig.eigenvalues.len())
        .reduce(|a, b| {
            let better = match end {
                End::Smallest => eig.eigenvalues[b] < eig.eigenvalues[a],
                End::Largest => eig.eigenvalues[b] > eig.eigenvalues[a],
            };
            if better {
                b
            } else {
                a
            }
        })
        .expect("non-empty matrix");
    (eig.eigenvalues[pick], eig.eigenvectors.column(pick).into_owned())
}

/// Lanczos with full reorthogonalization for one extreme eigenpair of a
/// symmetric operator given by its matrix-vector product.
pub fn lanczos_extreme(
    n: usize,
    matvec: impl Fn(&[f64], &mut [f64]),
    end: End,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("empty operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut q);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let steps = max_iter.min(n);
    for k in 0..steps {
        matvec(&basis[k], &mut w);
        let alpha = dot(&w, &basis[k]);
        alphas.push(alpha);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let beta = dot(&w, &w).sqrt();

        let m = alphas.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let (theta, s) = dense_symmetric_extreme(&t, end);
        let scale = alphas.iter().chain(betas.iter()).fold(1.0f64, |a, v| a.max(v.abs()));
        let converged = beta * s[m - 1].abs() <= tol * scale || beta <= tol * scale || m == n;
        if converged || k + 1 == steps {
            let mut v = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                axpy(s[i], b, &mut v);
            }
            normalize(&mut v);
            if !converged {
                return Err(Error::NoConvergence(format!(
                    "Lanczos residual {:e} after {} steps",
                    beta * s[m - 1].abs(),
                    m
                )));
            }
            return Ok((theta, v));
        }
        betas.push(beta);
        let next: Vec<f64> = w.iter().map(|x| x / beta).collect();
        basis.push(next);
    }
    unreachable!("loop returns on its last step")
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Fixed 17-significant-digit rendering used by every text artifact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

//! Minimal compressed-sparse-row matrix over `Complex64`.
//!
//! Only the handful of kernels the simulator needs: assembly from triplets,
//! products with vectors and dense matrices, sparse products, adjoint and
//! Kronecker products.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Assemble from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that sum to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indptr[r + 1] += 1;
                indices.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self { nrows, ncols, indptr, indices, values };
        m.prune();
        m
    }

    pub fn from_dense(dense: &DMatrix<C64>) -> Self {
        let mut t = Vec::new();
        for j in 0..dense.ncols() {
            for i in 0..dense.nrows() {
                let v = dense[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dense.nrows(), dense.ncols(), t)
    }

    fn prune(&mut self) {
        let zero = C64::new(0.0, 0.0);
        if self.values.iter().all(|&v| v != zero) {
            return;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != zero {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let t = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m.prune();
        m
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self.iter().chain(other.iter().map(|(r, c, v)| (r, c, s * v))).collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut touched = Vec::new();
        let mut mark = vec![false; other.ncols];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
                mark[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// `self ⊗ other` in the usual row-major block convention.
    pub fn kron(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                t.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, t)
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *out = s;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `A · M` for dense `M`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(self.ncols, m.nrows());
        let mut out = DMatrix::zeros(self.nrows, m.ncols());
        for j in 0..m.ncols() {
            let col = m.column(j);
            for r in 0..self.nrows {
                let mut s = C64::new(0.0, 0.0);
                for k in self.indptr[r]..self.indptr[r + 1] {
                    s += self.values[k] * col[self.indices[k]];
                }
                out[(r, j)] = s;
            }
        }
        out
    }

    /// `M · A` for dense `M`.
    pub fn dense_mul(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(m.ncols(), self.nrows);
        let mut out = DMatrix::zeros(m.nrows(), self.ncols);
        for k in 0..self.nrows {
            let src = m.column(k).clone_owned();
            for p in self.indptr[k]..self.indptr[k + 1] {
                let v = self.values[p];
                let mut dst = out.column_mut(self.indices[p]);
                dst.axpy(v, &src, C64::new(1.0, 0.0));
            }
        }
        out
    }

    /// Keep only rows and columns listed in `keep` (in that order).
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols.max(self.nrows)];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut t = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_r);
            for (&c, &v) in cols.iter().zip(vals) {
                if map[c] != usize::MAX {
                    t.push((new_r, map[c], v));
                }
            }
        }
        Self::from_triplets(keep.len(), keep.len(), t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 1, c(1.0, 2.0)), (2, 0, c(-1.0, 0.5)), (1, 1, c(3.0, 0.0)), (0, 1, c(1.0, 0.0))],
        )
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = sample();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), c(2.0, 2.0));
        assert_eq!(m.get(2, 2), c(0.0, 0.0));
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let b = a.adjoint().add_scaled(&CsrMatrix::identity(3), c(0.0, 1.0));
        let da = a.to_dense();
        let db = b.to_dense();
        assert!((a.matmul(&b).to_dense() - &da * &db).norm() < 1e-14);
        assert!((a.mul_dense(&db) - &da * &db).norm() < 1e-14);
        assert!((b.dense_mul(&da) - &da * &db).norm() < 1e-14);
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let y = a.mul_vec(&x);
        let dy = &da * nalgebra::DVector::from_vec(x);
        for (u, v) in y.iter().zip(dy.iter()) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn kron_block_layout() {
        let a = sample();
        let i2 = CsrMatrix::identity(2);
        let k = a.kron(&i2);
        assert_eq!(k.nrows(), 6);
        assert_eq!(k.get(0, 2), a.get(0, 1));
        assert_eq!(k.get(1, 3), a.get(0, 1));
        assert_eq!(k.get(0, 3), c(0.0, 0.0));
    }

    #[test]
    fn adjoint_is_involution() {
        let a = sample();
        assert_eq!(a.adjoint().adjoint(), a);
    }
}

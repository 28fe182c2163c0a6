//! Compressed sparse column matrices.
//!
//! The storage is plain CSC: `col_ptr[j]..col_ptr[j+1]` indexes the entries of
//! column `j`, with row indices sorted strictly ascending and no duplicates.
//! All precision matrices in the crate are built on this type.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from triplets, summing duplicates. Entries that sum to exactly
    /// zero are kept so the sparsity pattern is a function of the inputs, not
    /// of cancellation.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            per_col[j].push((i, v));
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        for col in per_col.iter_mut() {
            col.sort_unstable_by_key(|&(i, _)| i);
            let mut last: Option<usize> = None;
            for &(i, v) in col.iter() {
                if last == Some(i) {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(i);
                    values.push(v);
                    last = Some(i);
                }
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(col_ptr.len(), ncols + 1);
        debug_assert_eq!(row_idx.len(), values.len());
        debug_assert_eq!(*col_ptr.last().unwrap(), row_idx.len());
        SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        SparseMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Entries of column `j` as `(row, value)` pairs, rows ascending.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        range
            .clone()
            .map(move |p| (self.row_idx[p], self.values[p]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        match self.row_idx[lo..hi].binary_search(&i) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut count = vec![0usize; self.nrows + 1];
        for &i in &self.row_idx {
            count[i + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let col_ptr = count.clone();
        let mut cursor = count;
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                let q = cursor[i];
                row_idx[q] = j;
                values[q] = self.values[p];
                cursor[i] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Exact structural and numerical symmetry check.
    pub fn is_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let t = self.transpose();
        self.col_ptr == t.col_ptr && self.row_idx == t.row_idx && self.values == t.values
    }

    /// Mirror the upper triangle (including the diagonal) onto the lower so
    /// the result satisfies `M == M^T` bit for bit. The sparsity pattern must
    /// already be structurally symmetric.
    pub fn symmetrize_from_upper(&self) -> SparseMatrix {
        let mut out = self.clone();
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                if i < j {
                    // copy (i, j) over (j, i)
                    let lo = out.col_ptr[i];
                    let hi = out.col_ptr[i + 1];
                    match out.row_idx[lo..hi].binary_search(&j) {
                        Ok(q) => out.values[lo + q] = self.values[p],
                        Err(_) => panic!("pattern not structurally symmetric at ({j}, {i})"),
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// Row and column scaling: `diag(d) * M * diag(d)`.
    pub fn scale_sym(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.nrows);
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.values[p] *= d[self.row_idx[p]] * d[j];
            }
        }
        out
    }

    /// `M * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.values[p] *= d[j];
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        y
    }

    /// Quadratic form `x^T M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Sparse matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "matmul dimension mismatch");
        let m = self.nrows;
        let n = rhs.ncols;
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        let mut work = vec![0.0f64; m];
        let mut stamp = vec![usize::MAX; m];
        let mut rows_here: Vec<usize> = Vec::new();
        for j in 0..n {
            rows_here.clear();
            for (k, bv) in rhs.col(j) {
                for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                    let i = self.row_idx[p];
                    if stamp[i] != j {
                        stamp[i] = j;
                        work[i] = 0.0;
                        rows_here.push(i);
                    }
                    work[i] += self.values[p] * bv;
                }
            }
            rows_here.sort_unstable();
            for &i in &rows_here {
                row_idx.push(i);
                values.push(work[i]);
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            nrows: m,
            ncols: n,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Entrywise sum; patterns are merged.
    pub fn add(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.nrows, rhs.nrows);
        assert_eq!(self.ncols, rhs.ncols);
        let mut col_ptr = Vec::with_capacity(self.ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..self.ncols {
            let mut a = self.col_ptr[j];
            let mut b = rhs.col_ptr[j];
            let a_end = self.col_ptr[j + 1];
            let b_end = rhs.col_ptr[j + 1];
            while a < a_end || b < b_end {
                let ia = if a < a_end {
                    self.row_idx[a]
                } else {
                    usize::MAX
                };
                let ib = if b < b_end { rhs.row_idx[b] } else { usize::MAX };
                if ia < ib {
                    row_idx.push(ia);
                    values.push(self.values[a]);
                    a += 1;
                } else if ib < ia {
                    row_idx.push(ib);
                    values.push(rhs.values[b]);
                    b += 1;
                } else {
                    row_idx.push(ia);
                    values.push(self.values[a] + rhs.values[b]);
                    a += 1;
                    b += 1;
                }
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Block-diagonal stacking of square or rectangular blocks.
    pub fn block_diag(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let nrows: usize = blocks.iter().map(|b| b.nrows).sum();
        let ncols: usize = blocks.iter().map(|b| b.ncols).sum();
        let nnz: usize = blocks.iter().map(|b| b.nnz()).sum();
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        let mut row_off = 0;
        for b in blocks {
            for j in 0..b.ncols {
                for p in b.col_ptr[j]..b.col_ptr[j + 1] {
                    row_idx.push(b.row_idx[p] + row_off);
                    values.push(b.values[p]);
                }
                col_ptr.push(row_idx.len());
            }
            row_off += b.nrows;
        }
        SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] = v;
        }
        d
    }

    /// Plain-text triplet dump: header `n m nnz`, then one `i j value` line
    /// per entry (0-based).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz()).unwrap();
        for (i, j, v) in self.iter() {
            writeln!(s, "{} {} {:.17e}", i, j, v).unwrap();
        }
        s
    }

    pub fn write_dump(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.dump()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn parse_dump(text: &str) -> Result<SparseMatrix> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty dump".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected `n m nnz` header, got `{header}`"),
            });
        }
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid integer `{s}`"),
            })
        };
        let n = parse_usize(parts[0], 1)?;
        let m = parse_usize(parts[1], 1)?;
        let nnz = parse_usize(parts[2], 1)?;
        let mut triplets = Vec::with_capacity(nnz);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected `i j value`, got `{line}`"),
                });
            }
            let i = parse_usize(parts[0], idx + 1)?;
            let j = parse_usize(parts[1], idx + 1)?;
            let v: f64 = parts[2].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid value `{}`", parts[2]),
            })?;
            triplets.push((i, j, v));
        }
        if triplets.len() != nnz {
            return Err(Error::Parse {
                line: 1,
                message: format!("header says {} entries, found {}", nnz, triplets.len()),
            });
        }
        Ok(SparseMatrix::from_triplets(n, m, &triplets))
    }
}

/// Kronecker product `A (x) B`: entry blocks `(i_a * nrows_b + i_b,
/// j_a * ncols_b + j_b) = A[i_a, j_a] * B[i_b, j_b]`. With A indexing the
/// slow dimension, the flat ordering keeps B's index varying fastest.
pub fn kron(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    let nrows = a.nrows * b.nrows;
    let ncols = a.ncols * b.ncols;
    let nnz = a.nnz() * b.nnz();
    let mut col_ptr = Vec::with_capacity(ncols + 1);
    let mut row_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    col_ptr.push(0);
    for ja in 0..a.ncols {
        for jb in 0..b.ncols {
            for pa in a.col_ptr[ja]..a.col_ptr[ja + 1] {
                let ia = a.row_idx[pa];
                let va = a.values[pa];
                for pb in b.col_ptr[jb]..b.col_ptr[jb + 1] {
                    row_idx.push(ia * b.nrows + b.row_idx[pb]);
                    values.push(va * b.values[pb]);
                }
            }
            col_ptr.push(row_idx.len());
        }
    }
    SparseMatrix {
        nrows,
        ncols,
        col_ptr,
        row_idx,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseMatrix::from_triplets(3, 3, &[(2, 0, 1.0), (0, 0, 2.0), (2, 0, 0.5)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.get(2, 0), 1.5);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 1, 2.0), (1, 0, -1.0), (1, 2, 4.0)]);
        let t = m.transpose();
        assert_eq!(t.nrows(), 3);
        assert_eq!(t.get(1, 0), 2.0);
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn matmul_against_dense() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]);
        let b = SparseMatrix::from_triplets(2, 2, &[(0, 0, -1.0), (1, 0, 4.0), (1, 1, 0.5)]);
        let c = a.matmul(&b);
        // [[1,2],[0,3]] * [[-1,0],[4,0.5]] = [[7,1],[12,1.5]]
        assert_eq!(c.get(0, 0), 7.0);
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 0), 12.0);
        assert_eq!(c.get(1, 1), 1.5);
    }

    #[test]
    fn kron_identity_is_block_diag() {
        let q = SparseMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)]);
        let k = kron(&SparseMatrix::identity(2), &q);
        assert_eq!(k.nrows(), 4);
        assert_eq!(k.get(0, 0), 4.0);
        assert_eq!(k.get(2, 2), 4.0);
        assert_eq!(k.get(3, 2), 2.0);
        assert_eq!(k.get(2, 0), 0.0);
    }

    #[test]
    fn kron_diagonal() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0]);
        let b = SparseMatrix::diagonal(&[3.0]);
        let k = kron(&a, &b);
        assert_eq!(k.to_dense(), vec![vec![3.0, 0.0], vec![0.0, 6.0]]);
    }

    #[test]
    fn kron_matches_dense_definition() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)],
        );
        let b = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)],
        );
        let k = kron(&a, &b);
        let ad = a.to_dense();
        let bd = b.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                let expect = ad[i / 2][j / 2] * bd[i % 2][j % 2];
                assert_eq!(k.get(i, j), expect, "entry ({i}, {j})");
            }
        }
    }

    #[test]
    fn symmetrize_is_exact() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 0.3), (1, 0, 0.3 + 1e-17), (1, 1, 1.0)],
        );
        let s = m.symmetrize_from_upper();
        assert!(s.is_symmetric());
    }

    #[test]
    fn dump_roundtrip() {
        let m = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.25), (2, 1, -0.375)]);
        let parsed = SparseMatrix::parse_dump(&m.dump()).unwrap();
        assert_eq!(parsed, m);
    }

    #[test]
    fn quad_form_matches_dense() {
        let q = SparseMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)]);
        let x = [1.0, -2.0];
        // 4*1 + 2*2*(1*-2) + 3*4 = 4 - 8 + 12 = 8
        assert!((q.quad_form(&x) - 8.0).abs() < 1e-14);
    }
}

//! Sparse Cholesky factorization of symmetric positive definite matrices.
//!
//! The factorization computes `P Q P^T = L L^T` with a fill-reducing
//! permutation `P` found by greedy minimum degree (nodes whose degree exceeds
//! a density threshold are deferred to the end, which keeps near-dense
//! fixed-effect columns from poisoning the ordering). Symbolic analysis —
//! ordering, elimination tree, and the full pattern of `L` — is separated
//! from the numeric pass so that repeated factorizations with the same
//! pattern (optimizer steps, Newton iterations) only pay for the numbers.

use super::matrix::SparseMatrix;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// Relative pivot tolerance: a pivot at or below `PIVOT_TOL * max_diagonal`
/// is treated as a factorization failure rather than silently accepted.
const PIVOT_TOL: f64 = 1e-12;

/// Ordering, elimination tree, and pattern of `L` for a fixed sparsity
/// structure.
#[derive(Debug)]
pub struct SymbolicFactor {
    n: usize,
    /// `perm[k]` = original index of permuted index `k`.
    perm: Vec<usize>,
    /// `iperm[orig]` = permuted index.
    iperm: Vec<usize>,
    /// Column pointers of L (diagonal entry first in each column).
    l_colptr: Vec<usize>,
    /// Row indices of L, ascending within each column.
    l_rowidx: Vec<usize>,
    /// Flattened per-row patterns: columns `j < k` with `L[k, j] != 0`,
    /// ascending (a topological order for the up-looking solve).
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
}

impl SymbolicFactor {
    /// Analyze the pattern of a symmetric matrix.
    pub fn analyze(q: &SparseMatrix) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch {
                expected: q.nrows(),
                got: q.ncols(),
                context: "cholesky requires a square matrix".into(),
            });
        }
        let n = q.nrows();
        let perm = min_degree_ordering(q);
        let mut iperm = vec![0usize; n];
        for (k, &orig) in perm.iter().enumerate() {
            iperm[orig] = k;
        }

        // Permuted upper-triangle column patterns (rows < k per column k).
        let mut upper: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j, _) in q.iter() {
            let pi = iperm[i];
            let pj = iperm[j];
            if pi < pj {
                upper[pj].push(pi);
            }
        }
        for col in upper.iter_mut() {
            col.sort_unstable();
            col.dedup();
        }

        // Elimination tree with path compression.
        let none = usize::MAX;
        let mut parent = vec![none; n];
        let mut ancestor = vec![none; n];
        for k in 0..n {
            for &i in &upper[k] {
                let mut j = i;
                while j != none && j < k {
                    let next = ancestor[j];
                    ancestor[j] = k;
                    if next == none {
                        parent[j] = k;
                        break;
                    }
                    j = next;
                }
            }
        }

        // Row patterns of L via traversal of the elimination tree, then
        // column counts for the CSC pattern of L.
        let mut stamp = vec![none; n];
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut row_cols = Vec::new();
        let mut col_count = vec![1usize; n]; // diagonal
        row_ptr.push(0);
        let mut scratch = Vec::new();
        for k in 0..n {
            stamp[k] = k;
            scratch.clear();
            for &i in &upper[k] {
                let mut j = i;
                while stamp[j] != k {
                    stamp[j] = k;
                    scratch.push(j);
                    j = if parent[j] == none { k } else { parent[j] };
                    if j >= k {
                        break;
                    }
                }
            }
            scratch.sort_unstable();
            for &j in &scratch {
                col_count[j] += 1;
            }
            row_cols.extend_from_slice(&scratch);
            row_ptr.push(row_cols.len());
        }

        let mut l_colptr = Vec::with_capacity(n + 1);
        l_colptr.push(0);
        for k in 0..n {
            l_colptr.push(l_colptr[k] + col_count[k]);
        }
        let nnz = l_colptr[n];
        let mut l_rowidx = vec![0usize; nnz];
        let mut cursor: Vec<usize> = (0..n).map(|k| l_colptr[k] + 1).collect();
        for k in 0..n {
            l_rowidx[l_colptr[k]] = k;
            for &j in &row_cols[row_ptr[k]..row_ptr[k + 1]] {
                l_rowidx[cursor[j]] = k;
                cursor[j] += 1;
            }
        }

        Ok(SymbolicFactor {
            n,
            perm,
            iperm,
            l_colptr,
            l_rowidx,
            row_ptr,
            row_cols,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_nnz(&self) -> usize {
        self.l_rowidx.len()
    }
}

/// Numeric Cholesky factor `P Q P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    symbolic: Arc<SymbolicFactor>,
    l_values: Vec<f64>,
}

/// Factor a symmetric positive definite matrix, analyzing its pattern first.
pub fn cholesky(q: &SparseMatrix) -> Result<CholeskyFactor> {
    let symbolic = Arc::new(SymbolicFactor::analyze(q)?);
    factor_with(&symbolic, q)
}

/// Numeric factorization reusing a previous symbolic analysis. The matrix
/// must have the same (or a subset of the) sparsity pattern that was
/// analyzed.
pub fn factor_with(symbolic: &Arc<SymbolicFactor>, q: &SparseMatrix) -> Result<CholeskyFactor> {
    let s = symbolic.as_ref();
    let n = s.n;
    assert_eq!(q.nrows(), n, "matrix size changed since symbolic analysis");
    let mut l_values = vec![0.0f64; s.l_rowidx.len()];
    let mut cursor: Vec<usize> = (0..n).map(|k| s.l_colptr[k] + 1).collect();
    let mut x = vec![0.0f64; n];

    let max_diag = (0..n).fold(0.0f64, |m, j| m.max(q.get(j, j).abs()));
    let pivot_floor = PIVOT_TOL * max_diag;

    for k in 0..n {
        // Scatter the permuted upper part of column k.
        let orig_col = s.perm[k];
        let mut d = 0.0;
        for (r, v) in q.col(orig_col) {
            let i = s.iperm[r];
            if i < k {
                x[i] = v;
            } else if i == k {
                d = v;
            }
        }
        for &j in &s.row_cols[s.row_ptr[k]..s.row_ptr[k + 1]] {
            let yj = x[j];
            x[j] = 0.0;
            let ljj = l_values[s.l_colptr[j]];
            let lkj = yj / ljj;
            for p in s.l_colptr[j] + 1..cursor[j] {
                x[s.l_rowidx[p]] -= l_values[p] * lkj;
            }
            d -= lkj * lkj;
            debug_assert_eq!(s.l_rowidx[cursor[j]], k);
            l_values[cursor[j]] = lkj;
            cursor[j] += 1;
        }
        if !(d > pivot_floor) {
            // Clear any stale scatter state before reporting.
            return Err(Error::NotPositiveDefinite {
                pivot: s.perm[k],
                value: d,
            });
        }
        l_values[s.l_colptr[k]] = d.sqrt();
    }

    Ok(CholeskyFactor {
        symbolic: Arc::clone(symbolic),
        l_values,
    })
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        self.symbolic.n
    }

    pub fn symbolic(&self) -> &Arc<SymbolicFactor> {
        &self.symbolic
    }

    /// Fill-reducing permutation: `perm[k]` is the original index placed at
    /// permuted position `k`.
    pub fn perm(&self) -> &[usize] {
        &self.symbolic.perm
    }

    /// Diagonal of L (all strictly positive).
    pub fn diag(&self) -> Vec<f64> {
        let s = self.symbolic.as_ref();
        (0..s.n).map(|k| self.l_values[s.l_colptr[k]]).collect()
    }

    /// `log det Q = 2 sum log L_kk`.
    pub fn log_det(&self) -> f64 {
        let s = self.symbolic.as_ref();
        2.0 * (0..s.n)
            .map(|k| self.l_values[s.l_colptr[k]].ln())
            .sum::<f64>()
    }

    /// Solve `Q x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let s = self.symbolic.as_ref();
        if b.len() != s.n {
            return Err(Error::DimensionMismatch {
                expected: s.n,
                got: b.len(),
                context: "cholesky solve right-hand side".into(),
            });
        }
        let mut y: Vec<f64> = (0..s.n).map(|k| b[s.perm[k]]).collect();
        self.forward_in_place(&mut y, 0);
        self.backward_in_place(&mut y);
        let mut x = vec![0.0; s.n];
        for k in 0..s.n {
            x[s.perm[k]] = y[k];
        }
        Ok(x)
    }

    /// Forward substitution `L y = rhs` in permuted coordinates, starting at
    /// column `start` (all earlier entries assumed zero).
    fn forward_in_place(&self, y: &mut [f64], start: usize) {
        let s = self.symbolic.as_ref();
        for j in start..s.n {
            let lo = s.l_colptr[j];
            let hi = s.l_colptr[j + 1];
            let yj = y[j] / self.l_values[lo];
            y[j] = yj;
            if yj != 0.0 {
                for p in lo + 1..hi {
                    y[s.l_rowidx[p]] -= self.l_values[p] * yj;
                }
            }
        }
    }

    /// Back substitution `L^T w = y` in permuted coordinates.
    fn backward_in_place(&self, y: &mut [f64]) {
        let s = self.symbolic.as_ref();
        for j in (0..s.n).rev() {
            let lo = s.l_colptr[j];
            let hi = s.l_colptr[j + 1];
            let mut acc = y[j];
            for p in lo + 1..hi {
                acc -= self.l_values[p] * y[s.l_rowidx[p]];
            }
            y[j] = acc / self.l_values[lo];
        }
    }

    /// Draw `k` GMRF samples `x = mean + P^T L^{-T} z`, `z` standard normal.
    /// Deterministic for a given seed.
    pub fn sample(&self, mean: &[f64], seed: u64, k: usize) -> Vec<Vec<f64>> {
        let s = self.symbolic.as_ref();
        assert_eq!(mean.len(), s.n, "mean length mismatch");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let mut z: Vec<f64> = (0..s.n).map(|_| StandardNormal.sample(&mut rng)).collect();
            self.backward_in_place(&mut z);
            let mut x = mean.to_vec();
            for i in 0..s.n {
                x[s.perm[i]] += z[i];
            }
            out.push(x);
        }
        out
    }

    /// Diagonal of `Q^{-1}` by one solve per column. Quadratic at desk
    /// scale, which is where this engine lives; a Takahashi-style selected
    /// inverse would be the upgrade path if meshes grow.
    pub fn marginal_variances(&self) -> Vec<f64> {
        let s = self.symbolic.as_ref();
        let mut out = vec![0.0; s.n];
        let mut work = vec![0.0f64; s.n];
        for orig in 0..s.n {
            let k = s.iperm[orig];
            work.iter_mut().for_each(|v| *v = 0.0);
            work[k] = 1.0;
            // The forward solve of a unit vector is zero before index k.
            self.forward_in_place(&mut work, k);
            self.backward_in_place(&mut work);
            out[orig] = work[k];
        }
        out
    }

    /// Reconstruct `P Q P^T` from `L L^T`; used by validation tests.
    pub fn reconstruct_permuted(&self) -> SparseMatrix {
        let s = self.symbolic.as_ref();
        let l = SparseMatrix::from_parts(
            s.n,
            s.n,
            s.l_colptr.clone(),
            s.l_rowidx.clone(),
            self.l_values.clone(),
        );
        let lt = l.transpose();
        l.matmul(&lt)
    }
}

/// Greedy minimum-degree ordering with deferral of near-dense nodes.
/// Deterministic: ties break on the lowest node index.
fn min_degree_ordering(q: &SparseMatrix) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::{BinaryHeap, HashSet};

    let n = q.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut adj: Vec<HashSet<u32>> = vec![HashSet::new(); n];
    for (i, j, _) in q.iter() {
        if i != j {
            adj[i].insert(j as u32);
            adj[j].insert(i as u32);
        }
    }

    let dense_threshold = (8.0 * (n as f64).sqrt()).ceil().max(32.0) as usize;
    let mut deferred: Vec<usize> = Vec::new();
    let mut active = vec![true; n];
    for v in 0..n {
        if adj[v].len() >= dense_threshold {
            deferred.push(v);
            active[v] = false;
        }
    }
    for &v in &deferred {
        let neigh: Vec<u32> = adj[v].iter().copied().collect();
        for u in neigh {
            adj[u as usize].remove(&(v as u32));
        }
    }

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    for v in 0..n {
        if active[v] {
            heap.push(Reverse((adj[v].len(), v)));
        }
    }
    let mut perm = Vec::with_capacity(n);
    let mut eliminated = vec![false; n];
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || !active[v] || adj[v].len() != deg {
            continue; // stale heap entry
        }
        eliminated[v] = true;
        perm.push(v);
        let neigh: Vec<u32> = adj[v].iter().copied().collect();
        for &u in &neigh {
            adj[u as usize].remove(&(v as u32));
        }
        for (a_pos, &u) in neigh.iter().enumerate() {
            for &w in &neigh[a_pos + 1..] {
                adj[u as usize].insert(w);
                adj[w as usize].insert(u);
            }
        }
        for &u in &neigh {
            heap.push(Reverse((adj[u as usize].len(), u as usize)));
        }
        adj[v].clear();
    }
    // Dense/deferred nodes go last, in index order.
    perm.extend(deferred);
    debug_assert_eq!(perm.len(), n);
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::matrix::SparseMatrix;

    fn spd_diag() -> SparseMatrix {
        SparseMatrix::diagonal(&[4.0, 9.0])
    }

    fn spd_2x2() -> SparseMatrix {
        SparseMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)])
    }

    /// Random SPD matrix built as A^T A + n I with a fixed congruential
    /// generator, so the oracle tests are reproducible without rand.
    fn random_spd(n: usize, seed: u64) -> SparseMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let mut a = vec![vec![0.0; n]; n];
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v = next();
            }
        }
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut s: f64 = (0..n).map(|k| a[k][i] * a[k][j]).sum();
                if i == j {
                    s += n as f64;
                }
                triplets.push((i, j, s));
            }
        }
        SparseMatrix::from_triplets(n, n, &triplets)
    }

    /// Dense Gaussian elimination oracle.
    fn dense_solve(q: &SparseMatrix, b: &[f64]) -> Vec<f64> {
        let n = q.nrows();
        let mut m = q.to_dense();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
                .unwrap();
            m.swap(col, piv);
            rhs.swap(col, piv);
            let d = m[col][col];
            for r in col + 1..n {
                let f = m[r][col] / d;
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let mut acc = rhs[r];
            for c in r + 1..n {
                acc -= m[r][c] * x[c];
            }
            x[r] = acc / m[r][r];
        }
        x
    }

    #[test]
    fn diagonal_factor() {
        let f = cholesky(&spd_diag()).unwrap();
        let d = f.diag();
        let mut sorted = d.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sorted[0] - 2.0).abs() < 1e-15);
        assert!((sorted[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn hand_factorization_2x2() {
        // With the identity permutation L = [[2, 0], [1, sqrt(2)]].
        let f = cholesky(&spd_2x2()).unwrap();
        let rec = f.reconstruct_permuted();
        let p = f.perm();
        for i in 0..2 {
            for j in 0..2 {
                let expect = spd_2x2().get(p[i], p[j]);
                assert!((rec.get(i, j) - expect).abs() < 1e-12);
            }
        }
        assert!((f.log_det() - 8.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let q =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        match cholesky(&q) {
            Err(Error::NotPositiveDefinite { .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn solve_identity_and_diag() {
        let f = cholesky(&SparseMatrix::identity(3)).unwrap();
        let b = vec![1.0, -2.5, 4.0];
        assert_eq!(f.solve(&b).unwrap(), b);

        let f = cholesky(&spd_diag()).unwrap();
        let x = f.solve(&[8.0, 27.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn solve_matches_dense_oracle_10x10() {
        let q = random_spd(10, 42);
        let f = cholesky(&q).unwrap();
        let b: Vec<f64> = (0..10).map(|i| (i as f64) - 4.5).collect();
        let x = f.solve(&b).unwrap();
        let x_dense = dense_solve(&q, &b);
        for i in 0..10 {
            assert!(
                (x[i] - x_dense[i]).abs() < 1e-8,
                "component {i}: {} vs {}",
                x[i],
                x_dense[i]
            );
        }
    }

    #[test]
    fn log_det_values() {
        assert!(cholesky(&SparseMatrix::identity(4)).unwrap().log_det().abs() < 1e-14);
        let f = cholesky(&spd_diag()).unwrap();
        assert!((f.log_det() - 36.0f64.ln()).abs() < 1e-12);
        let f = cholesky(&spd_2x2()).unwrap();
        assert!((f.log_det() - 8.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_det_permutation_invariant() {
        // Compare the fill-reducing ordering against the natural one by
        // factoring a permuted copy of the same matrix.
        let q = random_spd(8, 7);
        let f = cholesky(&q).unwrap();
        let shuffle: Vec<usize> = vec![3, 0, 7, 1, 6, 2, 5, 4];
        let mut triplets = Vec::new();
        for (i, j, v) in q.iter() {
            triplets.push((shuffle[i], shuffle[j], v));
        }
        let q2 = SparseMatrix::from_triplets(8, 8, &triplets);
        let f2 = cholesky(&q2).unwrap();
        assert!((f.log_det() - f2.log_det()).abs() < 1e-10);
    }

    #[test]
    fn reconstruction_roundtrip() {
        let q = random_spd(12, 3);
        let f = cholesky(&q).unwrap();
        let rec = f.reconstruct_permuted();
        let p = f.perm();
        let scale = q.max_abs();
        for i in 0..12 {
            for j in 0..12 {
                let expect = q.get(p[i], p[j]);
                assert!(
                    (rec.get(i, j) - expect).abs() <= 1e-8 * scale,
                    "entry ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn solve_inverts_mul() {
        let q = random_spd(10, 99);
        let f = cholesky(&q).unwrap();
        let x: Vec<f64> = (0..10).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let b = q.mul_vec(&x);
        let x2 = f.solve(&b).unwrap();
        for i in 0..10 {
            assert!((x[i] - x2[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = cholesky(&spd_2x2()).unwrap();
        let a = f.sample(&[0.0, 0.0], 17, 3);
        let b = f.sample(&[0.0, 0.0], 17, 3);
        assert_eq!(a, b);
        let c = f.sample(&[0.0, 0.0], 18, 3);
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_variance_diag() {
        // Q = diag(4): variance should approach 0.25.
        let f = cholesky(&SparseMatrix::diagonal(&[4.0])).unwrap();
        let samples = f.sample(&[0.0], 1234, 100_000);
        let mean: f64 = samples.iter().map(|s| s[0]).sum::<f64>() / samples.len() as f64;
        let var: f64 =
            samples.iter().map(|s| (s[0] - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        assert!(var > 0.25 * 0.95 && var < 0.25 * 1.05, "variance {var}");
    }

    #[test]
    fn sampling_covariance_2x2() {
        // Q = [[4,2],[2,3]], Q^{-1} = (1/8)[[3,-2],[-2,4]].
        let f = cholesky(&spd_2x2()).unwrap();
        let samples = f.sample(&[1.0, -1.0], 5, 100_000);
        let n = samples.len() as f64;
        let mean0: f64 = samples.iter().map(|s| s[0]).sum::<f64>() / n;
        let mean1: f64 = samples.iter().map(|s| s[1]).sum::<f64>() / n;
        // Sample means within 4 standard errors of the target mean.
        let se0 = (3.0f64 / 8.0 / n).sqrt();
        let se1 = (4.0f64 / 8.0 / n).sqrt();
        assert!((mean0 - 1.0).abs() < 4.0 * se0, "mean0 {mean0}");
        assert!((mean1 + 1.0).abs() < 4.0 * se1, "mean1 {mean1}");
        let mut cov = [[0.0f64; 2]; 2];
        for s in &samples {
            let d = [s[0] - mean0, s[1] - mean1];
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += d[i] * d[j];
                }
            }
        }
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v /= n - 1.0;
            }
        }
        let expect = [[3.0 / 8.0, -2.0 / 8.0], [-2.0 / 8.0, 4.0 / 8.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (cov[i][j] - expect[i][j]).abs() < 0.05 * expect[i][j].abs(),
                    "cov[{i}][{j}] = {} vs {}",
                    cov[i][j],
                    expect[i][j]
                );
            }
        }
    }

    #[test]
    fn marginal_variances_diag_and_oracle() {
        let f = cholesky(&spd_diag()).unwrap();
        let mv = f.marginal_variances();
        assert!((mv[0] - 0.25).abs() < 1e-14);
        assert!((mv[1] - 1.0 / 9.0).abs() < 1e-14);

        let q = random_spd(10, 11);
        let f = cholesky(&q).unwrap();
        let mv = f.marginal_variances();
        for i in 0..10 {
            let mut e = vec![0.0; 10];
            e[i] = 1.0;
            let col = dense_solve(&q, &e);
            assert!((mv[i] - col[i]).abs() < 1e-8, "diagonal {i}");
            assert!(mv[i] > 0.0);
        }
    }

    #[test]
    fn refactor_reuses_pattern() {
        let q = random_spd(10, 21);
        let symbolic = Arc::new(SymbolicFactor::analyze(&q).unwrap());
        let f1 = factor_with(&symbolic, &q).unwrap();
        let q2 = q.scale(2.0);
        let f2 = factor_with(&symbolic, &q2).unwrap();
        // log det of 2Q = log det Q + n log 2
        assert!((f2.log_det() - f1.log_det() - 10.0 * 2.0f64.ln()).abs() < 1e-10);
    }
}

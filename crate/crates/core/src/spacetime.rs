//! Separable space-time random effects: AR(1) across months, an SPDE field
//! across space, independent replicates across years.
//!
//! The monthly dynamics follow `W(s, a) = ρ·W(s, a−1) + √(1−ρ²)·ε_a(s)`,
//! whose `√(1−ρ²)` innovation scaling gives every month the stationary
//! unit-variance AR(1) marginal. The joint precision over one year is the
//! Kronecker product of the AR(1) precision with the spatial precision, and
//! years are independent replicates (block diagonal).

use crate::error::{Error, Result};
use crate::sparse::{kron, SparseMatrix};

/// Refuse to build latent fields beyond this many variables.
const MAX_LATENT: usize = 5_000_000;

/// Shape of the space-time effect: monthly AR(1) correlation, months per
/// year, and independent yearly replicates.
#[derive(Debug, Clone, Copy)]
pub struct Ar1Spec {
    pub rho: f64,
    pub n_periods: usize,
    pub n_replicates: usize,
}

/// The flat-index contract for space-time effects: vertex varies fastest,
/// then month, then year.
#[derive(Debug, Clone, Copy)]
pub struct SpaceTimeIndex {
    pub n_space: usize,
    pub n_periods: usize,
    pub n_replicates: usize,
}

impl SpaceTimeIndex {
    pub fn len(&self) -> usize {
        self.n_space * self.n_periods * self.n_replicates
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, vertex: usize, month: usize, year: usize) -> usize {
        debug_assert!(vertex < self.n_space && month < self.n_periods && year < self.n_replicates);
        vertex + self.n_space * (month + self.n_periods * year)
    }

    pub fn unflat(&self, idx: usize) -> (usize, usize, usize) {
        let vertex = idx % self.n_space;
        let rest = idx / self.n_space;
        (vertex, rest % self.n_periods, rest / self.n_periods)
    }
}

/// Precision of a stationary unit-variance AR(1) over `n_periods` steps:
/// tridiagonal with end diagonal `1/(1−ρ²)`, interior diagonal
/// `(1+ρ²)/(1−ρ²)`, and off-diagonal `−ρ/(1−ρ²)`. Its inverse has unit
/// diagonal and correlations `ρ^{|i−j|}`.
pub fn ar1_precision(rho: f64, n_periods: usize) -> Result<SparseMatrix> {
    if !(rho.abs() < 1.0) {
        return Err(Error::ParameterRange(format!(
            "AR(1) correlation must satisfy |rho| < 1, got {rho}"
        )));
    }
    if n_periods == 0 {
        return Err(Error::ParameterRange("n_periods must be at least 1".into()));
    }
    if n_periods == 1 {
        return Ok(SparseMatrix::identity(1));
    }
    let s = 1.0 / (1.0 - rho * rho);
    let mut triplets = Vec::with_capacity(3 * n_periods);
    for t in 0..n_periods {
        let diag = if t == 0 || t == n_periods - 1 {
            s
        } else {
            (1.0 + rho * rho) * s
        };
        triplets.push((t, t, diag));
        if t + 1 < n_periods && rho != 0.0 {
            triplets.push((t, t + 1, -rho * s));
            triplets.push((t + 1, t, -rho * s));
        }
    }
    Ok(SparseMatrix::from_triplets(n_periods, n_periods, &triplets))
}

/// Joint precision of the replicated space-time effect:
/// `blockdiag_{years}( kron(Q_ar1, Q_space) )`, ordered per
/// [`SpaceTimeIndex`]. `Q_space` should carry unit nominal variance; an
/// explicit variance hyperparameter scales the whole effect elsewhere.
pub fn spacetime_precision(ar1: &Ar1Spec, q_space: &SparseMatrix) -> Result<SparseMatrix> {
    if q_space.nrows() != q_space.ncols() {
        return Err(Error::DimensionMismatch {
            expected: q_space.nrows(),
            got: q_space.ncols(),
            context: "spatial precision must be square".into(),
        });
    }
    if ar1.n_replicates == 0 {
        return Err(Error::ParameterRange("n_replicates must be at least 1".into()));
    }
    let n = q_space
        .nrows()
        .saturating_mul(ar1.n_periods)
        .saturating_mul(ar1.n_replicates);
    if n > MAX_LATENT {
        return Err(Error::SizeGuard(n, MAX_LATENT));
    }
    let q_time = ar1_precision(ar1.rho, ar1.n_periods)?;
    let year_block = kron(&q_time, q_space);
    let blocks: Vec<&SparseMatrix> = (0..ar1.n_replicates).map(|_| &year_block).collect();
    Ok(SparseMatrix::block_diag(&blocks))
}

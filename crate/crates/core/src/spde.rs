//! Matérn SPDE precision matrices on a mesh.
//!
//! With smoothness ν = 1 (operator power ν + 1 = 2), the finite-element
//! discretization of the Matérn field yields the Gaussian Markov random
//! field precision
//!
//! ```text
//! Q = T · (κ²C + G) · C⁻¹ · (κ²C + G) · T,      T = diag(τ(sᵢ))
//! ```
//!
//! where `C` is the lumped mass matrix and `G` the stiffness matrix. The
//! paper states the operator but not this formula; it is the standard α = 2
//! consequence. Fields approximately have marginal variance
//! `1/(4π κ² τ(s)²)` and range `√8/κ` (correlation ≈ 0.14 at that
//! distance).
//!
//! The non-stationary parameterization follows the paper's θ-convention:
//! `log τ(s) = log τ₀ + θ₁ + θ₂ − σ̂(s)·θ₃` and
//! `log κ = log κ₀ − θ₁ + θ₂`, with σ̂ an empirical-variability covariate
//! at the mesh vertices.

use crate::error::{Error, Result};
use crate::geometry::{FemMatrices, Mesh, Point};
use crate::sparse::SparseMatrix;

/// Exponent bound for τ(s) and κ; beyond this the precision would overflow
/// or degenerate, so it is reported instead of clamped.
const LOG_CAP: f64 = 30.0;

/// Stationary Matérn parameters (ν fixed to 1).
#[derive(Debug, Clone, Copy)]
pub struct StationaryMatern {
    /// Inverse length scale, 1/km.
    pub kappa: f64,
    /// Precision scale.
    pub tau: f64,
}

/// Non-stationary θ-parameterization around fixed baselines.
#[derive(Debug, Clone)]
pub struct NonStationaryTheta {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub tau0: f64,
    pub kappa0: f64,
    /// Per-vertex variability covariate σ̂(s).
    pub sigma_hat: Vec<f64>,
}

/// κ = √8 / range (ν = 1, so √(8ν) = √8).
pub fn range_to_kappa(range: f64) -> Result<f64> {
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::ParameterRange(format!(
            "range must be positive and finite, got {range}"
        )));
    }
    Ok(8.0f64.sqrt() / range)
}

/// range = √8 / κ, the inverse of [`range_to_kappa`].
pub fn kappa_to_range(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::ParameterRange(format!(
            "kappa must be positive and finite, got {kappa}"
        )));
    }
    Ok(8.0f64.sqrt() / kappa)
}

/// Approximate marginal variance `1/(4π κ² τ²)` of the discretized field.
pub fn marginal_variance_approx(kappa: f64, tau: f64) -> f64 {
    1.0 / (4.0 * std::f64::consts::PI * kappa * kappa * tau * tau)
}

/// The τ giving marginal standard deviation `sigma` at a fixed κ:
/// `τ = 1/(√(4π)·κ·σ)`.
pub fn tau_for_sigma(kappa: f64, sigma: f64) -> f64 {
    1.0 / ((4.0 * std::f64::consts::PI).sqrt() * kappa * sigma)
}

/// Baseline constants `(τ₀, κ₀)` for a mesh: κ₀ = √8/ρ₀ with ρ₀ one fifth
/// of the domain diameter, and τ₀ = 1/(√(4π)·κ₀) so θ = 0 describes a unit
/// variance field at a plausible range.
pub fn baselines_for_mesh(mesh: &Mesh) -> (f64, f64) {
    let rho0 = mesh.diameter() / 5.0;
    let kappa0 = 8.0f64.sqrt() / rho0;
    let tau0 = 1.0 / ((4.0 * std::f64::consts::PI).sqrt() * kappa0);
    (tau0, kappa0)
}

/// Transfer a covariate defined at data locations onto mesh vertices by
/// nearest-location lookup; buffer vertices inherit the nearest interior
/// value.
pub fn transfer_to_vertices(points: &[Point], values: &[f64], mesh: &Mesh) -> Result<Vec<f64>> {
    if points.is_empty() || points.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
            context: "covariate transfer points/values".into(),
        });
    }
    Ok(mesh
        .vertices()
        .iter()
        .map(|&v| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, p) in points.iter().enumerate() {
                let d = p.dist2(v);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            values[best]
        })
        .collect())
}

/// The θ-independent part of the precision: `(κ²C + G)·C⁻¹·(κ²C + G)`.
fn operator_squared(kappa: f64, fem: &FemMatrices) -> SparseMatrix {
    let k_mat = fem.g.add(&fem.c.scale(kappa * kappa));
    let cinv: Vec<f64> = fem.mass_diagonal().iter().map(|&c| 1.0 / c).collect();
    let kc = k_mat.scale_cols(&cinv);
    kc.matmul(&k_mat).symmetrize_from_upper()
}

/// Stationary precision `Q = τ²·(κ²C + G)·C⁻¹·(κ²C + G)`.
pub fn precision_stationary(params: &StationaryMatern, fem: &FemMatrices) -> Result<SparseMatrix> {
    if !(params.kappa > 0.0) || !(params.tau > 0.0) {
        return Err(Error::ParameterRange(format!(
            "kappa and tau must be positive (got {}, {})",
            params.kappa, params.tau
        )));
    }
    Ok(operator_squared(params.kappa, fem).scale(params.tau * params.tau))
}

/// Non-stationary precision `Q = T·(κ²C + G)·C⁻¹·(κ²C + G)·T` with
/// `T = diag(τ(sᵢ))` from the θ-parameterization.
pub fn precision_nonstationary(
    theta: &NonStationaryTheta,
    fem: &FemMatrices,
) -> Result<SparseMatrix> {
    let n = fem.c.nrows();
    if theta.sigma_hat.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.sigma_hat.len(),
            context: "sigma_hat versus mesh vertex count".into(),
        });
    }
    if !(theta.tau0 > 0.0) || !(theta.kappa0 > 0.0) {
        return Err(Error::ParameterRange(format!(
            "baselines must be positive (tau0 {}, kappa0 {})",
            theta.tau0, theta.kappa0
        )));
    }
    let log_kappa = theta.kappa0.ln() - theta.theta1 + theta.theta2;
    if !log_kappa.is_finite() || log_kappa.abs() > LOG_CAP {
        return Err(Error::ParameterRange(format!(
            "log kappa = {log_kappa} exceeds the cap of ±{LOG_CAP}"
        )));
    }
    let log_tau_base = theta.tau0.ln() + theta.theta1 + theta.theta2;
    let mut tau = Vec::with_capacity(n);
    for (i, &s) in theta.sigma_hat.iter().enumerate() {
        let log_tau = log_tau_base - s * theta.theta3;
        if !log_tau.is_finite() || log_tau.abs() > LOG_CAP {
            return Err(Error::ParameterRange(format!(
                "log tau(s) = {log_tau} at vertex {i} exceeds the cap of ±{LOG_CAP}"
            )));
        }
        tau.push(log_tau.exp());
    }
    Ok(operator_squared(log_kappa.exp(), fem).scale_sym(&tau))
}

//! Latent Gaussian model graphs: effect blocks, observation groups, and
//! the θ-dependent assembly of prior precisions and design matrices.

use super::likelihood::LikelihoodFamily;
use crate::error::{Error, Result};
use crate::geometry::FemMatrices;
use crate::priors::{transform, HyperLayout, VAGUE_PRECISION};
use crate::spacetime::{spacetime_precision, Ar1Spec};
use crate::spde::{
    precision_nonstationary, precision_stationary, tau_for_sigma, NonStationaryTheta,
    StationaryMatern,
};
use crate::sparse::SparseMatrix;

/// One block of jointly Gaussian latent variables.
#[derive(Debug, Clone)]
pub struct EffectBlock {
    pub name: String,
    pub kind: EffectKind,
}

#[derive(Debug, Clone)]
pub enum EffectKind {
    /// Fixed-effect coefficients under independent vague Gaussians.
    Fixed { dim: usize },
    /// Non-stationary Matérn field; consumes (θ₁, θ₂, θ₃).
    SpdeNonstationary {
        fem: FemMatrices,
        tau0: f64,
        kappa0: f64,
        sigma_hat: Vec<f64>,
    },
    /// AR(1)-by-month × SPDE-in-space effect with yearly replicates;
    /// consumes (log range, log σ, θ_ρ). The spatial factor is scaled to
    /// unit nominal variance so σ is the marginal standard deviation.
    Spacetime {
        fem: FemMatrices,
        n_periods: usize,
        n_replicates: usize,
    },
}

impl EffectBlock {
    pub fn dim(&self) -> usize {
        match &self.kind {
            EffectKind::Fixed { dim } => *dim,
            EffectKind::SpdeNonstationary { fem, .. } => fem.c.nrows(),
            EffectKind::Spacetime {
                fem,
                n_periods,
                n_replicates,
            } => fem.c.nrows() * n_periods * n_replicates,
        }
    }

    /// Number of hyperparameters this block consumes.
    pub fn n_hyper(&self) -> usize {
        match &self.kind {
            EffectKind::Fixed { .. } => 0,
            EffectKind::SpdeNonstationary { .. } | EffectKind::Spacetime { .. } => 3,
        }
    }

    /// Prior precision of this block at its hyperparameter slice.
    pub fn precision(&self, theta: &[f64]) -> Result<SparseMatrix> {
        debug_assert_eq!(theta.len(), self.n_hyper());
        match &self.kind {
            EffectKind::Fixed { dim } => {
                Ok(SparseMatrix::diagonal(&vec![VAGUE_PRECISION; *dim]))
            }
            EffectKind::SpdeNonstationary {
                fem,
                tau0,
                kappa0,
                sigma_hat,
            } => precision_nonstationary(
                &NonStationaryTheta {
                    theta1: theta[0],
                    theta2: theta[1],
                    theta3: theta[2],
                    tau0: *tau0,
                    kappa0: *kappa0,
                    sigma_hat: sigma_hat.clone(),
                },
                fem,
            ),
            EffectKind::Spacetime {
                fem,
                n_periods,
                n_replicates,
            } => {
                let (log_range, log_sigma, theta_rho) = (theta[0], theta[1], theta[2]);
                if log_range.abs() > 30.0 || log_sigma.abs() > 30.0 {
                    return Err(Error::ParameterRange(format!(
                        "space-time internal parameters out of range ({log_range}, {log_sigma})"
                    )));
                }
                let kappa = 8.0f64.sqrt() / log_range.exp();
                let q_space = precision_stationary(
                    &StationaryMatern {
                        kappa,
                        tau: tau_for_sigma(kappa, 1.0),
                    },
                    fem,
                )?;
                let rho = transform::rho_from_internal(theta_rho);
                let q = spacetime_precision(
                    &Ar1Spec {
                        rho,
                        n_periods: *n_periods,
                        n_replicates: *n_replicates,
                    },
                    &q_space,
                )?;
                let sigma2 = (2.0 * log_sigma).exp();
                Ok(q.scale(1.0 / sigma2))
            }
        }
    }
}

/// Scale applied to one predictor term.
#[derive(Debug, Clone, Copy)]
pub enum TermScale {
    Unit,
    /// Multiply by `e^{θ_j}`; this is how the shared-copy coefficient
    /// α = e^{log α} enters a second predictor without new latents.
    ExpHyper(usize),
}

/// One additive term of a linear predictor: `scale · design · x_block`.
#[derive(Debug, Clone)]
pub struct PredictorTerm {
    pub block: usize,
    pub design: SparseMatrix,
    pub scale: TermScale,
}

/// One vector of conditionally independent observations with a common
/// likelihood family and a linear predictor built from terms.
#[derive(Debug, Clone)]
pub struct ObservationGroup {
    pub name: String,
    pub y: Vec<f64>,
    pub family: LikelihoodFamily,
    pub terms: Vec<PredictorTerm>,
    /// For the Gaussian family: θ index of the log noise precision.
    pub aux_hyper: Option<usize>,
}

/// A complete latent Gaussian model.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    pub blocks: Vec<EffectBlock>,
    /// (start, len) into θ per block, in block order.
    pub hyper_slices: Vec<(usize, usize)>,
    pub groups: Vec<ObservationGroup>,
    pub layout: HyperLayout,
}

impl ModelGraph {
    pub fn latent_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    /// Offset of block `b` in the stacked latent vector.
    pub fn block_offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|x| x.dim()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n_theta = self.layout.dim();
        if self.hyper_slices.len() != self.blocks.len() {
            return Err(Error::Inconsistency(format!(
                "{} hyper slices for {} blocks",
                self.hyper_slices.len(),
                self.blocks.len()
            )));
        }
        for (b, (block, &(start, len))) in
            self.blocks.iter().zip(&self.hyper_slices).enumerate()
        {
            if len != block.n_hyper() || start + len > n_theta {
                return Err(Error::Inconsistency(format!(
                    "block {b} ({}) expects {} hyperparameters, slice is ({start}, {len}) of {n_theta}",
                    block.name,
                    block.n_hyper()
                )));
            }
        }
        if self.groups.is_empty() {
            return Err(Error::EmptyLikelihood(
                "model has no observation groups".into(),
            ));
        }
        for group in &self.groups {
            if group.y.is_empty() {
                return Err(Error::EmptyLikelihood(format!(
                    "group {} has no observations",
                    group.name
                )));
            }
            if group.terms.is_empty() {
                return Err(Error::Inconsistency(format!(
                    "group {} has no predictor terms",
                    group.name
                )));
            }
            for term in &group.terms {
                if term.block >= self.blocks.len() {
                    return Err(Error::Inconsistency(format!(
                        "group {} references block {} of {}",
                        group.name,
                        term.block,
                        self.blocks.len()
                    )));
                }
                let want = self.blocks[term.block].dim();
                if term.design.ncols() != want {
                    return Err(Error::DimensionMismatch {
                        expected: want,
                        got: term.design.ncols(),
                        context: format!("design columns for group {}", group.name),
                    });
                }
                if term.design.nrows() != group.y.len() {
                    return Err(Error::DimensionMismatch {
                        expected: group.y.len(),
                        got: term.design.nrows(),
                        context: format!("design rows for group {}", group.name),
                    });
                }
                if let TermScale::ExpHyper(j) = term.scale {
                    if j >= n_theta {
                        return Err(Error::Inconsistency(format!(
                            "group {} scales by hyperparameter {j} of {n_theta}",
                            group.name
                        )));
                    }
                }
            }
            if let Some(j) = group.aux_hyper {
                if j >= n_theta {
                    return Err(Error::Inconsistency(format!(
                        "group {} uses aux hyperparameter {j} of {n_theta}",
                        group.name
                    )));
                }
            }
            if group.family == LikelihoodFamily::Gaussian && group.aux_hyper.is_none() {
                return Err(Error::Inconsistency(format!(
                    "Gaussian group {} needs an aux precision hyperparameter",
                    group.name
                )));
            }
            for (i, &y) in group.y.iter().enumerate() {
                let ok = match group.family {
                    LikelihoodFamily::BernoulliLogit => y == 0.0 || y == 1.0,
                    LikelihoodFamily::PoissonLog => y >= 0.0 && y.fract() == 0.0,
                    LikelihoodFamily::Gaussian => y.is_finite(),
                };
                if !ok {
                    return Err(Error::BadObservation {
                        index: i,
                        y,
                        eta: f64::NAN,
                    });
                }
            }
        }
        Ok(())
    }

    /// Block-diagonal prior precision over all latent blocks.
    pub fn assemble_prior_precision(&self, theta: &[f64]) -> Result<SparseMatrix> {
        if theta.len() != self.layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                got: theta.len(),
                context: "hyperparameter vector".into(),
            });
        }
        let mut parts = Vec::with_capacity(self.blocks.len());
        for (block, &(start, len)) in self.blocks.iter().zip(&self.hyper_slices) {
            parts.push(block.precision(&theta[start..start + len])?);
        }
        let refs: Vec<&SparseMatrix> = parts.iter().collect();
        Ok(SparseMatrix::block_diag(&refs))
    }

    /// Full design matrix of one observation group at θ: terms are scaled
    /// and placed at their block offsets in the stacked latent vector.
    pub fn assemble_design(&self, group: usize, theta: &[f64]) -> SparseMatrix {
        let g = &self.groups[group];
        let n = self.latent_dim();
        let mut triplets = Vec::new();
        for term in &g.terms {
            let offset = self.block_offset(term.block);
            let s = match term.scale {
                TermScale::Unit => 1.0,
                TermScale::ExpHyper(j) => theta[j].exp(),
            };
            for (r, c, v) in term.design.iter() {
                triplets.push((r, offset + c, s * v));
            }
        }
        SparseMatrix::from_triplets(g.y.len(), n, &triplets)
    }

    /// Auxiliary likelihood parameter of a group (Gaussian precision), 1
    /// for families that ignore it.
    pub fn group_aux(&self, group: usize, theta: &[f64]) -> f64 {
        match self.groups[group].aux_hyper {
            Some(j) => theta[j].exp(),
            None => 1.0,
        }
    }
}

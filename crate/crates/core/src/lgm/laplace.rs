//! Gaussian approximation at the latent mode and the resulting
//! Laplace-approximate log posterior of the hyperparameters.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::{cholesky, factor_with, CholeskyFactor, SparseMatrix, SymbolicFactor};

use super::model::ModelGraph;

const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 20;
const GRAD_TOL: f64 = 1e-8;

/// Reuses a symbolic factorization while the sparsity pattern is stable.
///
/// Patterns are compared explicitly rather than assumed fixed: an AR(1)
/// coefficient passing through zero, for example, drops the cross-period
/// couplings from the prior pattern.
#[derive(Default)]
pub struct SymbolicCache {
    entry: Option<(Vec<usize>, Vec<usize>, Arc<SymbolicFactor>)>,
}

impl SymbolicCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&mut self, q: &SparseMatrix) -> Result<CholeskyFactor> {
        if let Some((col_ptr, row_idx, symbolic)) = &self.entry {
            if col_ptr == q.col_ptr() && row_idx == q.row_idx() {
                return factor_with(symbolic, q);
            }
        }
        let factor = cholesky(q)?;
        self.entry = Some((
            q.col_ptr().to_vec(),
            q.row_idx().to_vec(),
            factor.symbolic().clone(),
        ));
        Ok(factor)
    }
}

/// Result of the inner Newton optimization over the latent field.
pub struct ModeResult {
    pub x: Vec<f64>,
    /// Cholesky factor of `Q_prior + Σ AᵀWA` evaluated at the mode.
    pub factor: CholeskyFactor,
    /// Total observation log likelihood at the mode.
    pub log_lik: f64,
    pub iterations: usize,
}

struct GroupData<'a> {
    y: &'a [f64],
    family: super::likelihood::LikelihoodFamily,
    aux: f64,
    design: &'a SparseMatrix,
    design_t: SparseMatrix,
}

fn predictor(g: &GroupData, x: &[f64]) -> Vec<f64> {
    g.design.mul_vec(x)
}

fn group_loglik(g: &GroupData, eta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &e) in eta.iter().enumerate() {
        let l = g.family.log_density(g.y[i], e, g.aux);
        if l.is_nan() {
            return f64::NEG_INFINITY;
        }
        total += l;
    }
    total
}

/// Newton optimization of `log π(y | x) − ½ xᵀ Q_prior x` with step
/// halving. Converges when the gradient infinity norm falls below
/// `1e-8 · (1 + ‖x‖∞)`.
pub fn latent_mode(
    model: &ModelGraph,
    theta: &[f64],
    q_prior: &SparseMatrix,
    designs: &[SparseMatrix],
    x0: Option<&[f64]>,
    cache: &mut SymbolicCache,
) -> Result<ModeResult> {
    let n = q_prior.nrows();
    let groups: Vec<GroupData> = model
        .groups
        .iter()
        .zip(designs)
        .enumerate()
        .map(|(gi, (g, a))| GroupData {
            y: &g.y,
            family: g.family,
            aux: model.group_aux(gi, theta),
            design: a,
            design_t: a.transpose(),
        })
        .collect();

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        _ => vec![0.0; n],
    };
    let objective = |x: &[f64]| -> f64 {
        let lik: f64 = groups.iter().map(|g| group_loglik(g, &predictor(g, x))).sum();
        lik - 0.5 * q_prior.quad_form(x)
    };
    let mut f_cur = objective(&x);
    if !f_cur.is_finite() {
        // fall back to the prior mean, which always has finite objective
        x = vec![0.0; n];
        f_cur = objective(&x);
    }

    for iter in 0..MAX_NEWTON {
        // gradient and curvature of the full objective at x
        let mut grad = q_prior.mul_vec(&x);
        for v in &mut grad {
            *v = -*v;
        }
        let mut h = q_prior.clone();
        for g in &groups {
            let eta = predictor(g, &x);
            let mut d = Vec::with_capacity(eta.len());
            let mut w = Vec::with_capacity(eta.len());
            for (i, &e) in eta.iter().enumerate() {
                let di = g.family.dlog(g.y[i], e, g.aux);
                let wi = g.family.neg_d2log(g.y[i], e, g.aux);
                if !di.is_finite() || !wi.is_finite() {
                    return Err(Error::BadObservation {
                        index: i,
                        y: g.y[i],
                        eta: e,
                    });
                }
                d.push(di);
                w.push(wi);
            }
            let at_d = g.design_t.mul_vec(&d);
            for (gv, av) in grad.iter_mut().zip(&at_d) {
                *gv += av;
            }
            let at_w = g.design_t.scale_cols(&w);
            h = h.add(&at_w.matmul(g.design)).symmetrize_from_upper();
        }

        let grad_norm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let factor = cache.factor(&h)?;
        if grad_norm <= GRAD_TOL * (1.0 + x_norm) {
            return Ok(ModeResult {
                log_lik: f_cur + 0.5 * q_prior.quad_form(&x),
                x,
                factor,
                iterations: iter,
            });
        }

        let delta = factor.solve(&grad)?;
        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..MAX_HALVINGS {
            let x_new: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
            let f_new = objective(&x_new);
            if f_new > f_cur || (f_new == f_cur && t == 1.0) {
                x = x_new;
                f_cur = f_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no ascent direction left: either converged to numerical
            // precision or genuinely stuck; let the gradient test decide
            // on the next pass by taking an infinitesimal step
            let grad_ok = grad_norm <= 1e-6 * (1.0 + x_norm);
            if grad_ok {
                return Ok(ModeResult {
                    log_lik: f_cur + 0.5 * q_prior.quad_form(&x),
                    x,
                    factor,
                    iterations: iter,
                });
            }
            return Err(Error::NoConvergence {
                grad_norm,
                iterations: iter,
            });
        }
    }
    Err(Error::NoConvergence {
        grad_norm: f64::NAN,
        iterations: MAX_NEWTON,
    })
}

/// One Laplace evaluation at fixed θ.
pub struct LaplaceEval {
    /// Unnormalized `log π(θ | y)`:
    /// `log π(y | x̂) − ½ x̂ᵀQx̂ + ½ log|Q| − ½ log|Q_post| + log π(θ)`.
    pub log_posterior: f64,
    pub mode: Vec<f64>,
    pub factor: CholeskyFactor,
    pub log_lik: f64,
    pub iterations: usize,
}

/// Caches reused across repeated evaluations over θ.
#[derive(Default)]
pub struct LaplaceState {
    pub prior_cache: SymbolicCache,
    pub posterior_cache: SymbolicCache,
    pub warm_mode: Option<Vec<f64>>,
}

impl LaplaceState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Laplace-approximate unnormalized log posterior of θ.
pub fn laplace_log_posterior(
    model: &ModelGraph,
    theta: &[f64],
    state: &mut LaplaceState,
) -> Result<LaplaceEval> {
    let q_prior = model.assemble_prior_precision(theta)?;
    let prior_factor = state.prior_cache.factor(&q_prior)?;
    let designs: Vec<SparseMatrix> = (0..model.groups.len())
        .map(|g| model.assemble_design(g, theta))
        .collect();
    let mode = latent_mode(
        model,
        theta,
        &q_prior,
        &designs,
        state.warm_mode.as_deref(),
        &mut state.posterior_cache,
    )?;
    let log_prior_theta = model.layout.log_density(theta)?;
    let log_posterior = mode.log_lik - 0.5 * q_prior.quad_form(&mode.x)
        + 0.5 * prior_factor.log_det()
        - 0.5 * mode.factor.log_det()
        + log_prior_theta;
    state.warm_mode = Some(mode.x.clone());
    Ok(LaplaceEval {
        log_posterior,
        mode: mode.x,
        factor: mode.factor,
        log_lik: mode.log_lik,
        iterations: mode.iterations,
    })
}

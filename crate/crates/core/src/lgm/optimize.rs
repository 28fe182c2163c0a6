//! Hyperparameter optimization: derivative-free maximization of the
//! Laplace-approximate log posterior, a finite-difference covariance for
//! the hyperparameters, and the fitted-model result type.

use crate::error::{Error, Result};
use crate::sparse::CholeskyFactor;

use super::laplace::{laplace_log_posterior, LaplaceState};
use super::model::ModelGraph;

/// Knobs for the outer optimization.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Evaluation budget for the simplex search.
    pub max_evals: usize,
    /// Stop when the simplex diameter (infinity norm) falls below this.
    pub tol: f64,
    /// Initial simplex step along each coordinate.
    pub init_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_evals: 500,
            tol: 1e-4,
            init_step: 0.1,
        }
    }
}

/// Nelder–Mead maximization with standard coefficients (reflect 1,
/// expand 2, contract ½, shrink ½). `f` may return −∞ for infeasible
/// points; errors abort. Returns (argmax, max, evaluations).
pub(crate) fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    start: &[f64],
    config: &FitConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    let d = start.len();
    let mut evals = 0usize;
    let eval = |f: &mut dyn FnMut(&[f64]) -> Result<f64>,
                x: &[f64],
                evals: &mut usize|
     -> Result<f64> {
        *evals += 1;
        f(x)
    };

    let f0 = eval(f, start, &mut evals)?;
    if f0 == f64::NEG_INFINITY {
        return Err(Error::UnusableStart(format!(
            "objective is unbounded below at the starting point {start:?}"
        )));
    }
    if d == 0 {
        return Ok((Vec::new(), f0, evals));
    }

    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    let mut fs: Vec<f64> = vec![f0];
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += config.init_step;
        let v = eval(f, &p, &mut evals)?;
        pts.push(p);
        fs.push(v);
    }

    loop {
        // order best → worst; ties broken by insertion index for
        // determinism
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]).then(a.cmp(&b)));
        let pts_sorted: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let fs_sorted: Vec<f64> = order.iter().map(|&i| fs[i]).collect();
        pts = pts_sorted;
        fs = fs_sorted;

        let diameter = pts[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if diameter < config.tol || evals >= config.max_evals {
            return Ok((pts[0].clone(), fs[0], evals));
        }

        let worst = d;
        let centroid: Vec<f64> = (0..d)
            .map(|k| pts[..worst].iter().map(|p| p[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..d)
                .map(|k| centroid[k] + t * (centroid[k] - pts[worst][k]))
                .collect()
        };

        let x_r = along(1.0);
        let f_r = eval(f, &x_r, &mut evals)?;
        if f_r > fs[0] {
            let x_e = along(2.0);
            let f_e = eval(f, &x_e, &mut evals)?;
            if f_e > f_r {
                pts[worst] = x_e;
                fs[worst] = f_e;
            } else {
                pts[worst] = x_r;
                fs[worst] = f_r;
            }
        } else if f_r > fs[worst - 1] {
            pts[worst] = x_r;
            fs[worst] = f_r;
        } else {
            let (x_c, f_c) = if f_r > fs[worst] {
                let x = along(0.5);
                let v = eval(f, &x, &mut evals)?;
                (x, v)
            } else {
                let x = along(-0.5);
                let v = eval(f, &x, &mut evals)?;
                (x, v)
            };
            if f_c > fs[worst].max(f_r) {
                pts[worst] = x_c;
                fs[worst] = f_c;
            } else {
                // shrink toward the best vertex
                for i in 1..pts.len() {
                    for k in 0..d {
                        pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
                    }
                    fs[i] = eval(f, &pts[i], &mut evals)?;
                }
            }
        }
    }
}

/// Dense symmetric inverse by Gauss–Jordan with partial pivoting.
fn invert_dense(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for v in &mut m[col] {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = m[r][col];
                if factor != 0.0 {
                    for k in 0..2 * n {
                        let v = m[col][k];
                        m[r][k] -= factor * v;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Covariance of θ from a central-difference Hessian of the log
/// posterior at its mode. Steps shrink if a probe lands on an
/// infeasible point; a small ridge is added if the negated Hessian is
/// not invertible. An indefinite Hessian (the search stopped short of a
/// true maximum) degrades to a diagonal covariance with a warning
/// rather than failing the whole fit.
pub(crate) fn fd_covariance(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    center: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let d = center.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let f0 = f(center)?;
    let mut last_diag: Option<Vec<f64>> = None;
    'scales: for scale in 0..3 {
        let h: Vec<f64> = center
            .iter()
            .map(|t| 1e-3 * 10.0f64.powi(-scale) * t.abs().max(1.0))
            .collect();
        let mut probe = |offsets: &[(usize, f64)]| -> Result<f64> {
            let mut x = center.to_vec();
            for &(i, s) in offsets {
                x[i] += s;
            }
            f(&x)
        };
        let mut hess = vec![vec![0.0; d]; d];
        for i in 0..d {
            let fp = probe(&[(i, h[i])])?;
            let fm = probe(&[(i, -h[i])])?;
            if !fp.is_finite() || !fm.is_finite() {
                continue 'scales;
            }
            hess[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        }
        last_diag = Some((0..d).map(|i| hess[i][i]).collect());
        for i in 0..d {
            for j in (i + 1)..d {
                let fpp = probe(&[(i, h[i]), (j, h[j])])?;
                let fpm = probe(&[(i, h[i]), (j, -h[j])])?;
                let fmp = probe(&[(i, -h[i]), (j, h[j])])?;
                let fmm = probe(&[(i, -h[i]), (j, -h[j])])?;
                if ![fpp, fpm, fmp, fmm].iter().all(|v| v.is_finite()) {
                    continue 'scales;
                }
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
                hess[i][j] = v;
                hess[j][i] = v;
            }
        }
        // posterior precision ≈ −H; invert, with a ridge fallback
        let mut prec: Vec<Vec<f64>> = hess
            .iter()
            .map(|row| row.iter().map(|v| -v).collect())
            .collect();
        let scale_diag = (0..d).map(|i| prec[i][i].abs()).fold(1e-12, f64::max);
        for attempt in 0..6 {
            if let Some(cov) = invert_dense(&prec) {
                // make the result exactly symmetric
                let sym: Vec<Vec<f64>> = (0..d)
                    .map(|i| (0..d).map(|j| 0.5 * (cov[i][j] + cov[j][i])).collect())
                    .collect();
                if sym.iter().enumerate().all(|(i, r)| r[i] >= 0.0) {
                    if attempt > 0 {
                        log::warn!("hyperparameter Hessian needed a ridge to invert");
                    }
                    return Ok(sym);
                }
            }
            let ridge = 1e-8 * 10.0f64.powi(attempt) * scale_diag;
            for i in 0..d {
                prec[i][i] += ridge;
            }
        }
        break;
    }
    if let Some(diag) = last_diag {
        log::warn!(
            "hyperparameter Hessian is not negative definite; \
             reporting diagonal-only uncertainties (increase max_evals)"
        );
        let floor = 1e-8 * diag.iter().fold(1e-8f64, |a, v| a.max(v.abs()));
        let mut cov = vec![vec![0.0; d]; d];
        for i in 0..d {
            cov[i][i] = 1.0 / (-diag[i]).max(floor);
        }
        return Ok(cov);
    }
    Err(Error::NoConvergence {
        grad_norm: f64::NAN,
        iterations: 0,
    })
}

/// A fitted latent Gaussian model.
pub struct FitResult {
    /// Hyperparameter estimates on the internal scale.
    pub theta: Vec<f64>,
    pub theta_names: Vec<String>,
    /// Approximate posterior covariance of θ (internal scale).
    pub theta_cov: Vec<Vec<f64>>,
    /// Unnormalized log posterior at θ̂.
    pub log_posterior: f64,
    /// Latent posterior mode at θ̂.
    pub mode: Vec<f64>,
    /// Marginal posterior standard deviations of the latent field.
    pub latent_sd: Vec<f64>,
    /// Cholesky factor of the posterior precision at (θ̂, x̂).
    pub factor: CholeskyFactor,
    pub block_names: Vec<String>,
    pub block_offsets: Vec<usize>,
    pub block_dims: Vec<usize>,
    pub n_evals: usize,
}

impl FitResult {
    /// Draw joint samples of the latent field from the Gaussian
    /// approximation at the fitted hyperparameters.
    pub fn sample_latent(&self, seed: u64, k: usize) -> Vec<Vec<f64>> {
        self.factor.sample(&self.mode, seed, k)
    }

    /// (offset, dim) of a named latent block.
    pub fn block_slice(&self, name: &str) -> Option<(usize, usize)> {
        let i = self.block_names.iter().position(|n| n == name)?;
        Some((self.block_offsets[i], self.block_dims[i]))
    }

    /// θ standard deviations (square roots of the covariance diagonal).
    pub fn theta_sd(&self) -> Vec<f64> {
        (0..self.theta.len())
            .map(|i| self.theta_cov[i][i].sqrt())
            .collect()
    }

    /// One line per hyperparameter: name, estimate, sd, and a 95%
    /// interval on the internal scale.
    pub fn summary_table(&self) -> String {
        const Z: f64 = 1.959963984540054;
        let mut out = String::from("parameter estimate sd q025 q975\n");
        let sds = self.theta_sd();
        for (i, name) in self.theta_names.iter().enumerate() {
            let (est, sd) = (self.theta[i], sds[i]);
            out.push_str(&format!(
                "{name} {est:.6} {sd:.6} {:.6} {:.6}\n",
                est - Z * sd,
                est + Z * sd
            ));
        }
        out
    }
}

/// Treat parameter-space failures as −∞ so the simplex backs away;
/// structural errors still abort.
fn eval_or_sentinel(model: &ModelGraph, theta: &[f64], state: &mut LaplaceState) -> Result<f64> {
    match laplace_log_posterior(model, theta, state) {
        Ok(e) => Ok(e.log_posterior),
        Err(
            e @ (Error::ParameterRange(_)
            | Error::NotPositiveDefinite { .. }
            | Error::NoConvergence { .. }),
        ) => {
            log::debug!("objective sentinel at θ = {theta:?}: {e}");
            Ok(f64::NEG_INFINITY)
        }
        Err(e) => Err(e),
    }
}

/// Fit the model: maximize the Laplace-approximate log posterior over θ,
/// then assemble the Gaussian approximation of the latent field at the
/// optimum and a finite-difference covariance for θ.
pub fn optimize_hyper(model: &ModelGraph, start: &[f64], config: &FitConfig) -> Result<FitResult> {
    model.validate()?;
    if start.len() != model.layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.layout.dim(),
            got: start.len(),
            context: "hyperparameter start vector".into(),
        });
    }
    let mut state = LaplaceState::new();
    let mut objective =
        |theta: &[f64]| -> Result<f64> { eval_or_sentinel(model, theta, &mut state) };
    let (theta, _best, n_evals) = nelder_mead(&mut objective, start, config)?;
    let theta_cov = if theta.is_empty() {
        Vec::new()
    } else {
        fd_covariance(&mut objective, &theta)?
    };
    let eval = laplace_log_posterior(model, &theta, &mut state)?;
    assemble_result(model, theta, theta_cov, eval, n_evals)
}

/// Assemble the Gaussian approximation at a fixed θ without searching:
/// one inner optimization instead of hundreds. Used when a persisted
/// estimate is reloaded for prediction; `theta_cov` is zero since no
/// curvature is computed here.
pub fn evaluate_at(model: &ModelGraph, theta: &[f64]) -> Result<FitResult> {
    model.validate()?;
    if theta.len() != model.layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.layout.dim(),
            got: theta.len(),
            context: "hyperparameter vector".into(),
        });
    }
    let mut state = LaplaceState::new();
    let eval = laplace_log_posterior(model, theta, &mut state)?;
    let d = theta.len();
    assemble_result(model, theta.to_vec(), vec![vec![0.0; d]; d], eval, 1)
}

fn assemble_result(
    model: &ModelGraph,
    theta: Vec<f64>,
    theta_cov: Vec<Vec<f64>>,
    eval: super::laplace::LaplaceEval,
    n_evals: usize,
) -> Result<FitResult> {
    let latent_sd = eval
        .factor
        .marginal_variances()
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let block_names = model.blocks.iter().map(|b| b.name.clone()).collect();
    let block_dims: Vec<usize> = model.blocks.iter().map(|b| b.dim()).collect();
    let block_offsets = block_dims
        .iter()
        .scan(0usize, |acc, &d| {
            let here = *acc;
            *acc += d;
            Some(here)
        })
        .collect();
    Ok(FitResult {
        theta,
        theta_names: model.layout.names(),
        theta_cov,
        log_posterior: eval.log_posterior,
        mode: eval.mode,
        latent_sd,
        factor: eval.factor,
        block_names,
        block_offsets,
        block_dims,
        n_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgm::likelihood::LikelihoodFamily;
    use crate::lgm::model::{
        EffectBlock, EffectKind, ModelGraph, ObservationGroup, PredictorTerm, TermScale,
    };
    use crate::priors::{HyperBlock, HyperLayout};
    use crate::sparse::SparseMatrix;

    #[test]
    fn nelder_mead_recovers_quadratic_maximum() {
        // maximize −(θ−t)ᵀ M (θ−t) with a correlated positive definite M
        let t = [1.5, -0.7, 0.3];
        let m = [[2.0, 0.5, 0.0], [0.5, 1.0, 0.25], [0.0, 0.25, 0.75]];
        let mut f = |x: &[f64]| -> crate::error::Result<f64> {
            let d: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a - b).collect();
            let mut q = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    q += d[i] * m[i][j] * d[j];
                }
            }
            Ok(-q)
        };
        let (x, v, evals) = nelder_mead(&mut f, &[0.0, 0.0, 0.0], &FitConfig::default()).unwrap();
        assert!(evals < 500);
        for k in 0..3 {
            assert!((x[k] - t[k]).abs() < 5e-3, "coordinate {k}: {} vs {}", x[k], t[k]);
        }
        assert!(v > -1e-4);
    }

    #[test]
    fn nelder_mead_handles_infeasible_region() {
        // −∞ outside the unit box; maximum at 0.8 on the inside
        let mut f = |x: &[f64]| -> crate::error::Result<f64> {
            if x[0].abs() > 1.0 {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(-(x[0] - 0.8) * (x[0] - 0.8))
            }
        };
        let (x, _, _) = nelder_mead(&mut f, &[0.0], &FitConfig::default()).unwrap();
        assert!((x[0] - 0.8).abs() < 5e-3);

        let mut g = |_: &[f64]| -> crate::error::Result<f64> { Ok(f64::NEG_INFINITY) };
        assert!(matches!(
            nelder_mead(&mut g, &[0.0], &FitConfig::default()),
            Err(crate::error::Error::UnusableStart(_))
        ));
    }

    #[test]
    fn fd_covariance_inverts_quadratic_curvature() {
        // log density −½ θᵀ P θ ⇒ covariance P⁻¹ exactly (FD is exact on
        // quadratics up to rounding)
        let p = [[4.0, 1.0], [1.0, 2.0]];
        let mut f = |x: &[f64]| -> crate::error::Result<f64> {
            let mut q = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    q += x[i] * p[i][j] * x[j];
                }
            }
            Ok(-0.5 * q)
        };
        let cov = fd_covariance(&mut f, &[0.0, 0.0]).unwrap();
        // P⁻¹ = (1/7) [[2, −1], [−1, 4]]
        let want = [[2.0 / 7.0, -1.0 / 7.0], [-1.0 / 7.0, 4.0 / 7.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (cov[i][j] - want[i][j]).abs() < 1e-6,
                    "cov[{i}][{j}] = {} vs {}",
                    cov[i][j],
                    want[i][j]
                );
            }
        }
    }

    fn gaussian_noise_model() -> (ModelGraph, Vec<f64>) {
        // y_i = x + ε_i with x ~ N(0, 1/0.001) vague and ε precision
        // e^θ; enough data that the θ posterior is well behaved
        let y: Vec<f64> = (0..40)
            .map(|i| {
                let u = (i as f64 + 0.5) / 40.0;
                // deterministic pseudo-noise with sample SD near 0.5
                2.0 + 0.5 * (2.0 * std::f64::consts::PI * (7.0 * u)).sin()
                    + 0.3 * (2.0 * std::f64::consts::PI * (13.0 * u + 0.2)).cos()
            })
            .collect();
        let design = SparseMatrix::from_triplets(
            y.len(),
            1,
            &(0..y.len()).map(|i| (i, 0, 1.0)).collect::<Vec<_>>(),
        );
        let model = ModelGraph {
            blocks: vec![EffectBlock {
                name: "mu".into(),
                kind: EffectKind::Fixed { dim: 1 },
            }],
            hyper_slices: vec![(0, 0)],
            groups: vec![ObservationGroup {
                name: "y".into(),
                y: y.clone(),
                family: LikelihoodFamily::Gaussian,
                terms: vec![PredictorTerm {
                    block: 0,
                    design,
                    scale: TermScale::Unit,
                }],
                aux_hyper: Some(0),
            }],
            layout: HyperLayout {
                blocks: vec![("noise".into(), HyperBlock::Vague { n: 1 })],
            },
        };
        (model, y)
    }

    #[test]
    fn gaussian_fit_matches_golden_section_argmax() {
        let (model, _) = gaussian_noise_model();
        let fit = optimize_hyper(&model, &[0.0], &FitConfig::default()).unwrap();

        // independent 1-d search over the same objective
        let mut state = LaplaceState::new();
        let lp = |t: f64, state: &mut LaplaceState| {
            laplace_log_posterior(&model, &[t], state)
                .unwrap()
                .log_posterior
        };
        let (mut lo, mut hi) = (-3.0, 5.0);
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        let (mut fa, mut fb) = (lp(a, &mut state), lp(b, &mut state));
        for _ in 0..80 {
            if fa < fb {
                lo = a;
                a = b;
                fa = fb;
                b = lo + phi * (hi - lo);
                fb = lp(b, &mut state);
            } else {
                hi = b;
                b = a;
                fb = fa;
                a = hi - phi * (hi - lo);
                fa = lp(a, &mut state);
            }
        }
        let argmax = 0.5 * (lo + hi);
        assert!(
            (fit.theta[0] - argmax).abs() < 1e-3,
            "simplex {} vs golden section {argmax}",
            fit.theta[0]
        );
        assert!(fit.theta_cov[0][0] > 0.0);
        // sanity: estimated noise SD should sit near the sample SD of
        // the residuals around the sample mean
        let (_, y) = gaussian_noise_model();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64;
        let sd_hat = (-0.5 * fit.theta[0]).exp();
        assert!((sd_hat - var.sqrt()).abs() < 0.1 * var.sqrt());
    }

    #[test]
    fn fit_is_deterministic() {
        let (model, _) = gaussian_noise_model();
        let f1 = optimize_hyper(&model, &[0.3], &FitConfig::default()).unwrap();
        let f2 = optimize_hyper(&model, &[0.3], &FitConfig::default()).unwrap();
        assert_eq!(f1.theta, f2.theta);
        assert_eq!(f1.n_evals, f2.n_evals);
        assert_eq!(f1.log_posterior, f2.log_posterior);
    }

    #[test]
    fn latent_samples_center_on_mode() {
        let (model, _) = gaussian_noise_model();
        let fit = optimize_hyper(&model, &[0.0], &FitConfig::default()).unwrap();
        let k = 400;
        let samples = fit.sample_latent(7, k);
        let mean = samples.iter().map(|s| s[0]).sum::<f64>() / k as f64;
        let se = fit.latent_sd[0] / (k as f64).sqrt();
        assert!(
            (mean - fit.mode[0]).abs() < 4.0 * se,
            "sample mean {mean} vs mode {} (se {se})",
            fit.mode[0]
        );
        // summary table mentions the hyperparameter by name
        let table = fit.summary_table();
        assert!(table.contains("noise"));
        let lines: Vec<&str> = table.trim().lines().collect();
        assert_eq!(lines.len(), 2);
    }
}

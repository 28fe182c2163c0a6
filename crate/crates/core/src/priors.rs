//! Hyperparameter priors: penalized-complexity (PC) priors for Matérn
//! range/variance and AR(1) correlation, and vague Gaussians for everything
//! else.
//!
//! PC priors place an exponential density on a distance from a base model
//! and are calibrated through one tail statement. Internally the engine
//! optimizes transformed hyperparameters (log range, log σ, and
//! `θ_ρ = log((1+ρ)/(1−ρ))`), so the densities here are returned on the
//! internal scale with the change-of-variable Jacobians included.

use crate::error::{Error, Result};

/// Precision of the vague Gaussian prior on internal scales (SD ≈ 31.62).
pub const VAGUE_PRECISION: f64 = 1e-3;

/// PC prior for a Matérn field: `P(range < range0) = alpha_range` and
/// `P(sigma > sigma0) = alpha_sigma`.
///
/// In dimension d = 2 the range density is `λ_r·r^{−2}·exp(−λ_r/r)` with
/// `λ_r = −log(α_r)·range0`, and the σ density is exponential with
/// `λ_s = −log(α_s)/σ0`.
#[derive(Debug, Clone, Copy)]
pub struct PcMaternPrior {
    pub range0: f64,
    pub alpha_range: f64,
    pub sigma0: f64,
    pub alpha_sigma: f64,
    pub lambda_range: f64,
    pub lambda_sigma: f64,
}

impl PcMaternPrior {
    pub fn new(range0: f64, alpha_range: f64, sigma0: f64, alpha_sigma: f64) -> Result<Self> {
        for (v, what) in [(range0, "range0"), (sigma0, "sigma0")] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ParameterRange(format!(
                    "{what} must be positive and finite, got {v}"
                )));
            }
        }
        for (v, what) in [(alpha_range, "alpha_range"), (alpha_sigma, "alpha_sigma")] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::ParameterRange(format!(
                    "{what} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(PcMaternPrior {
            range0,
            alpha_range,
            sigma0,
            alpha_sigma,
            lambda_range: -alpha_range.ln() * range0,
            lambda_sigma: -alpha_sigma.ln() / sigma0,
        })
    }
}

/// Log density of the PC Matérn prior at natural-scale (range, sigma).
pub fn pc_matern_logdensity(range: f64, sigma: f64, prior: &PcMaternPrior) -> Result<f64> {
    if !(range > 0.0) {
        return Err(Error::ParameterRange(format!(
            "range must be positive, got {range}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::ParameterRange(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    let lr = prior.lambda_range;
    let ls = prior.lambda_sigma;
    let range_part = lr.ln() - 2.0 * range.ln() - lr / range;
    let sigma_part = ls.ln() - ls * sigma;
    Ok(range_part + sigma_part)
}

/// PC prior for an AR(1) correlation with base model ρ = 1 and distance
/// `d(ρ) = √(1−ρ)`: `P(rho < rho_ref) = alpha_rho`.
///
/// The distance only spans `(0, √2)` on ρ ∈ (−1, 1), so the exponential
/// density is normalized over that interval and the rate is calibrated
/// numerically against the truncated distribution. The closed-form rate
/// `−log(α)/√(1−ρ_ref)` ignores the truncation and would miss the stated
/// tail probability by about 40% here; it is kept available as
/// [`PcAr1Prior::nominal_lambda`] for reference.
#[derive(Debug, Clone, Copy)]
pub struct PcAr1Prior {
    pub rho_ref: f64,
    pub alpha_rho: f64,
    pub lambda: f64,
}

impl PcAr1Prior {
    pub fn new(rho_ref: f64, alpha_rho: f64) -> Result<Self> {
        if !(rho_ref > -1.0 && rho_ref < 1.0) {
            return Err(Error::ParameterRange(format!(
                "rho_ref must lie in (-1, 1), got {rho_ref}"
            )));
        }
        if !(alpha_rho > 0.0 && alpha_rho < 1.0) {
            return Err(Error::ParameterRange(format!(
                "alpha_rho must lie in (0, 1), got {alpha_rho}"
            )));
        }
        // Calibration target under truncation to d ∈ (0, √2):
        //   (e^{−λ d_ref} − e^{−λ√2}) / (1 − e^{−λ√2}) = α.
        // The left side decreases from 1 − d_ref/√2 toward 0, so a root
        // exists whenever α is below that limit; bisection nails it.
        let d_ref = (1.0 - rho_ref).sqrt();
        let sqrt2 = 2.0f64.sqrt();
        let tail = |lambda: f64| {
            ((-lambda * d_ref).exp() - (-lambda * sqrt2).exp()) / (1.0 - (-lambda * sqrt2).exp())
        };
        let limit = 1.0 - d_ref / sqrt2;
        if alpha_rho >= limit {
            return Err(Error::ParameterRange(format!(
                "alpha_rho = {alpha_rho} is not attainable for rho_ref = {rho_ref} \
                 (must be below {limit:.4})"
            )));
        }
        let (mut lo, mut hi) = (1e-9, 200.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if tail(mid) > alpha_rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(PcAr1Prior {
            rho_ref,
            alpha_rho,
            lambda: 0.5 * (lo + hi),
        })
    }

    /// The closed-form rate without truncation correction,
    /// `−log(α)/√(1−ρ_ref)` (≈ 2.9957 for the 0.05-below-zero calibration).
    pub fn nominal_lambda(&self) -> f64 {
        -self.alpha_rho.ln() / (1.0 - self.rho_ref).sqrt()
    }
}

/// Log density of the PC AR(1) prior at natural-scale ρ.
pub fn pc_ar1_logdensity(rho: f64, prior: &PcAr1Prior) -> Result<f64> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::ParameterRange(format!(
            "rho must lie in (-1, 1), got {rho}"
        )));
    }
    let sqrt2 = 2.0f64.sqrt();
    let d = (1.0 - rho).sqrt();
    let norm = 1.0 - (-prior.lambda * sqrt2).exp();
    // exponential in d, times |d'(ρ)| = 1/(2√(1−ρ))
    Ok(prior.lambda.ln() - prior.lambda * d - norm.ln() - (2.0 * d).ln())
}

/// Internal-scale transforms shared by the optimizer, priors, and results.
pub mod transform {
    /// ρ ∈ (−1, 1) from its internal scale θ_ρ = log((1+ρ)/(1−ρ)).
    pub fn rho_from_internal(t: f64) -> f64 {
        (0.5 * t).tanh()
    }

    pub fn internal_from_rho(rho: f64) -> f64 {
        ((1.0 + rho) / (1.0 - rho)).ln()
    }

    /// dρ/dθ_ρ, the Jacobian of [`rho_from_internal`].
    pub fn drho_dinternal(t: f64) -> f64 {
        let rho = rho_from_internal(t);
        0.5 * (1.0 - rho * rho)
    }
}

/// One block of hyperparameters with its prior.
#[derive(Debug, Clone)]
pub enum HyperBlock {
    /// (log range, log σ) of one Matérn field under a PC prior.
    PcMatern(PcMaternPrior),
    /// θ_ρ of one AR(1) correlation under a PC prior.
    PcAr1(PcAr1Prior),
    /// `n` unconstrained internal parameters under independent vague
    /// Gaussians (mean 0, precision [`VAGUE_PRECISION`]).
    Vague { n: usize },
}

impl HyperBlock {
    pub fn dim(&self) -> usize {
        match self {
            HyperBlock::PcMatern(_) => 2,
            HyperBlock::PcAr1(_) => 1,
            HyperBlock::Vague { n } => *n,
        }
    }
}

/// Named, ordered hyperparameter blocks of a model; the concatenation of
/// block dimensions defines the internal θ vector layout.
#[derive(Debug, Clone, Default)]
pub struct HyperLayout {
    pub blocks: Vec<(String, HyperBlock)>,
}

impl HyperLayout {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|(_, b)| b.dim()).sum()
    }

    /// One name per scalar hyperparameter, in θ order.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        for (name, block) in &self.blocks {
            match block {
                HyperBlock::PcMatern(_) => {
                    out.push(format!("{name}_log_range"));
                    out.push(format!("{name}_log_sigma"));
                }
                HyperBlock::PcAr1(_) => out.push(format!("{name}_theta_rho")),
                HyperBlock::Vague { n } => {
                    if *n == 1 {
                        out.push(name.clone());
                    } else {
                        for i in 1..=*n {
                            out.push(format!("{name}_{i}"));
                        }
                    }
                }
            }
        }
        out
    }

    /// Joint log prior density of the internal θ vector (Jacobians of the
    /// internal transforms included).
    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
                context: "hyperparameter vector versus prior layout".into(),
            });
        }
        let mut total = 0.0;
        let mut at = 0;
        for (_, block) in &self.blocks {
            let d = block.dim();
            total += block_log_density(block, &theta[at..at + d])?;
            at += d;
        }
        Ok(total)
    }
}

fn block_log_density(block: &HyperBlock, theta: &[f64]) -> Result<f64> {
    match block {
        HyperBlock::PcMatern(prior) => {
            let (log_range, log_sigma) = (theta[0], theta[1]);
            if log_range.abs() > 600.0 || log_sigma.abs() > 600.0 {
                return Err(Error::ParameterRange(format!(
                    "internal Matérn parameters out of range ({log_range}, {log_sigma})"
                )));
            }
            // natural density times Jacobians e^{log range}, e^{log σ}
            Ok(pc_matern_logdensity(log_range.exp(), log_sigma.exp(), prior)?
                + log_range
                + log_sigma)
        }
        HyperBlock::PcAr1(prior) => {
            let t = theta[0];
            let rho = transform::rho_from_internal(t);
            Ok(pc_ar1_logdensity(rho, prior)? + transform::drho_dinternal(t).ln())
        }
        HyperBlock::Vague { .. } => {
            let mut total = 0.0;
            for &t in theta {
                total += 0.5 * (VAGUE_PRECISION.ln() - (2.0 * std::f64::consts::PI).ln())
                    - 0.5 * VAGUE_PRECISION * t * t;
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature for the calibration oracles.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = f(a) + f(b);
        for k in 1..panels {
            let x = a + h * k as f64;
            acc += f(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    fn paper_matern_prior() -> PcMaternPrior {
        PcMaternPrior::new(55.0, 0.1, 0.5, 0.1).unwrap()
    }

    #[test]
    fn matern_rates_match_closed_forms() {
        let p = paper_matern_prior();
        assert!((p.lambda_range - 126.64).abs() < 0.01);
        assert!((p.lambda_range - (-(0.1f64).ln() * 55.0)).abs() < 1e-12);
        assert!((p.lambda_sigma - 4.6052).abs() < 1e-4);
    }

    #[test]
    fn range_tail_integrates_to_alpha() {
        let p = paper_matern_prior();
        // marginal range density: λ r^{-2} e^{-λ/r}
        let dens = |r: f64| p.lambda_range * r.powi(-2) * (-p.lambda_range / r).exp();
        let below = simpson(dens, 1e-6, 55.0, 200_000);
        assert!((below - 0.1).abs() < 1e-6, "P(range < 55) = {below}");
    }

    #[test]
    fn sigma_tail_integrates_to_alpha() {
        let p = paper_matern_prior();
        let dens = |s: f64| p.lambda_sigma * (-p.lambda_sigma * s).exp();
        let above = simpson(dens, 0.5, 20.0, 100_000);
        assert!((above - 0.1).abs() < 1e-6, "P(sigma > 0.5) = {above}");
    }

    #[test]
    fn ar1_nominal_rate_and_calibrated_tail() {
        let p = PcAr1Prior::new(0.0, 0.05).unwrap();
        assert!((p.nominal_lambda() - 2.9957).abs() < 1e-4);
        // The calibrated rate differs from the nominal one because of the
        // (0, √2) truncation.
        assert!(p.lambda < p.nominal_lambda());
        let dens = |rho: f64| pc_ar1_logdensity(rho, &p).unwrap().exp();
        let below = simpson(dens, -1.0 + 1e-9, 0.0, 400_000);
        assert!((below - 0.05).abs() < 1e-6, "P(rho < 0) = {below}");
        // Normalization over (−1, 1): the density has an integrable
        // 1/√(1−ρ) spike at ρ → 1, so integrate under the substitution
        // ρ = 1 − d² (exact change of variables) where the integrand is
        // smooth.
        let dens_d = |d: f64| dens(1.0 - d * d) * 2.0 * d;
        let total = simpson(dens_d, 1e-8, 2.0f64.sqrt() - 1e-12, 100_000);
        assert!((total - 1.0).abs() < 1e-6, "normalization = {total}");
    }

    #[test]
    fn ar1_calibration_roundtrip_other_targets() {
        for (rho_ref, alpha) in [(0.0, 0.05), (0.5, 0.1), (-0.5, 0.02)] {
            let p = PcAr1Prior::new(rho_ref, alpha).unwrap();
            let dens = |rho: f64| pc_ar1_logdensity(rho, &p).unwrap().exp();
            let below = simpson(dens, -1.0 + 1e-9, rho_ref, 400_000);
            assert!(
                (below - alpha).abs() < 1e-6,
                "P(rho < {rho_ref}) = {below}, want {alpha}"
            );
        }
    }

    #[test]
    fn internal_transform_roundtrip() {
        for rho in [-0.9, -0.3, 0.0, 0.5, 0.851, 0.99] {
            let t = transform::internal_from_rho(rho);
            assert!((transform::rho_from_internal(t) - rho).abs() < 1e-12);
            // finite-difference Jacobian check
            let h = 1e-6;
            let fd =
                (transform::rho_from_internal(t + h) - transform::rho_from_internal(t - h))
                    / (2.0 * h);
            assert!((transform::drho_dinternal(t) - fd).abs() < 1e-8);
        }
    }

    fn z_layout() -> HyperLayout {
        HyperLayout {
            blocks: vec![
                ("W1Z".into(), HyperBlock::Vague { n: 3 }),
                (
                    "W2Z".into(),
                    HyperBlock::PcMatern(paper_matern_prior()),
                ),
                ("W2Z".into(), HyperBlock::PcAr1(PcAr1Prior::new(0.0, 0.05).unwrap())),
            ],
        }
    }

    #[test]
    fn layout_dimensions() {
        let z = z_layout();
        assert_eq!(z.dim(), 6);
        assert!(z.log_density(&[0.0; 6]).is_ok());
        match z.log_density(&[0.0; 7]) {
            Err(Error::DimensionMismatch { expected: 6, got: 7, .. }) => {}
            other => panic!("expected dimension mismatch, got {other:?}"),
        }

        // joint model: two 6-blocks plus shared α and Gaussian log-precision
        let mut joint = z_layout();
        joint.blocks.extend(z_layout().blocks.into_iter().map(|(n, b)| (n.replace('Z', "CNT"), b)));
        joint.blocks.push(("log_alpha".into(), HyperBlock::Vague { n: 1 }));
        joint
            .blocks
            .push(("log_prec_ba".into(), HyperBlock::Vague { n: 1 }));
        assert_eq!(joint.dim(), 14);
        assert!(joint.log_density(&[0.1; 14]).is_ok());
        assert_eq!(joint.names().len(), 14);
    }

    #[test]
    fn layout_density_is_additive() {
        let z = z_layout();
        let theta = [0.3, -0.2, 0.15, (60.0f64).ln(), (0.7f64).ln(), 1.2];
        let total = z.log_density(&theta).unwrap();
        let mut sum = 0.0;
        let mut at = 0;
        for (_, block) in &z.blocks {
            let d = block.dim();
            sum += super::block_log_density(block, &theta[at..at + d]).unwrap();
            at += d;
        }
        assert!((total - sum).abs() < 1e-12);
    }

    #[test]
    fn names_follow_block_order() {
        let names = z_layout().names();
        assert_eq!(
            names,
            vec![
                "W1Z_1",
                "W1Z_2",
                "W1Z_3",
                "W2Z_log_range",
                "W2Z_log_sigma",
                "W2Z_theta_rho"
            ]
        );
    }
}

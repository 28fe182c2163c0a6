//! Observation likelihood families with derivatives in the linear
//! predictor, the raw material of the Gaussian approximation.

use statrs::function::gamma::ln_gamma;

/// Floor for negative second derivatives: keeps the posterior precision
/// positive definite when an observation carries no curvature (saturated
/// Bernoulli probabilities, near-zero Poisson rates).
pub const CURVATURE_FLOOR: f64 = 1e-10;

/// One conditional observation model. `aux` carries the Gaussian noise
/// precision and is ignored by the discrete families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodFamily {
    /// Binary response through a logistic link.
    BernoulliLogit,
    /// Count response through a log link.
    PoissonLog,
    /// Real response with unknown precision (a hyperparameter).
    Gaussian,
}

/// Numerically stable `log(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LikelihoodFamily {
    /// `log p(y | η)`.
    pub fn log_density(&self, y: f64, eta: f64, aux: f64) -> f64 {
        match self {
            LikelihoodFamily::BernoulliLogit => y * eta - softplus(eta),
            LikelihoodFamily::PoissonLog => y * eta - eta.exp() - ln_gamma(y + 1.0),
            LikelihoodFamily::Gaussian => {
                let r = y - eta;
                0.5 * (aux.ln() - (2.0 * std::f64::consts::PI).ln()) - 0.5 * aux * r * r
            }
        }
    }

    /// `d log p / d η`.
    pub fn dlog(&self, y: f64, eta: f64, aux: f64) -> f64 {
        match self {
            LikelihoodFamily::BernoulliLogit => y - sigmoid(eta),
            LikelihoodFamily::PoissonLog => y - eta.exp(),
            LikelihoodFamily::Gaussian => aux * (y - eta),
        }
    }

    /// `−d² log p / d η²`, floored at [`CURVATURE_FLOOR`].
    pub fn neg_d2log(&self, _y: f64, eta: f64, aux: f64) -> f64 {
        let w = match self {
            LikelihoodFamily::BernoulliLogit => {
                let p = sigmoid(eta);
                p * (1.0 - p)
            }
            LikelihoodFamily::PoissonLog => eta.exp(),
            LikelihoodFamily::Gaussian => aux,
        };
        w.max(CURVATURE_FLOOR)
    }
}

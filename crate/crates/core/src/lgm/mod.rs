//! Latent Gaussian model engine: likelihood families, model graphs, the
//! nested Laplace approximation, and empirical Bayes fitting.

pub mod laplace;
pub mod likelihood;
pub mod model;
pub mod optimize;

pub use laplace::{laplace_log_posterior, latent_mode, LaplaceEval, LaplaceState, SymbolicCache};
pub use likelihood::LikelihoodFamily;
pub use model::{
    EffectBlock, EffectKind, ModelGraph, ObservationGroup, PredictorTerm, TermScale,
};
pub use optimize::{evaluate_at, optimize_hyper, FitConfig, FitResult};

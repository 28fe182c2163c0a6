//! Latent Gaussian modeling engine for spatio-temporal wildfire counts and
//! burnt areas.
//!
//! The crate builds triangulated meshes over observation domains, assembles
//! Matérn fields as Gaussian Markov random fields through the stochastic
//! partial differential equation (SPDE) representation, couples them with
//! first-order autoregressive dynamics in time, and fits hurdle-style
//! two-part models for monthly wildfire counts and burnt areas by Laplace
//! approximation. A weighted ranked probability score drives forecast
//! evaluation.
//!
//! Module map:
//! - [`sparse`]: CSC matrices, Kronecker products, sparse Cholesky.
//! - [`geometry`]: projection, triangulation, finite element matrices.
//! - [`spde`]: non-stationary Matérn precision assembly.
//! - [`spacetime`]: AR(1)-in-time × SPDE-in-space effects with replicates.
//! - [`priors`]: penalized-complexity and vague hyperparameter priors.
//! - [`lgm`]: latent Gaussian model graph, Laplace fit, posterior sampling.
//! - [`wildfire`]: the two-part count/burnt-area model.
//! - [`scoring`]: weighted ranked probability scores and benchmarks.
//! - [`sim`]: synthetic data generation for end-to-end checks.
//! - [`config`]: run configuration parsing.

pub mod config;
pub mod error;
pub mod geometry;
pub mod lgm;
pub mod priors;
pub mod scoring;
pub mod sim;
pub mod spacetime;
pub mod sparse;
pub mod spde;
pub mod wildfire;

pub use error::{Error, Result};

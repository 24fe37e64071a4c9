//! Fully Bayesian variable selection for sparse linear models with `p >> n`.
//!
//! The model places a spike-and-slab prior on the regression coefficients, an
//! inverse chi-square prior on the error variance and a *size-control* prior on
//! the model space that gives zero mass to every model with more than `t_n`
//! variables. `t_n` itself receives a uniform prior on `1..=m_n`.
//!
//! The crate is organised as follows:
//!
//! - [`model`]: datasets, ground truth, model indicators, prior configuration
//!   and the mutable sampler state.
//! - [`posterior`]: exact log-domain model scores, full enumeration, the
//!   g-prior marginal by quadrature and the sparse Riesz checker.
//! - [`gibbs`] and [`hyper_c`]: the constrained blockwise Gibbs sampler and the
//!   updates of the slab scale `c`.
//! - [`inference`] and [`diagnostics`]: credible intervals, false coverage,
//!   replication metrics and convergence monitoring.
//! - [`simgen`]: seeded generators for the two simulation designs.
//! - [`experiment`], [`io`] and [`cli`]: orchestration, file formats and the
//!   command line front end.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod gibbs;
pub mod hyper_c;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod model;
pub mod posterior;
pub mod quadrature;
pub mod rng;
pub mod simgen;

pub use error::{Error, Result};
pub use gibbs::{run_chain, run_chains, ChainConfig, ChainInit, ChainOutput};
pub use hyper_c::{preset_c, CPreset, MhTuning};
pub use model::{
    derive_ground_truth, validate_dataset, CPrior, Dataset, GroundTruth, ModelIndicator,
    ModelPrior, Precomputed, PriorConfig, SamplerState,
};
pub use posterior::{
    enumerate_posterior, enumerate_posterior_g, enumerate_size_marginal, log_unnorm_posterior, log_unnorm_posterior_g,
    map_model, EnumeratedPosterior, LogScore,
};

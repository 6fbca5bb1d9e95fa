//! Bayesian estimation of the warp parameters: conjugate conditional
//! posteriors and a Gibbs sampler over `(α₁…αₙ, κ, σ)`.
//!
//! Priors: `κ ~ N(a, b²)`, `αᵢ ~ N(c, d²)`, `σ ~ U(θ₁, θ₂)`; data model
//! `Yᵢ = αᵢX + κ(αᵢ-1)1 + εᵢ` with `εᵢ ~ N(0, σ²I)`.

mod gibbs;
mod hyperparams;
mod posterior;
pub(crate) mod stats;

pub use gibbs::{
    batch_means_standard_error, run_gibbs, BayesEstimate, GibbsConfig, GibbsTrace, DEFAULT_BURN_IN,
    DEFAULT_ITERATIONS,
};
pub use hyperparams::Hyperparams;
pub use posterior::{
    alpha_posterior_params, kappa_posterior_params, posterior_variance_reduction_check,
    sigma_posterior_beta,
};

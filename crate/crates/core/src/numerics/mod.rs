//! Numerical kernels shared by the estimators.

pub mod optimize;
pub mod quadrature;
pub mod random;
pub mod special;

pub use optimize::{bounded_maximize, nelder_mead_minimize, Maximum, Minimum, OptimizerConfig};
pub use quadrature::{gauss_legendre_integrate, GaussLegendre};
pub use random::{
    sample_gaussian, sample_sigma_posterior, sigma_posterior_ln_normalizer, RngStream,
};
pub use special::{gamma_fn, ln_gamma, lower_incomplete_gamma, upper_incomplete_gamma};

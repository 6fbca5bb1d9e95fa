//! Affine vocal tract length normalization: estimating a frequency warp
//! between speakers from formant data, by curve fitting or by Gibbs
//! sampling of a hierarchical Bayesian model, and applying it to formants
//! and spectra.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod bayes;
pub mod classical;
pub mod data;
pub mod error;
pub mod hyper;
pub mod model;
pub mod numerics;
pub mod recognizer;
pub mod spectral;

pub use error::{Error, Result};

/// The guide's chapters, compiled as doc-tests so their examples keep
/// working.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/affine-model.md")]
    pub mod affine_model {}
    #[doc = include_str!("../../../book/src/classical.md")]
    pub mod classical {}
    #[doc = include_str!("../../../book/src/bayes.md")]
    pub mod bayes {}
    #[doc = include_str!("../../../book/src/integrated-likelihood.md")]
    pub mod integrated_likelihood {}
    #[doc = include_str!("../../../book/src/recognition.md")]
    pub mod recognition {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    pub mod spectral {}
    #[doc = include_str!("../../../book/src/data-and-cli.md")]
    pub mod data_and_cli {}
}

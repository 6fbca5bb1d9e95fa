//! Seeded random streams and the two samplers used by the Gibbs chain.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::special::{ln_gamma_interval_mass, ln_gamma_unchecked};
use crate::error::{Error, Result};

/// A reproducible random stream.
///
/// Two streams built from the same `(seed, stream_id)` yield the same
/// sequence. Distinct `stream_id`s under one seed are independent, which
/// is how concurrent chains get their own randomness.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed and another stream id.
    pub fn fork(&self, stream_id: u64) -> Self {
        RngStream::new(self.seed, stream_id)
    }

    /// Uniform draw on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits
            let u = (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// One draw from `N(mean, sd²)`, computed as `mean + sd · z` with `z`
/// standard normal.
pub fn sample_gaussian(rng: &mut RngStream, mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::domain(format!(
            "Gaussian sd must be positive and finite, got {sd}"
        )));
    }
    if !mean.is_finite() {
        return Err(Error::domain(format!(
            "Gaussian mean must be finite, got {mean}"
        )));
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

fn check_sigma_args(beta: f64, nr: usize, theta1: f64, theta2: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    if nr < 2 {
        return Err(Error::domain(format!("n * r must be at least 2, got {nr}")));
    }
    if !(theta1 > 0.0) || !(theta2 > theta1) || !theta2.is_finite() {
        return Err(Error::domain(format!(
            "need 0 < theta1 < theta2, got ({theta1}, {theta2})"
        )));
    }
    Ok(())
}

/// Log of `∫_{θ₁}^{θ₂} σ^{-nr} e^{-β/σ²} dσ`, which equals
/// `½ β^{(1-nr)/2} (Γ(s) - γ(β/θ₂², s) - Γ(β/θ₁², s))` with `s = (nr-1)/2`.
pub fn sigma_posterior_ln_normalizer(
    beta: f64,
    nr: usize,
    theta1: f64,
    theta2: f64,
) -> Result<f64> {
    check_sigma_args(beta, nr, theta1, theta2)?;
    let s = (nr as f64 - 1.0) / 2.0;
    let (zl, zu) = (beta / (theta2 * theta2), beta / (theta1 * theta1));
    let mass = ln_gamma_interval_mass(zl, zu, s);
    Ok(
        -std::f64::consts::LN_2
            + (1.0 - nr as f64) / 2.0 * beta.ln()
            + ln_gamma_unchecked(s)
            + mass,
    )
}

/// Draws σ from the density proportional to `σ^{-nr} e^{-β/σ²}` on
/// `(θ₁, θ₂)`.
///
/// With `z = β/σ²` the target is a unit-scale gamma of shape `(nr-1)/2`
/// truncated to `[β/θ₂², β/θ₁²]`. A uniform draw is pushed through the
/// inverse of the truncated CDF by bisection on `z`, with all CDF values
/// kept in the log domain.
pub fn sample_sigma_posterior(
    rng: &mut RngStream,
    beta: f64,
    nr: usize,
    theta1: f64,
    theta2: f64,
) -> Result<f64> {
    check_sigma_args(beta, nr, theta1, theta2)?;
    let s = (nr as f64 - 1.0) / 2.0;
    let (zl, zu) = (beta / (theta2 * theta2), beta / (theta1 * theta1));
    let u = rng.uniform_open();

    let z = if zl == zu {
        zl
    } else {
        let ln_total = ln_gamma_interval_mass(zl, zu, s);
        let target = u.ln() + ln_total;
        if !target.is_finite() {
            return Err(Error::NumericallyZero(format!(
                "noise-scale posterior has no mass on ({theta1}, {theta2}) for beta = {beta}, nr = {nr}"
            )));
        }
        let (mut lo, mut hi) = (zl, zu);
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-12 || mid <= lo || mid >= hi {
                break mid;
            }
            if ln_gamma_interval_mass(zl, mid, s) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };

    let sigma = (beta / z).sqrt();
    Ok(sigma.clamp(theta1.next_up(), theta2.next_down()))
}

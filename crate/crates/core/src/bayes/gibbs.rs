use std::io::Write;

use super::posterior::{alpha_params_from, beta_from_values, kappa_params_stats};
use super::stats::PairStats;
use super::Hyperparams;
use crate::error::{Error, Result};
use crate::model::PairedDataset;
use crate::numerics::random::{sample_gaussian, sample_sigma_posterior, RngStream};

pub const DEFAULT_ITERATIONS: usize = 2000;
pub const DEFAULT_BURN_IN: usize = 1500;

/// Chain length, burn-in, starting values and random stream.
#[derive(Debug, Clone)]
pub struct GibbsConfig {
    /// Total iterations `M`.
    pub iterations: usize,
    /// Discarded leading iterations `m`.
    pub burn_in: usize,
    /// Initial shift; the prior mean `a` when `None`.
    pub kappa0: Option<f64>,
    /// Initial noise scale; `(θ₁ + θ₂)/2` when `None`.
    pub sigma0: Option<f64>,
    pub rng: RngStream,
    /// Keep every sample in the returned estimate.
    pub keep_trace: bool,
}

impl GibbsConfig {
    pub fn new(rng: RngStream) -> Self {
        GibbsConfig {
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            kappa0: None,
            sigma0: None,
            rng,
            keep_trace: false,
        }
    }

    pub fn with_length(mut self, iterations: usize, burn_in: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = burn_in;
        self
    }

    pub fn with_trace(mut self, keep: bool) -> Self {
        self.keep_trace = keep;
        self
    }

    /// Resolves the starting values against `hp` and validates.
    fn start(&self, hp: &Hyperparams) -> Result<(f64, f64)> {
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn-in ({}) must be smaller than the iteration count ({})",
                self.burn_in, self.iterations
            )));
        }
        let kappa0 = self.kappa0.unwrap_or(hp.a);
        let sigma0 = self.sigma0.unwrap_or(0.5 * (hp.theta1 + hp.theta2));
        if !kappa0.is_finite() {
            return Err(Error::invalid("initial shift must be finite"));
        }
        if !(sigma0 > hp.theta1 && sigma0 < hp.theta2) {
            return Err(Error::invalid(format!(
                "initial sigma {sigma0} lies outside ({}, {})",
                hp.theta1, hp.theta2
            )));
        }
        Ok((kappa0, sigma0))
    }
}

/// Every sample of a chain. Scales are stored row-major, `n` per
/// iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsTrace {
    n: usize,
    alpha: Vec<f64>,
    kappa: Vec<f64>,
    sigma: Vec<f64>,
    burn_in: usize,
}

impl GibbsTrace {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// Scales drawn at iteration `j` (0-based).
    pub fn alpha(&self, j: usize) -> &[f64] {
        &self.alpha[j * self.n..(j + 1) * self.n]
    }

    /// Chain of scale `i` across all iterations.
    pub fn alpha_chain(&self, i: usize) -> Vec<f64> {
        self.alpha.iter().skip(i).step_by(self.n).copied().collect()
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// `iter,alpha_1,…,alpha_n,kappa,sigma`, iterations numbered from 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "iter")?;
        for i in 1..=self.n {
            write!(w, ",alpha_{i}")?;
        }
        writeln!(w, ",kappa,sigma")?;
        for j in 0..self.len() {
            write!(w, "{}", j + 1)?;
            for a in self.alpha(j) {
                write!(w, ",{a}")?;
            }
            writeln!(w, ",{},{}", self.kappa[j], self.sigma[j])?;
        }
        Ok(())
    }
}

/// Posterior means over the post-burn-in iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesEstimate {
    pub alpha_mean: Vec<f64>,
    pub kappa_mean: f64,
    pub sigma_mean: f64,
    pub trace: Option<GibbsTrace>,
}

impl BayesEstimate {
    /// One scale for the subject: the mean of the per-reference scales.
    pub fn subject_alpha(&self) -> f64 {
        self.alpha_mean.iter().sum::<f64>() / self.alpha_mean.len() as f64
    }
}

fn degenerate(iteration: usize, detail: String) -> Error {
    Error::DegeneratePosterior { iteration, detail }
}

/// Runs one Gibbs chain.
///
/// Iteration `j` draws every `αᵢ` given `κ⁽ʲ⁻¹⁾, σ⁽ʲ⁻¹⁾`, then `κ` given
/// the new scales and `σ⁽ʲ⁻¹⁾`, then `σ` given both. Means are taken over
/// iterations `m+1 … M`.
pub fn run_gibbs(
    data: &PairedDataset,
    hp: &Hyperparams,
    cfg: &GibbsConfig,
) -> Result<BayesEstimate> {
    hp.validate()?;
    let (mut kappa, mut sigma) = cfg.start(hp)?;
    let st = PairStats::new(data);
    let n = data.n();
    let nr = n * data.r();
    let mut rng = cfg.rng.clone();
    let mut alphas = vec![0.0; n];

    let kept = cfg.iterations - cfg.burn_in;
    let mut sum_alpha = vec![0.0; n];
    let (mut sum_kappa, mut sum_sigma) = (0.0, 0.0);
    let mut trace = cfg.keep_trace.then(|| GibbsTrace {
        n,
        alpha: Vec::with_capacity(cfg.iterations * n),
        kappa: Vec::with_capacity(cfg.iterations),
        sigma: Vec::with_capacity(cfg.iterations),
        burn_in: cfg.burn_in,
    });

    for j in 1..=cfg.iterations {
        let zz = st.zz(kappa);
        for (i, a) in alphas.iter_mut().enumerate() {
            let (mu, sd) = alpha_params_from(zz, st.zw(i, kappa), sigma, hp);
            if !mu.is_finite() || !(sd > 0.0) || !sd.is_finite() {
                return Err(degenerate(
                    j,
                    format!("scale {} has mean {mu}, sd {sd}", i + 1),
                ));
            }
            *a = sample_gaussian(&mut rng, mu, sd)?;
        }

        let (mu, sd) = kappa_params_stats(&st, &alphas, sigma, hp);
        if !mu.is_finite() || !(sd > 0.0) || !sd.is_finite() {
            return Err(degenerate(j, format!("shift has mean {mu}, sd {sd}")));
        }
        kappa = sample_gaussian(&mut rng, mu, sd)?;

        let beta = beta_from_values(data, &alphas, kappa);
        sigma = sample_sigma_posterior(&mut rng, beta, nr, hp.theta1, hp.theta2)
            .map_err(|e| degenerate(j, format!("noise scale: {e}")))?;

        if j > cfg.burn_in {
            for (s, a) in sum_alpha.iter_mut().zip(&alphas) {
                *s += a;
            }
            sum_kappa += kappa;
            sum_sigma += sigma;
        }
        if let Some(t) = trace.as_mut() {
            t.alpha.extend_from_slice(&alphas);
            t.kappa.push(kappa);
            t.sigma.push(sigma);
        }
    }

    let k = kept as f64;
    Ok(BayesEstimate {
        alpha_mean: sum_alpha.into_iter().map(|s| s / k).collect(),
        kappa_mean: sum_kappa / k,
        sigma_mean: sum_sigma / k,
        trace,
    })
}

/// Standard error of the mean of a correlated chain by the method of
/// non-overlapping batch means.
pub fn batch_means_standard_error(samples: &[f64], batches: usize) -> f64 {
    let batches = batches.max(2).min(samples.len().max(2));
    let size = samples.len() / batches;
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = samples
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (var / means.len() as f64).sqrt()
}

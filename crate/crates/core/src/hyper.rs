//! Maximum-likelihood hyperparameters from the integrated likelihood.
//!
//! The scales `αᵢ` are integrated out in closed form; the remaining
//! integral over `(κ, σ)` is done by tensor Gauss-Legendre in the log
//! domain. The integrand is usually concentrated on a small part of the
//! `κ`/`σ` box, so by default the rule is laid over the region where the
//! log-integrand is within [`SUPPORT_DROP`] of its maximum (the rest
//! contributes below `e^-46` relative).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::bayes::Hyperparams;
use crate::error::{Error, Result};
use crate::model::PairedDataset;
use crate::numerics::optimize::{bounded_maximize, OptimizerConfig};
use crate::numerics::quadrature::GaussLegendre;

/// Log-integrand drop that delimits the integration support.
pub const SUPPORT_DROP: f64 = 46.0;

/// Width of the shift range in prior sds on each side of `a`.
pub const KAPPA_PRIOR_SDS: f64 = 8.0;

/// Minimum gap enforced between `θ₁` and `θ₂`, Hz.
pub const MIN_THETA_GAP: f64 = 1.0;

const LN_2: f64 = std::f64::consts::LN_2;
const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Quadrature settings for the `(κ, σ)` integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ILGrid {
    /// Shift range; `a ± 8b` when `None`.
    pub kappa_range: Option<(f64, f64)>,
    pub kappa_nodes: usize,
    pub sigma_nodes: usize,
    /// Node caps for the automatic doubling.
    pub max_kappa_nodes: usize,
    pub max_sigma_nodes: usize,
    /// Stop doubling once successive values differ by less than this.
    pub tolerance: f64,
    /// Restrict the rule to the region carrying the mass.
    pub focus: bool,
}

impl Default for ILGrid {
    fn default() -> Self {
        ILGrid {
            kappa_range: None,
            kappa_nodes: 64,
            sigma_nodes: 32,
            max_kappa_nodes: 512,
            max_sigma_nodes: 256,
            tolerance: 1e-6,
            focus: true,
        }
    }
}

impl ILGrid {
    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.kappa_range {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!(
                    "shift range must satisfy low < high, got ({lo}, {hi})"
                )));
            }
        }
        if self.kappa_nodes < 8 || self.sigma_nodes < 8 {
            return Err(Error::invalid(
                "integration grids need at least 8 nodes per axis",
            ));
        }
        if self.max_kappa_nodes < self.kappa_nodes || self.max_sigma_nodes < self.sigma_nodes {
            return Err(Error::invalid(
                "node caps must not be below the starting node counts",
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("grid tolerance must be positive"));
        }
        Ok(())
    }

    fn kappa_bounds(&self, hp: &Hyperparams) -> (f64, f64) {
        self.kappa_range
            .unwrap_or((hp.a - KAPPA_PRIOR_SDS * hp.b, hp.a + KAPPA_PRIOR_SDS * hp.b))
    }
}

/// Search box for the six hyperparameters, in `[a, b, c, d, θ₁, θ₂]`
/// order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperparamBounds {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
}

impl Default for HyperparamBounds {
    fn default() -> Self {
        HyperparamBounds {
            lower: [-500.0, 1.0, 0.5, 0.01, 0.1, 0.1 + MIN_THETA_GAP],
            upper: [1000.0, 500.0, 2.0, 0.5, 50.0, 500.0],
        }
    }
}

impl HyperparamBounds {
    pub fn validate(&self) -> Result<()> {
        for i in 0..6 {
            let (l, u) = (self.lower[i], self.upper[i]);
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::invalid(format!(
                    "bounds for `{}` must satisfy lower < upper, got [{l}, {u}]",
                    Hyperparams::NAMES[i]
                )));
            }
        }
        for i in [1, 3, 4] {
            if !(self.lower[i] > 0.0) {
                return Err(Error::invalid(format!(
                    "lower bound for `{}` must be positive",
                    Hyperparams::NAMES[i]
                )));
            }
        }
        if !(self.upper[5] >= self.lower[4] + MIN_THETA_GAP) {
            return Err(Error::invalid("the theta2 box leaves no room above theta1"));
        }
        Ok(())
    }

    pub fn contains(&self, hp: &Hyperparams) -> bool {
        hp.to_array()
            .iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }
}

/// One of the six hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperAxis {
    A,
    B,
    C,
    D,
    Theta1,
    Theta2,
}

impl HyperAxis {
    pub const ALL: [HyperAxis; 6] = [
        HyperAxis::A,
        HyperAxis::B,
        HyperAxis::C,
        HyperAxis::D,
        HyperAxis::Theta1,
        HyperAxis::Theta2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        Hyperparams::NAMES[self.index()]
    }
}

impl fmt::Display for HyperAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HyperAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HyperAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown hyperparameter `{s}`")))
    }
}

/// Per-dataset quantities for the closed-form `α` integral.
///
/// Each reference is split by least squares on `[X, 1]` as
/// `Yᵢ = pᵢX + qᵢ1 + eᵢ`; with `X = x̄1 + X̃` every residual norm becomes a
/// sum of non-negative terms, which avoids cancelling ~10⁸-sized inner
/// products.
#[derive(Debug, Clone)]
struct MarginalStats {
    n: f64,
    r: f64,
    x_mean: f64,
    /// ‖X̃‖²
    x_spread: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    /// ‖eᵢ‖²
    e: Vec<f64>,
}

impl MarginalStats {
    fn new(data: &PairedDataset) -> Self {
        let x = data.subject().values();
        let r = x.len() as f64;
        let x_mean = x.iter().sum::<f64>() / r;
        let x_spread: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
        let mut p = Vec::new();
        let mut q = Vec::new();
        let mut e = Vec::new();
        for y in data.references() {
            let y = y.values();
            let y_mean = y.iter().sum::<f64>() / r;
            let slope = if x_spread > 0.0 {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - x_mean) * (b - y_mean))
                    .sum::<f64>()
                    / x_spread
            } else {
                0.0
            };
            let icept = y_mean - slope * x_mean;
            let resid: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| (b - slope * a - icept).powi(2))
                .sum();
            p.push(slope);
            q.push(icept);
            e.push(resid);
        }
        MarginalStats {
            n: data.n() as f64,
            r,
            x_mean,
            x_spread,
            p,
            q,
            e,
        }
    }

    /// Log of the `α`-marginal likelihood without the `2^{..}π^{..}`
    /// constant.
    fn log_core(&self, kappa: f64, sigma: f64, c: f64, d: f64) -> f64 {
        let s2 = sigma * sigma;
        let d2 = d * d;
        let zc = self.x_mean + kappa;
        let zz = self.x_spread + self.r * zc * zc;
        let ratio = 1.0 + d2 * zz / s2;
        let a_coef = zz / (2.0 * s2) + 1.0 / (2.0 * d2);
        let mut quad = 0.0;
        for i in 0..self.p.len() {
            let (p, q) = (self.p[i], self.q[i]);
            let zw = p * self.x_spread + self.r * zc * (p * self.x_mean + q + kappa);
            let ah = (c + d2 * zw / s2) / ratio;
            let off = p - ah;
            let lvl = off * self.x_mean + q - kappa * (ah - 1.0);
            let resid = self.e[i] + off * off * self.x_spread + self.r * lvl * lvl;
            quad += resid / (2.0 * s2) + (ah - c).powi(2) / (2.0 * d2);
        }
        -0.5 * self.n * a_coef.ln() - self.n * d.ln() - self.n * self.r * sigma.ln() - quad
    }

    fn log_constant(&self) -> f64 {
        -0.5 * self.n * (self.r + 1.0) * LN_2 - 0.5 * self.n * self.r * LN_PI
    }
}

/// Log of the likelihood of `(κ, σ, c, d)` with every `αᵢ` integrated out
/// against its `N(c, d²)` prior, constants included.
pub fn log_integrand_alpha_marginal(
    kappa: f64,
    sigma: f64,
    c: f64,
    d: f64,
    data: &PairedDataset,
) -> Result<f64> {
    if !(sigma > 0.0) || !(d > 0.0) {
        return Err(Error::domain(format!(
            "need sigma > 0 and d > 0, got ({sigma}, {d})"
        )));
    }
    let st = MarginalStats::new(data);
    let v = st.log_core(kappa, sigma, c, d) + st.log_constant();
    if !v.is_finite() {
        return Err(Error::NonFinite {
            point: vec![kappa, sigma],
            value: v,
        });
    }
    Ok(v)
}

/// The additive constant left out of [`log_integrated_likelihood`]:
/// `-(n(r+1)/2) ln 2 - (nr/2) ln π - ½ ln 2π`.
pub fn dropped_log_constant(n: usize, r: usize) -> f64 {
    let (n, r) = (n as f64, r as f64);
    -0.5 * n * (r + 1.0) * LN_2 - 0.5 * n * r * LN_PI - 0.5 * LN_2PI
}

/// Log integrand over `(κ, σ)` of the reported (constant-free) likelihood.
struct Integrand<'a> {
    st: &'a MarginalStats,
    hp: Hyperparams,
    offset: f64,
}

impl<'a> Integrand<'a> {
    fn new(st: &'a MarginalStats, hp: &Hyperparams) -> Self {
        // the shift-prior normalizer depends on b, so it stays
        let offset = -hp.b.ln() - (hp.theta2 - hp.theta1).ln();
        Integrand {
            st,
            hp: *hp,
            offset,
        }
    }

    fn eval(&self, kappa: f64, sigma: f64) -> f64 {
        let dk = kappa - self.hp.a;
        self.st.log_core(kappa, sigma, self.hp.c, self.hp.d)
            - dk * dk / (2.0 * self.hp.b * self.hp.b)
            + self.offset
    }
}

#[derive(Debug, Clone, Copy)]
struct Support {
    k: (f64, f64),
    s: (f64, f64),
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Finds the box outside which the log integrand is below its maximum
/// minus [`SUPPORT_DROP`].
fn locate_support(f: &Integrand<'_>, outer: Support) -> Result<Support> {
    const SCAN: usize = 49;
    let (k0, k1) = outer.k;
    let (s0, s1) = outer.s;
    let (ls0, ls1) = (s0.ln(), s1.ln());
    let mut best = (f64::NEG_INFINITY, k0, s0);
    for i in 0..SCAN {
        let k = k0 + (k1 - k0) * i as f64 / (SCAN - 1) as f64;
        for j in 0..SCAN {
            let s = (ls0 + (ls1 - ls0) * j as f64 / (SCAN - 1) as f64)
                .exp()
                .clamp(s0, s1);
            let v = f.eval(k, s);
            if v > best.0 {
                best = (v, k, s);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NumericallyZero(format!(
            "log integrand is {} everywhere on the scan grid",
            best.0
        )));
    }
    let cfg = OptimizerConfig {
        max_iterations: 4000,
        x_tolerance: 1e-9 * (k1 - k0).min(s1 - s0),
        f_tolerance: 1e-10,
        initial_simplex_scale: 0.02,
    };
    let refined = bounded_maximize(
        |p| f.eval(p[0], p[1]),
        &[k0, s0],
        &[k1, s1],
        &[best.1, best.2],
        &cfg,
    )?;
    let (peak, km, sm) = (refined.f.max(best.0), refined.x[0], refined.x[1]);
    let floor = peak - SUPPORT_DROP;

    // distance along one axis to the threshold crossing, by bisection
    let reach = |from: f64, to: f64, g: &dyn Fn(f64) -> f64| -> f64 {
        if g(to) >= floor {
            return to;
        }
        let (mut inside, mut outside) = (from, to);
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if g(mid) >= floor {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() <= 1e-12 * (1.0 + outside.abs()) {
                break;
            }
        }
        outside
    };
    let gk = |k: f64| f.eval(k, sm);
    let gs = |s: f64| f.eval(km, s);
    let mut sup = Support {
        k: (reach(km, k0, &gk), reach(km, k1, &gk)),
        s: (reach(sm, s0, &gs), reach(sm, s1, &gs)),
    };

    // grow any side whose edge still carries mass
    const EDGE: usize = 33;
    for _ in 0..60 {
        let mut grown = false;
        let (kl, kh) = sup.k;
        let (sl, sh) = sup.s;
        let along = |lo: f64, hi: f64, t: usize| lo + (hi - lo) * t as f64 / (EDGE - 1) as f64;
        let hot = |g: &dyn Fn(usize) -> f64| (0..EDGE).any(|t| g(t) >= floor);
        let kw = kh - kl;
        let sw = sh - sl;
        if kl > k0 && hot(&|t| f.eval(kl, along(sl, sh, t))) {
            sup.k.0 = (kl - 0.5 * kw).max(k0);
            grown = true;
        }
        if kh < k1 && hot(&|t| f.eval(kh, along(sl, sh, t))) {
            sup.k.1 = (kh + 0.5 * kw).min(k1);
            grown = true;
        }
        if sl > s0 && hot(&|t| f.eval(along(kl, kh, t), sl)) {
            sup.s.0 = (sl - 0.5 * sw).max(s0);
            grown = true;
        }
        if sh < s1 && hot(&|t| f.eval(along(kl, kh, t), sh)) {
            sup.s.1 = (sh + 0.5 * sw).min(s1);
            grown = true;
        }
        if !grown {
            break;
        }
    }
    if !(sup.k.0 < sup.k.1) || !(sup.s.0 < sup.s.1) {
        return Ok(outer);
    }
    Ok(sup)
}

fn integrate_on(f: &Integrand<'_>, sup: Support, kn: usize, sn: usize) -> Result<f64> {
    let gk = GaussLegendre::new(kn)?;
    let gs = GaussLegendre::new(sn)?;
    let kpts: Vec<(f64, f64)> = gk
        .mapped(sup.k.0, sup.k.1)
        .map(|(x, w)| (x, w.ln()))
        .collect();
    let spts: Vec<(f64, f64)> = gs
        .mapped(sup.s.0, sup.s.1)
        .map(|(x, w)| (x, w.ln()))
        .collect();
    let rows: Vec<Result<f64>> = spts
        .par_iter()
        .map(|&(s, lws)| {
            let mut vals = Vec::with_capacity(kpts.len());
            for &(k, lwk) in &kpts {
                let v = f.eval(k, s);
                if v.is_nan() || v == f64::INFINITY {
                    return Err(Error::NonFinite {
                        point: vec![k, s],
                        value: v,
                    });
                }
                vals.push(v + lwk + lws);
            }
            Ok(log_sum_exp(&vals))
        })
        .collect();
    let rows: Vec<f64> = rows.into_iter().collect::<Result<_>>()?;
    let total = log_sum_exp(&rows);
    if total == f64::NEG_INFINITY {
        return Err(Error::NumericallyZero(
            "every integrand evaluation underflowed".into(),
        ));
    }
    Ok(total)
}

/// A log integrated likelihood with the grid it was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ILValue {
    pub value: f64,
    pub kappa_nodes: usize,
    pub sigma_nodes: usize,
    /// Change from the previous refinement (`NaN` for a single grid).
    pub last_change: f64,
    pub converged: bool,
}

fn prepare(
    hp: &Hyperparams,
    data: &PairedDataset,
    grid: &ILGrid,
) -> Result<(MarginalStats, Support)> {
    hp.validate()?;
    grid.validate()?;
    let st = MarginalStats::new(data);
    let outer = Support {
        k: grid.kappa_bounds(hp),
        s: (hp.theta1, hp.theta2),
    };
    Ok((st, outer))
}

/// Log integrated likelihood on exactly `grid.kappa_nodes × grid.sigma_nodes`
/// nodes, no refinement.
pub fn log_integrated_likelihood_fixed(
    hp: &Hyperparams,
    data: &PairedDataset,
    grid: &ILGrid,
) -> Result<f64> {
    let (st, outer) = prepare(hp, data, grid)?;
    let f = Integrand::new(&st, hp);
    let sup = if grid.focus {
        locate_support(&f, outer)?
    } else {
        outer
    };
    integrate_on(&f, sup, grid.kappa_nodes, grid.sigma_nodes)
}

/// Log integrated likelihood, doubling both node counts until successive
/// values agree within `grid.tolerance` or the caps are hit.
pub fn log_integrated_likelihood_converged(
    hp: &Hyperparams,
    data: &PairedDataset,
    grid: &ILGrid,
) -> Result<ILValue> {
    let (st, outer) = prepare(hp, data, grid)?;
    let f = Integrand::new(&st, hp);
    let sup = if grid.focus {
        locate_support(&f, outer)?
    } else {
        outer
    };
    let (mut kn, mut sn) = (grid.kappa_nodes, grid.sigma_nodes);
    let mut value = integrate_on(&f, sup, kn, sn)?;
    loop {
        if kn * 2 > grid.max_kappa_nodes && sn * 2 > grid.max_sigma_nodes {
            warn!("integrated likelihood not converged at {kn}x{sn} nodes");
            return Ok(ILValue {
                value,
                kappa_nodes: kn,
                sigma_nodes: sn,
                last_change: f64::NAN,
                converged: false,
            });
        }
        let (kn2, sn2) = (
            (kn * 2).min(grid.max_kappa_nodes),
            (sn * 2).min(grid.max_sigma_nodes),
        );
        let next = integrate_on(&f, sup, kn2, sn2)?;
        let change = (next - value).abs();
        kn = kn2;
        sn = sn2;
        value = next;
        if change < grid.tolerance {
            return Ok(ILValue {
                value,
                kappa_nodes: kn,
                sigma_nodes: sn,
                last_change: change,
                converged: true,
            });
        }
    }
}

/// Log of `∫∫ A^{-n/2} e^{-(κ-a)²/2b² + Σ(B²/A - C)} / (b dⁿ σ^{nr} (θ₂-θ₁)) dκ dσ`,
/// i.e. the integrated likelihood less [`dropped_log_constant`].
pub fn log_integrated_likelihood(
    hp: &Hyperparams,
    data: &PairedDataset,
    grid: &ILGrid,
) -> Result<f64> {
    Ok(log_integrated_likelihood_converged(hp, data, grid)?.value)
}

/// Result of the hyperparameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparamFit {
    pub hyperparams: Hyperparams,
    pub log_il: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Data-driven starting point inside `bounds`.
fn starting_point(data: &PairedDataset, bounds: &HyperparamBounds) -> [f64; 6] {
    let st = MarginalStats::new(data);
    let n = st.p.len();
    // intercept qᵢ = κ(pᵢ - 1): regress through the origin on (pᵢ - 1)
    let (num, den) = st.p.iter().zip(&st.q).fold((0.0, 0.0), |(nu, de), (p, q)| {
        (nu + q * (p - 1.0), de + (p - 1.0).powi(2))
    });
    let kappa0 = if den > 1e-12 { num / den } else { 0.0 };
    let c0 = st.p.iter().sum::<f64>() / n as f64;
    let d0 = if n > 1 {
        (st.p.iter().map(|p| (p - c0).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.05
    };
    let sigma0 = (st.e.iter().sum::<f64>() / (n as f64 * st.r)).sqrt();
    let raw = [kappa0, 50.0, c0, d0, 0.5 * sigma0, 2.0 * sigma0];
    let mut x = [0.0; 6];
    for i in 0..6 {
        let v = if raw[i].is_finite() {
            raw[i]
        } else {
            0.5 * (bounds.lower[i] + bounds.upper[i])
        };
        x[i] = v.clamp(bounds.lower[i], bounds.upper[i]);
    }
    if x[5] < x[4] + MIN_THETA_GAP {
        x[5] = (x[4] + MIN_THETA_GAP).min(bounds.upper[5]);
        if x[5] < x[4] + MIN_THETA_GAP {
            x[4] = x[5] - MIN_THETA_GAP;
        }
    }
    x
}

/// Maps a box point to feasible hyperparameters and the penalty paid for
/// repairing `θ₂ ≥ θ₁ + gap`.
fn repair(x: &[f64]) -> (Hyperparams, f64) {
    let mut v = [x[0], x[1], x[2], x[3], x[4], x[5]];
    let need = v[4] + MIN_THETA_GAP;
    let mut penalty = 0.0;
    if v[5] < need {
        penalty = 1e3 * (need - v[5]) * (1.0 + need - v[5]);
        v[5] = need;
    }
    (
        Hyperparams {
            a: v[0],
            b: v[1],
            c: v[2],
            d: v[3],
            theta1: v[4],
            theta2: v[5],
        },
        penalty,
    )
}

/// Maximizes the log integrated likelihood over `bounds`.
pub fn fit_hyperparams(
    data: &PairedDataset,
    bounds: &HyperparamBounds,
    grid: &ILGrid,
    cfg: &OptimizerConfig,
) -> Result<HyperparamFit> {
    bounds.validate()?;
    grid.validate()?;
    if data.n() < 2 {
        warn!(
            "only {} reference: the prior widths b and d are weakly identified",
            data.n()
        );
    }
    let x0 = starting_point(data, bounds);
    let objective = |x: &[f64]| {
        let (hp, penalty) = repair(x);
        match log_integrated_likelihood(&hp, data, grid) {
            Ok(v) => v - penalty,
            Err(e) => {
                warn!("integrated likelihood failed at {hp:?}: {e}");
                f64::NAN
            }
        }
    };
    let m = bounded_maximize(objective, &bounds.lower, &bounds.upper, &x0, cfg)?;
    let (hp, _) = repair(&m.x);
    hp.validate()?;
    let log_il = log_integrated_likelihood(&hp, data, grid)?;
    Ok(HyperparamFit {
        hyperparams: hp,
        log_il,
        iterations: m.iterations,
        converged: m.converged,
    })
}

/// [`fit_hyperparams`] returning only the optimum.
pub fn estimate_hyperparams(
    data: &PairedDataset,
    bounds: &HyperparamBounds,
    grid: &ILGrid,
    cfg: &OptimizerConfig,
) -> Result<Hyperparams> {
    Ok(fit_hyperparams(data, bounds, grid, cfg)?.hyperparams)
}

/// Feasible scan interval for one axis with the others held at `center`.
pub fn scan_range(center: &Hyperparams, axis: HyperAxis, bounds: &HyperparamBounds) -> (f64, f64) {
    let i = axis.index();
    let (mut lo, mut hi) = (bounds.lower[i], bounds.upper[i]);
    match axis {
        HyperAxis::Theta1 => hi = hi.min(center.theta2 - MIN_THETA_GAP),
        HyperAxis::Theta2 => lo = lo.max(center.theta1 + MIN_THETA_GAP),
        _ => {}
    }
    (lo, hi)
}

/// Log integrated likelihood at `points` evenly spaced values of one
/// hyperparameter across its feasible range, the others fixed.
pub fn axis_scan(
    data: &PairedDataset,
    center: &Hyperparams,
    axis: HyperAxis,
    bounds: &HyperparamBounds,
    points: usize,
    grid: &ILGrid,
) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::invalid("a scan needs at least two points"));
    }
    let (lo, hi) = scan_range(center, axis, bounds);
    if !(lo < hi) {
        return Err(Error::invalid(format!(
            "no feasible range to scan `{axis}`"
        )));
    }
    (0..points)
        .map(|k| {
            let v = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let mut arr = center.to_array();
            arr[axis.index()] = v;
            let hp = Hyperparams::from_slice(&arr)?;
            Ok((v, log_integrated_likelihood(&hp, data, grid)?))
        })
        .collect()
}

/// Two columns: the scanned hyperparameter (named in the header) and
/// `log_il`.
pub fn write_scan_csv<W: Write>(
    mut w: W,
    axis: HyperAxis,
    rows: &[(f64, f64)],
) -> std::io::Result<()> {
    writeln!(w, "{axis},log_il")?;
    for (v, l) in rows {
        writeln!(w, "{v},{l}")?;
    }
    Ok(())
}

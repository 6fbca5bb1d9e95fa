//! Error-minimization estimators of the warp parameters (MMSE / MMAE),
//! optional clamping of the per-pair shift, and the subject- and
//! database-level averages.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{warp_value, FormantVector};
use crate::numerics::optimize::{nelder_mead_with_steps, OptimizerConfig};

/// Below this `|α̂ - 1|` the shift estimate is flagged as unreliable.
pub const UNRELIABLE_ALPHA_GAP: f64 = 1e-3;

/// Below this magnitude the shift-average denominator counts as zero.
pub const SHIFT_DENOMINATOR_EPS: f64 = 1e-8;

/// Initial simplex edges for `(α, κ)`.
const PAIR_STEPS: [f64; 2] = [0.05, 50.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Mse,
    Mae,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Mse => "mse",
            Criterion::Mae => "mae",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Criterion::Mse),
            "mae" => Ok(Criterion::Mae),
            other => Err(Error::invalid(format!(
                "unknown criterion `{other}` (expected mse or mae)"
            ))),
        }
    }
}

/// Optional outlier handling applied to every per-pair shift before
/// averaging.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Adjustment {
    #[default]
    None,
    /// Clamp each per-pair shift into `[0, L]`.
    Clamped(f64),
}

/// What [`aggregate`] does with a subject whose shift denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegenerateShiftPolicy {
    #[default]
    Error,
    /// Drop the subject from the database shift and log a warning.
    Exclude,
}

/// Result of fitting one subject against one reference.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEstimate {
    pub subject_id: String,
    pub reference_id: String,
    pub alpha: f64,
    pub kappa: f64,
    pub objective_value: f64,
    pub criterion: Criterion,
    /// Set when `|α̂ - 1|` is too small for the shift to be identified.
    pub kappa_unreliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEstimate {
    pub alpha_by_subject: BTreeMap<String, f64>,
    /// Per-subject shifts that entered the database average.
    pub kappa_by_subject: BTreeMap<String, f64>,
    /// Subjects whose shift average was undefined.
    pub excluded_subjects: Vec<String>,
    pub kappa: f64,
    pub pair_estimates: Vec<PairEstimate>,
    pub adjustment: Adjustment,
}

fn residuals<'a>(
    y: &'a [f64],
    x: &'a [f64],
    alpha: f64,
    kappa: f64,
) -> impl Iterator<Item = f64> + 'a {
    y.iter()
        .zip(x)
        .map(move |(&yk, &xk)| yk - warp_value(xk, alpha, kappa))
}

/// Squared Euclidean norm of the residual `y - (αx + κ(α-1)1)`.
pub fn mse_objective(y: &FormantVector, x: &FormantVector, alpha: f64, kappa: f64) -> Result<f64> {
    x.check_layout(y)?;
    Ok(residuals(y.values(), x.values(), alpha, kappa)
        .map(|e| e * e)
        .sum())
}

/// Sum of absolute residual components.
pub fn mae_objective(y: &FormantVector, x: &FormantVector, alpha: f64, kappa: f64) -> Result<f64> {
    x.check_layout(y)?;
    Ok(residuals(y.values(), x.values(), alpha, kappa)
        .map(f64::abs)
        .sum())
}

/// Fits `(α, κ)` for one pair by Nelder-Mead from `(1, 0)`.
pub fn estimate_pair(
    y: &FormantVector,
    x: &FormantVector,
    criterion: Criterion,
    cfg: &OptimizerConfig,
) -> Result<PairEstimate> {
    x.check_layout(y)?;
    if x.r() < 2 {
        return Err(Error::invalid(
            "a pair fit needs at least two formant values",
        ));
    }
    let (yv, xv) = (y.values(), x.values());
    let objective = |p: &[f64]| -> f64 {
        let it = residuals(yv, xv, p[0], p[1]);
        match criterion {
            Criterion::Mse => it.map(|e| e * e).sum(),
            Criterion::Mae => it.map(f64::abs).sum(),
        }
    };
    let m = nelder_mead_with_steps(objective, &[1.0, 0.0], &PAIR_STEPS, cfg)?;
    if !m.converged {
        warn!(
            "pair ({}, {}) stopped after {} iterations without meeting the tolerances",
            x.speaker_id(),
            y.speaker_id(),
            m.iterations
        );
    }
    let (alpha, kappa) = (m.x[0], m.x[1]);
    Ok(PairEstimate {
        subject_id: x.speaker_id().to_string(),
        reference_id: y.speaker_id().to_string(),
        alpha,
        kappa,
        objective_value: m.f,
        criterion,
        kappa_unreliable: (alpha - 1.0).abs() < UNRELIABLE_ALPHA_GAP,
    })
}

/// Fits every subject against every reference with a different speaker
/// id. Pairs run in parallel; output order is subject-major.
pub fn estimate_pairs(
    subjects: &[FormantVector],
    references: &[FormantVector],
    criterion: Criterion,
    cfg: &OptimizerConfig,
) -> Result<Vec<PairEstimate>> {
    let jobs: Vec<(&FormantVector, &FormantVector)> = subjects
        .iter()
        .flat_map(|x| {
            references
                .iter()
                .filter(move |y| y.speaker_id() != x.speaker_id())
                .map(move |y| (x, y))
        })
        .collect();
    jobs.par_iter()
        .map(|(x, y)| estimate_pair(y, x, criterion, cfg))
        .collect()
}

/// `max(0, min(κ, L))`.
pub fn clamp_kappa(kappa: f64, limit: f64) -> f64 {
    kappa.min(limit).max(0.0)
}

/// Averages per-pair estimates into per-subject scales and one database
/// shift.
///
/// For subject `j`: `α_j` is the mean of its `α_ij`, and
/// `κ_j = Σ κ_ij (α_ij - 1) / Σ (α_ij - 1)`. The database shift is the
/// mean of the `κ_j`.
pub fn aggregate(
    pairs: &[PairEstimate],
    adjustment: Adjustment,
    policy: DegenerateShiftPolicy,
) -> Result<ClassicalEstimate> {
    if pairs.is_empty() {
        return Err(Error::invalid("no pair estimates to aggregate"));
    }
    let limit = match adjustment {
        Adjustment::None => None,
        Adjustment::Clamped(l) if l > 0.0 && l.is_finite() => Some(l),
        Adjustment::Clamped(l) => {
            return Err(Error::invalid(format!(
                "clamp limit must be positive, got {l}"
            )))
        }
    };

    // (Σα, count, Σκ(α-1), Σ(α-1))
    let mut sums: BTreeMap<&str, (f64, usize, f64, f64)> = BTreeMap::new();
    for p in pairs {
        let kappa = limit.map_or(p.kappa, |l| clamp_kappa(p.kappa, l));
        let e = sums
            .entry(p.subject_id.as_str())
            .or_insert((0.0, 0, 0.0, 0.0));
        e.0 += p.alpha;
        e.1 += 1;
        e.2 += kappa * (p.alpha - 1.0);
        e.3 += p.alpha - 1.0;
    }

    let mut alpha_by_subject = BTreeMap::new();
    let mut kappa_by_subject = BTreeMap::new();
    let mut excluded_subjects = Vec::new();
    for (subject, (sa, count, num, den)) in sums {
        alpha_by_subject.insert(subject.to_string(), sa / count as f64);
        if den.abs() < SHIFT_DENOMINATOR_EPS {
            match policy {
                DegenerateShiftPolicy::Error => {
                    return Err(Error::DegenerateShift {
                        subject: subject.to_string(),
                        denominator: den,
                    })
                }
                DegenerateShiftPolicy::Exclude => {
                    warn!("subject `{subject}` left out of the database shift: sum of (alpha - 1) is {den:e}");
                    excluded_subjects.push(subject.to_string());
                    continue;
                }
            }
        }
        kappa_by_subject.insert(subject.to_string(), num / den);
    }
    if kappa_by_subject.is_empty() {
        return Err(Error::DegenerateShift {
            subject: excluded_subjects.join(","),
            denominator: 0.0,
        });
    }
    let kappa = kappa_by_subject.values().sum::<f64>() / kappa_by_subject.len() as f64;

    Ok(ClassicalEstimate {
        alpha_by_subject,
        kappa_by_subject,
        excluded_subjects,
        kappa,
        pair_estimates: pairs.to_vec(),
        adjustment,
    })
}

/// One row per pair: `subject_id,reference_id,criterion,alpha,kappa,objective,kappa_unreliable`.
pub fn write_pairs_csv<W: Write>(mut w: W, pairs: &[PairEstimate]) -> std::io::Result<()> {
    writeln!(
        w,
        "subject_id,reference_id,criterion,alpha,kappa,objective,kappa_unreliable"
    )?;
    for p in pairs {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.subject_id,
            p.reference_id,
            p.criterion,
            p.alpha,
            p.kappa,
            p.objective_value,
            p.kappa_unreliable
        )?;
    }
    Ok(())
}

//! Derivative-free minimization (Nelder-Mead) and a box-constrained
//! maximizer built on it.

use crate::error::{Error, Result};

/// Stopping rules and simplex size for [`nelder_mead_minimize`] and
/// [`bounded_maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Upper bound on simplex iterations, summed over restarts.
    pub max_iterations: usize,
    /// Absolute tolerance on the simplex diameter (max-norm).
    pub x_tolerance: f64,
    /// Absolute tolerance on the spread of objective values.
    pub f_tolerance: f64,
    /// Relative size of the initial simplex edge along each axis.
    pub initial_simplex_scale: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 20_000,
            x_tolerance: 1e-8,
            f_tolerance: 1e-10,
            initial_simplex_scale: 0.05,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || !(self.x_tolerance > 0.0)
            || !(self.f_tolerance > 0.0)
            || !(self.initial_simplex_scale > 0.0)
        {
            return Err(Error::invalid(format!(
                "optimizer settings must be strictly positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Result of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of a bounded maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const MAX_RESTARTS: usize = 8;

fn evaluate<F>(f: &mut F, x: &[f64]) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let v = f(x);
    if v.is_nan() || v.is_infinite() {
        return Err(Error::NonFinite {
            point: x.to_vec(),
            value: v,
        });
    }
    Ok(v)
}

/// Default per-axis initial steps: a fraction of the coordinate, or of
/// one unit when the coordinate is near zero.
pub fn default_steps(x0: &[f64], scale: f64) -> Vec<f64> {
    x0.iter()
        .map(|&v| {
            if v.abs() > 1e-8 {
                scale * v.abs()
            } else {
                scale
            }
        })
        .collect()
}

/// Minimizes `f` starting at `x0`.
///
/// The simplex is restarted from the best vertex after each convergence
/// until a restart no longer improves the objective by more than
/// `f_tolerance`.
pub fn nelder_mead_minimize<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let steps = default_steps(x0, cfg.initial_simplex_scale);
    nelder_mead_with_steps(f, x0, &steps, cfg)
}

/// Like [`nelder_mead_minimize`] with explicit initial simplex edges.
pub fn nelder_mead_with_steps<F>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    cfg: &OptimizerConfig,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    run_simplex(&mut f, x0, steps, cfg, &mut |x: &mut [f64]| {
        let _ = x;
    })
}

/// Core loop shared by the unconstrained and the box-projected variants.
/// `project` is applied to every trial vertex before evaluation.
fn run_simplex<F, P>(
    f: &mut F,
    x0: &[f64],
    steps: &[f64],
    cfg: &OptimizerConfig,
    project: &mut P,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&mut [f64]),
{
    cfg.validate()?;
    let k = x0.len();
    if k == 0 {
        return Err(Error::invalid(
            "cannot optimize over a zero-dimensional space",
        ));
    }
    if steps.len() != k {
        return Err(Error::invalid("initial step vector has the wrong length"));
    }
    let mut start = x0.to_vec();
    project(&mut start);
    let f0 = evaluate(f, &start)?;
    let mut best_x = start;
    let mut best_f = f0;
    let mut iterations = 0;
    let mut converged = false;
    let mut step_scale = 1.0;

    for restart in 0..=MAX_RESTARTS {
        let trial_steps: Vec<f64> = steps.iter().map(|s| s * step_scale).collect();
        let (x, fx, it, conv) = simplex_pass(
            f,
            &best_x,
            best_f,
            &trial_steps,
            cfg,
            project,
            cfg.max_iterations - iterations,
        )?;
        iterations += it;
        let improvement = best_f - fx;
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = conv;
        if !conv || iterations >= cfg.max_iterations {
            break;
        }
        if restart > 0 && improvement <= cfg.f_tolerance {
            break;
        }
        step_scale *= 0.5;
    }

    Ok(Minimum {
        x: best_x,
        f: best_f,
        iterations,
        converged,
    })
}

#[allow(clippy::type_complexity)]
fn simplex_pass<F, P>(
    f: &mut F,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    cfg: &OptimizerConfig,
    project: &mut P,
    budget: usize,
) -> Result<(Vec<f64>, f64, usize, bool)>
where
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&mut [f64]),
{
    let k = x0.len();
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(k + 1);
    verts.push(x0.to_vec());
    vals.push(f0);
    for i in 0..k {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        project(&mut v);
        if v[i] == x0[i] {
            // projected back onto the start; step the other way
            v[i] -= steps[i];
            project(&mut v);
        }
        vals.push(evaluate(f, &v)?);
        verts.push(v);
    }

    let mut order: Vec<usize> = (0..=k).collect();
    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; k];
    let mut trial = vec![0.0; k];

    while iterations < budget {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let best = order[0];
        let worst = order[k];
        let second_worst = order[k - 1];

        let f_spread = vals[worst] - vals[best];
        let diameter = verts
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&verts[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < cfg.x_tolerance && f_spread < cfg.f_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &idx in &order[..k] {
            for (c, v) in centroid.iter_mut().zip(&verts[idx]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= k as f64);

        let point = |coef: f64, out: &mut Vec<f64>, worst_v: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(worst_v) {
                *o = c + coef * (c - w);
            }
        };

        point(REFLECT, &mut trial, &verts[worst]);
        project(&mut trial);
        let fr = evaluate(f, &trial)?;

        if fr < vals[best] {
            let reflected = trial.clone();
            point(EXPAND, &mut trial, &verts[worst]);
            project(&mut trial);
            let fe = evaluate(f, &trial)?;
            if fe < fr {
                verts[worst].copy_from_slice(&trial);
                vals[worst] = fe;
            } else {
                verts[worst] = reflected;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second_worst] {
            verts[worst].copy_from_slice(&trial);
            vals[worst] = fr;
            continue;
        }

        // contraction, outside if the reflection beat the worst vertex
        let outside = fr < vals[worst];
        let coef = if outside { CONTRACT } else { -CONTRACT };
        let reflected = trial.clone();
        point(coef, &mut trial, &verts[worst]);
        project(&mut trial);
        let fc = evaluate(f, &trial)?;
        if (outside && fc <= fr) || (!outside && fc < vals[worst]) {
            verts[worst].copy_from_slice(&trial);
            vals[worst] = fc;
            continue;
        }
        if outside && fr < vals[worst] {
            verts[worst] = reflected;
            vals[worst] = fr;
        }

        // shrink toward the best vertex
        let best_v = verts[best].clone();
        for idx in 0..=k {
            if idx == best {
                continue;
            }
            for (v, b) in verts[idx].iter_mut().zip(&best_v) {
                *v = b + SHRINK * (*v - b);
            }
            project(&mut verts[idx]);
            vals[idx] = evaluate(f, &verts[idx])?;
        }
    }

    let (best_idx, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex has k + 1 >= 2 vertices");
    Ok((
        verts[best_idx].clone(),
        vals[best_idx],
        iterations,
        converged,
    ))
}

/// Maximizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// Nelder-Mead runs in unit-box coordinates; every trial vertex is
/// projected onto the box, so optima on a face are reached exactly.
/// `x_tolerance` is measured in the original coordinates.
pub fn bounded_maximize<F>(
    mut f: F,
    lower: &[f64],
    upper: &[f64],
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<Maximum>
where
    F: FnMut(&[f64]) -> f64,
{
    let k = x0.len();
    if lower.len() != k || upper.len() != k {
        return Err(Error::invalid(
            "bounds and starting point differ in dimension",
        ));
    }
    for i in 0..k {
        if !(lower[i] < upper[i]) {
            return Err(Error::invalid(format!(
                "bound {i}: lower {} is not below upper {}",
                lower[i], upper[i]
            )));
        }
        if !(x0[i] >= lower[i] && x0[i] <= upper[i]) {
            return Err(Error::Infeasible(format!(
                "coordinate {i} = {} lies outside [{}, {}]",
                x0[i], lower[i], upper[i]
            )));
        }
    }
    let width: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let to_box = |u: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend(
            u.iter()
                .enumerate()
                .map(|(i, &ui)| lower[i] + width[i] * ui),
        );
    };
    let u0: Vec<f64> = (0..k).map(|i| (x0[i] - lower[i]) / width[i]).collect();
    // x tolerance in unit coordinates: the tightest axis decides
    let unit_tol = width
        .iter()
        .map(|w| cfg.x_tolerance / w)
        .fold(f64::INFINITY, f64::min);
    let unit_cfg = OptimizerConfig {
        x_tolerance: unit_tol,
        ..*cfg
    };
    let steps = vec![cfg.initial_simplex_scale; k];

    let mut buf = Vec::with_capacity(k);
    let mut neg = |u: &[f64]| {
        to_box(u, &mut buf);
        -f(&buf)
    };
    let min = run_simplex(&mut neg, &u0, &steps, &unit_cfg, &mut |u: &mut [f64]| {
        for v in u.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
    })
    .map_err(|e| match e {
        Error::NonFinite { point, value } => {
            let mut x = Vec::new();
            to_box(&point, &mut x);
            Error::NonFinite {
                point: x,
                value: -value,
            }
        }
        other => other,
    })?;
    let mut x = Vec::new();
    to_box(&min.x, &mut x);
    for i in 0..k {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
    Ok(Maximum {
        x,
        f: -min.f,
        iterations: min.iterations,
        converged: min.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig {
            max_iterations: 50_000,
            x_tolerance: 1e-10,
            f_tolerance: 1e-14,
            initial_simplex_scale: 0.1,
        }
    }

    #[test]
    fn one_dimensional_quadratic() {
        let m = nelder_mead_minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &cfg()).unwrap();
        assert!((m.x[0] - 3.0).abs() < 1e-6);
        assert!(m.converged);
    }

    #[test]
    fn paraboloid_at_origin() {
        let m = nelder_mead_minimize(|x| x[0] * x[0] + x[1] * x[1], &[1.0, 1.0], &cfg()).unwrap();
        assert!(m.x[0].abs() < 1e-6 && m.x[1].abs() < 1e-6);
    }

    #[test]
    fn rosenbrock_valley() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead_minimize(rosen, &[-1.2, 1.0], &cfg()).unwrap();
        // dense grid refinement around (1, 1): zoom a 41x41 grid five times
        let (mut cx, mut cy, mut h) = (1.0, 1.0, 0.05);
        for _ in 0..6 {
            let mut best = (f64::INFINITY, cx, cy);
            for i in -20..=20 {
                for j in -20..=20 {
                    let (x, y) = (cx + i as f64 * h, cy + j as f64 * h);
                    let v = rosen(&[x, y]);
                    if v < best.0 {
                        best = (v, x, y);
                    }
                }
            }
            cx = best.1;
            cy = best.2;
            h /= 10.0;
        }
        assert!(
            (m.x[0] - cx).abs() < 1e-4 && (m.x[1] - cy).abs() < 1e-4,
            "{:?} vs ({cx}, {cy})",
            m.x
        );
        assert!(rosen(&m.x) <= rosen(&[-1.2, 1.0]));
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let err = nelder_mead_minimize(
            |x| if x[0] > 0.5 { f64::NAN } else { -x[0] },
            &[0.0],
            &cfg(),
        )
        .unwrap_err();
        match err {
            Error::NonFinite { point, .. } => assert!(point[0] > 0.5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bounded_boundary_maximum() {
        let m =
            bounded_maximize(|x| -(x[0] - 2.0).powi(2), &[0.0], &[1.0], &[0.5], &cfg()).unwrap();
        assert_eq!(m.x[0], 1.0);
    }

    #[test]
    fn bounded_interior_maximum() {
        let m =
            bounded_maximize(|x| -(x[0] - 2.0).powi(2), &[0.0], &[5.0], &[0.5], &cfg()).unwrap();
        assert!((m.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bounded_separable_two_dimensional() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - (x[1] + 1.0).powi(2);
        let m = bounded_maximize(f, &[-3.0, -3.0], &[3.0, 3.0], &[0.0, 0.0], &cfg()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn bounded_rejects_infeasible_start() {
        let err = bounded_maximize(|x| -x[0], &[0.0], &[1.0], &[2.0], &cfg()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        let err = bounded_maximize(|x| -x[0], &[1.0], &[0.0], &[0.5], &cfg()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn bounded_reports_non_finite() {
        let err = bounded_maximize(
            |x| if x[0] > 0.8 { f64::INFINITY } else { x[0] },
            &[0.0],
            &[1.0],
            &[0.5],
            &cfg(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn invalid_config() {
        let bad = OptimizerConfig {
            x_tolerance: 0.0,
            ..cfg()
        };
        assert!(nelder_mead_minimize(|x| x[0] * x[0], &[1.0], &bad).is_err());
    }
}

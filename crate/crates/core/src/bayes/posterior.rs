//! Closed-form conditional posteriors.
//!
//! The textbook forms divide by the prior variance; here numerator and
//! denominator are multiplied through by it, which leaves the values
//! unchanged but makes the data-free limits exact (`σ_κ = b` when every
//! `αᵢ = 1`, `(μ_α, σ_α) = (c, d)` when `X + κ1 = 0`).

use super::stats::PairStats;
use super::Hyperparams;
use crate::error::{Error, Result};
use crate::model::{warp_value, FormantVector, PairedDataset};

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

fn check_alphas(data_n: usize, alphas: &[f64]) -> Result<()> {
    if alphas.len() != data_n {
        return Err(Error::invalid(format!(
            "expected {data_n} scale factors, got {}",
            alphas.len()
        )));
    }
    Ok(())
}

/// `(μ_κ, σ_κ)` from prior `N(a, b²)` and `Σ(αᵢ-1)²`, `Σ(αᵢ-1)(Yᵢ-αᵢX)ᵀ1`.
pub(crate) fn kappa_params_from(
    sum_sq: f64,
    cross: f64,
    r: f64,
    sigma: f64,
    hp: &Hyperparams,
) -> (f64, f64) {
    let b2 = hp.b * hp.b;
    let s2 = sigma * sigma;
    let ratio = 1.0 + b2 * r * sum_sq / s2;
    ((hp.a + b2 * cross / s2) / ratio, hp.b / ratio.sqrt())
}

pub(crate) fn kappa_params_stats(
    st: &PairStats,
    alphas: &[f64],
    sigma: f64,
    hp: &Hyperparams,
) -> (f64, f64) {
    let mut sum_sq = 0.0;
    let mut cross = 0.0;
    for (i, &a) in alphas.iter().enumerate() {
        let g = a - 1.0;
        sum_sq += g * g;
        cross += g * (st.sy1[i] - a * st.sx1);
    }
    kappa_params_from(sum_sq, cross, st.r, sigma, hp)
}

/// `(μ_α, σ_α)` from `ZᵀZ` and `ZᵀW` with `Z = X + κ1`, `W = Y + κ1`.
#[inline]
pub(crate) fn alpha_params_from(zz: f64, zw: f64, sigma: f64, hp: &Hyperparams) -> (f64, f64) {
    let d2 = hp.d * hp.d;
    let s2 = sigma * sigma;
    let ratio = 1.0 + d2 * zz / s2;
    ((hp.c + d2 * zw / s2) / ratio, hp.d / ratio.sqrt())
}

/// Mean and sd of the Gaussian conditional of `κ` given the scales and `σ`.
pub fn kappa_posterior_params(
    data: &PairedDataset,
    alphas: &[f64],
    sigma: f64,
    hp: &Hyperparams,
) -> Result<(f64, f64)> {
    check_sigma(sigma)?;
    check_alphas(data.n(), alphas)?;
    hp.validate()?;
    let x = data.subject().values();
    let mut sum_sq = 0.0;
    let mut cross = 0.0;
    for (y, &a) in data.references().iter().zip(alphas) {
        let g = a - 1.0;
        sum_sq += g * g;
        cross += g * y
            .values()
            .iter()
            .zip(x)
            .map(|(yk, xk)| yk - a * xk)
            .sum::<f64>();
    }
    Ok(kappa_params_from(sum_sq, cross, data.r() as f64, sigma, hp))
}

/// Mean and sd of the Gaussian conditional of one scale `αᵢ` given `κ`
/// and `σ`.
pub fn alpha_posterior_params(
    y_i: &FormantVector,
    x: &FormantVector,
    kappa: f64,
    sigma: f64,
    hp: &Hyperparams,
) -> Result<(f64, f64)> {
    check_sigma(sigma)?;
    hp.validate()?;
    x.check_layout(y_i)?;
    let (mut zz, mut zw) = (0.0, 0.0);
    for (&xk, &yk) in x.values().iter().zip(y_i.values()) {
        let z = xk + kappa;
        zz += z * z;
        zw += z * (yk + kappa);
    }
    Ok(alpha_params_from(zz, zw, sigma, hp))
}

/// `½ Σᵢ ‖Yᵢ - αᵢX - κ(αᵢ-1)1‖²`.
pub fn sigma_posterior_beta(data: &PairedDataset, alphas: &[f64], kappa: f64) -> Result<f64> {
    check_alphas(data.n(), alphas)?;
    Ok(beta_from_values(data, alphas, kappa))
}

pub(crate) fn beta_from_values(data: &PairedDataset, alphas: &[f64], kappa: f64) -> f64 {
    let x = data.subject().values();
    let mut acc = 0.0;
    for (y, &a) in data.references().iter().zip(alphas) {
        for (&yk, &xk) in y.values().iter().zip(x) {
            let e = yk - warp_value(xk, a, kappa);
            acc += e * e;
        }
    }
    0.5 * acc
}

/// `σ_κ ≤ b`: conditioning on data never widens the shift posterior.
pub fn posterior_variance_reduction_check(
    data: &PairedDataset,
    alphas: &[f64],
    sigma: f64,
    hp: &Hyperparams,
) -> Result<bool> {
    let (_, sd) = kappa_posterior_params(data, alphas, sigma, hp)?;
    Ok(sd <= hp.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Category;

    fn fv(id: &str, vals: &[f64]) -> FormantVector {
        let entries = vals
            .iter()
            .enumerate()
            .map(|(k, &f)| (format!("v{:02}", k / 3), (k % 3) as u8 + 1, f));
        FormantVector::new(id, Category::Male, entries).unwrap()
    }

    fn hp(a: f64, b: f64, c: f64, d: f64) -> Hyperparams {
        Hyperparams::new(a, b, c, d, 1.0, 100.0).unwrap()
    }

    #[test]
    fn unit_scales_return_the_prior() {
        let x = fv("x", &[500.0, 1500.0, 2500.0]);
        let y = fv("y", &[520.0, 1490.0, 2530.0]);
        let data = PairedDataset::new(x, vec![y.clone(), y]).unwrap();
        let h = hp(150.0, 50.0, 1.0, 0.1);
        let (m, s) = kappa_posterior_params(&data, &[1.0, 1.0], 30.0, &h).unwrap();
        assert_eq!((m, s), (150.0, 50.0));
        assert!(posterior_variance_reduction_check(&data, &[1.0, 1.0], 30.0, &h).unwrap());
        let (_, s) = kappa_posterior_params(&data, &[1.01, 1.0], 30.0, &h).unwrap();
        assert!(s < 50.0);
    }

    #[test]
    fn flat_prior_shift_limit() {
        // n = 1, r = 1, α = 2, σ = 1, X = 0, Y = 10: posterior mean → 10
        // (X cannot be zero in a FormantVector, so use the stats directly)
        let h = hp(0.0, 1e9, 1.0, 0.1);
        let (m, _) = kappa_params_from(1.0, 10.0, 1.0, 1.0, &h);
        assert!((m - 10.0).abs() < 1e-6);
    }

    #[test]
    fn flat_prior_scale_is_least_squares() {
        let xs = [400.0, 1200.0, 2600.0, 700.0];
        let x = fv("x", &xs);
        let y = fv("y", &xs.map(|v| 2.0 * v));
        let (m, _) = alpha_posterior_params(&y, &x, 0.0, 30.0, &hp(0.0, 50.0, 0.0, 1e9)).unwrap();
        assert!((m - 2.0).abs() < 1e-6);
    }

    #[test]
    fn uninformative_data_returns_scale_prior() {
        // X + κ1 = 0 is reached with κ = -X for a constant X
        let x = fv("x", &[300.0, 300.0]);
        let y = fv("y", &[320.0, 280.0]);
        let h = hp(0.0, 50.0, 1.1, 0.07);
        let (m, s) = alpha_posterior_params(&y, &x, -300.0, 20.0, &h).unwrap();
        assert_eq!((m, s), (1.1, 0.07));
    }

    #[test]
    fn beta_examples() {
        let x = fv("x", &[500.0, 1500.0, 2500.0, 3000.0]);
        let y = fv("y", &[501.0, 1501.0, 2501.0, 3001.0]);
        let data = PairedDataset::new(x.clone(), vec![y]).unwrap();
        assert_eq!(sigma_posterior_beta(&data, &[1.0], 0.0).unwrap(), 2.0);
        let exact = PairedDataset::new(
            x.clone(),
            vec![fv(
                "y",
                &x.values()
                    .iter()
                    .map(|v| 1.1 * v + 10.0)
                    .collect::<Vec<_>>(),
            )],
        )
        .unwrap();
        assert!(sigma_posterior_beta(&exact, &[1.1], 100.0).unwrap() < 1e-18);
        assert!(sigma_posterior_beta(&data, &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn beta_scales_quadratically() {
        let x = fv("x", &[500.0, 1500.0, 2500.0]);
        let eps = [3.0, -1.5, 2.0];
        let mk = |s: f64| {
            let y: Vec<f64> = x
                .values()
                .iter()
                .zip(eps)
                .map(|(v, e)| 1.05 * v + 0.05 * 120.0 + s * e)
                .collect();
            PairedDataset::new(x.clone(), vec![fv("y", &y)]).unwrap()
        };
        let b1 = sigma_posterior_beta(&mk(1.0), &[1.05], 120.0).unwrap();
        let b3 = sigma_posterior_beta(&mk(3.0), &[1.05], 120.0).unwrap();
        assert!((b3 / b1 - 9.0).abs() < 1e-6);
    }

    /// Direct evaluation of likelihood × prior on a fine grid.
    fn grid_moments(logf: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        let h = (hi - lo) / n as f64;
        let pts: Vec<f64> = (0..=n).map(|k| lo + k as f64 * h).collect();
        let lv: Vec<f64> = pts.iter().map(|&t| logf(t)).collect();
        let mx = lv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // composite Simpson
        let w = |k: usize| {
            if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for k in 0..=n {
            let p = w(k) * (lv[k] - mx).exp();
            z += p;
            m1 += p * pts[k];
            m2 += p * pts[k] * pts[k];
        }
        let mean = m1 / z;
        (mean, (m2 / z - mean * mean).max(0.0).sqrt())
    }

    #[test]
    fn conditionals_match_grid_posterior() {
        let x = fv("x", &[480.0, 1510.0, 2450.0, 700.0]);
        let y1 = fv("y1", &[560.0, 1660.0, 2700.0, 790.0]);
        let y2 = fv("y2", &[450.0, 1430.0, 2320.0, 660.0]);
        let data = PairedDataset::new(x.clone(), vec![y1.clone(), y2.clone()]).unwrap();
        let h = hp(120.0, 60.0, 1.0, 0.08);
        let (alphas, sigma, kappa) = ([1.09, 0.94], 25.0, 140.0);

        let log_k = |k: f64| {
            -sigma_posterior_beta(&data, &alphas, k).unwrap() / (sigma * sigma)
                - (k - h.a).powi(2) / (2.0 * h.b * h.b)
        };
        let (mk, sk) = kappa_posterior_params(&data, &alphas, sigma, &h).unwrap();
        let (gm, gs) = grid_moments(log_k, mk - 12.0 * sk, mk + 12.0 * sk, 4000);
        assert!(
            (mk - gm).abs() < 1e-6 && (sk - gs).abs() < 1e-6,
            "({mk}, {sk}) vs ({gm}, {gs})"
        );

        let one = PairedDataset::new(x.clone(), vec![y1.clone()]).unwrap();
        let log_a = |a: f64| {
            -sigma_posterior_beta(&one, &[a], kappa).unwrap() / (sigma * sigma)
                - (a - h.c).powi(2) / (2.0 * h.d * h.d)
        };
        let (ma, sa) = alpha_posterior_params(&y1, &x, kappa, sigma, &h).unwrap();
        let (gm, gs) = grid_moments(log_a, ma - 12.0 * sa, ma + 12.0 * sa, 4000);
        assert!((ma - gm).abs() < 1e-6 && (sa - gs).abs() < 1e-6);
    }
}

//! Mahalanobis-distance vowel classification over (F1, F2, F3) and the
//! leave-one-speaker-out evaluation harness.

mod experiment;

use std::collections::BTreeMap;

use nalgebra::{Cholesky, Matrix3, Vector3, U3};

pub use experiment::{
    improvement_percent, run_experiment, write_accuracy_csv, write_confusion_csv,
    write_summary_csv, BayesSettings, ConfusionMatrix, Estimator, EstimatorConfigs, ExperimentPlan,
    ExperimentResult, HyperparamSource, SpeakerGroup, SubjectFailure, SubjectOutcome,
};

use crate::error::{Error, Result};

/// Fewest tokens a vowel class may be fitted from.
pub const MIN_CLASS_SAMPLES: usize = 4;

/// Relative ridge added to every fitted covariance, times `trace/3`.
pub const RIDGE_FRACTION: f64 = 1e-6;

/// A formant triple with its vowel label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFormants {
    pub label: String,
    pub formants: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct VowelClass {
    pub label: String,
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub sample_count: usize,
    factor: Option<Cholesky<f64, U3>>,
}

impl VowelClass {
    /// Squared Mahalanobis distance of `x` from this class.
    pub fn distance(&self, x: &Vector3<f64>) -> Result<f64> {
        let chol = self
            .factor
            .as_ref()
            .ok_or_else(|| Error::SingularCovariance(self.label.clone()))?;
        let d = x - self.mean;
        Ok(d.dot(&chol.solve(&d)).max(0.0))
    }
}

/// Per-vowel Gaussian statistics, sorted by label.
#[derive(Debug, Clone)]
pub struct VowelClassModel {
    classes: Vec<VowelClass>,
}

fn check_symmetric(label: &str, m: &Matrix3<f64>) -> Result<()> {
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    for i in 0..3 {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "covariance of class `{label}` is not symmetric"
                )));
            }
        }
    }
    Ok(())
}

/// Label, mean, covariance and sample count of one class.
pub type ClassParts = (String, [f64; 3], [[f64; 3]; 3], usize);

impl VowelClassModel {
    /// Builds a model from given statistics (no ridge is added).
    pub fn from_parts(parts: Vec<ClassParts>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("a class model needs at least one class"));
        }
        let mut classes = Vec::with_capacity(parts.len());
        for (label, mean, cov, count) in parts {
            let covariance = Matrix3::from_fn(|i, j| cov[i][j]);
            if mean
                .iter()
                .chain(cov.iter().flatten())
                .any(|v| !v.is_finite())
            {
                return Err(Error::invalid(format!(
                    "class `{label}` has non-finite statistics"
                )));
            }
            check_symmetric(&label, &covariance)?;
            let factor = covariance.cholesky();
            classes.push(VowelClass {
                label,
                mean: Vector3::from(mean),
                covariance,
                sample_count: count,
                factor,
            });
        }
        classes.sort_by(|a, b| a.label.cmp(&b.label));
        if let Some(w) = classes.windows(2).find(|w| w[0].label == w[1].label) {
            return Err(Error::invalid(format!("duplicate class `{}`", w[0].label)));
        }
        Ok(VowelClassModel { classes })
    }

    pub fn classes(&self) -> &[VowelClass] {
        &self.classes
    }

    pub fn labels(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.label.as_str()).collect()
    }
}

/// Sample mean and unbiased covariance per vowel, plus a ridge of
/// `1e-6·trace/3` (floored at `1e-6` Hz² for a zero-spread class).
pub fn fit_classes(training: &[LabeledFormants]) -> Result<VowelClassModel> {
    let mut groups: BTreeMap<&str, Vec<Vector3<f64>>> = BTreeMap::new();
    for t in training {
        if t.formants.iter().any(|f| !f.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite formants in a `{}` token",
                t.label
            )));
        }
        groups
            .entry(&t.label)
            .or_default()
            .push(Vector3::from(t.formants));
    }
    if groups.is_empty() {
        return Err(Error::invalid("no training tokens"));
    }
    let mut parts = Vec::with_capacity(groups.len());
    for (label, xs) in groups {
        if xs.len() < MIN_CLASS_SAMPLES {
            return Err(Error::TooFewSamples {
                vowel: label.to_string(),
                count: xs.len(),
                required: MIN_CLASS_SAMPLES,
            });
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<Vector3<f64>>() / n;
        let mut cov = xs
            .iter()
            .map(|x| (x - mean) * (x - mean).transpose())
            .sum::<Matrix3<f64>>()
            / (n - 1.0);
        cov = (cov + cov.transpose()) * 0.5;
        let ridge = (RIDGE_FRACTION * cov.trace() / 3.0).max(RIDGE_FRACTION);
        cov += Matrix3::identity() * ridge;
        let cov_rows = [0, 1, 2].map(|i| [0, 1, 2].map(|j| cov[(i, j)]));
        parts.push((
            label.to_string(),
            [mean[0], mean[1], mean[2]],
            cov_rows,
            xs.len(),
        ));
    }
    VowelClassModel::from_parts(parts)
}

/// Label of the nearest class and the squared distance to every class.
/// Ties go to the lexicographically smallest label.
pub fn classify(
    formants: [f64; 3],
    model: &VowelClassModel,
) -> Result<(String, BTreeMap<String, f64>)> {
    let x = Vector3::from(formants);
    let mut distances = BTreeMap::new();
    let mut best: Option<(&str, f64)> = None;
    for c in &model.classes {
        let d = c.distance(&x)?;
        if best.is_none() || best.is_some_and(|(_, bd)| d < bd) {
            best = Some((&c.label, d));
        }
        distances.insert(c.label.clone(), d);
    }
    let (label, _) = best.ok_or_else(|| Error::invalid("empty class model"))?;
    Ok((label.to_string(), distances))
}

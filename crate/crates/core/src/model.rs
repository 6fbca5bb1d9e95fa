//! The affine warp `Y = αX + κ(α-1)1` and the formant containers every
//! estimator works on.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Upper plausibility bound on any formant frequency, Hz.
pub const MAX_FORMANT_HZ: f64 = 10_000.0;

/// Speaker group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Male,
    Female,
    Child,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Male, Category::Female, Category::Child];

    /// One-letter code used in the CSV files.
    pub fn code(self) -> char {
        match self {
            Category::Male => 'M',
            Category::Female => 'F',
            Category::Child => 'C',
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "M" | "m" => Ok(Category::Male),
            "F" | "f" => Ok(Category::Female),
            "C" | "c" => Ok(Category::Child),
            other => Err(Error::invalid(format!(
                "unknown speaker category `{other}` (expected M, F or C)"
            ))),
        }
    }
}

/// Position of one value inside a formant vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormantSlot {
    pub vowel: String,
    /// 1, 2 or 3.
    pub formant: u8,
}

impl fmt::Display for FormantSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/F{}", self.vowel, self.formant)
    }
}

/// A speaker's formants concatenated over vowels, in canonical order
/// (vowel label, then formant index).
#[derive(Debug, Clone, PartialEq)]
pub struct FormantVector {
    speaker_id: String,
    category: Category,
    slots: Vec<FormantSlot>,
    values: Vec<f64>,
}

fn check_frequency(slot: &FormantSlot, f: f64) -> Result<()> {
    if !(f > 0.0 && f <= MAX_FORMANT_HZ) {
        return Err(Error::invalid(format!(
            "formant {slot} = {f} Hz is outside (0, {MAX_FORMANT_HZ}]"
        )));
    }
    Ok(())
}

impl FormantVector {
    /// Builds a vector from unordered `(vowel, formant index, Hz)` entries.
    pub fn new(
        speaker_id: impl Into<String>,
        category: Category,
        entries: impl IntoIterator<Item = (String, u8, f64)>,
    ) -> Result<Self> {
        let mut items: Vec<(FormantSlot, f64)> = entries
            .into_iter()
            .map(|(vowel, formant, f)| (FormantSlot { vowel, formant }, f))
            .collect();
        if items.is_empty() {
            return Err(Error::invalid("a formant vector needs at least one entry"));
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));
        for (i, (slot, f)) in items.iter().enumerate() {
            if !(1..=3).contains(&slot.formant) {
                return Err(Error::invalid(format!(
                    "formant index {} out of 1..=3 in {slot}",
                    slot.formant
                )));
            }
            check_frequency(slot, *f)?;
            if i > 0 && items[i - 1].0 == *slot {
                return Err(Error::invalid(format!("duplicate entry {slot}")));
            }
        }
        let (slots, values) = items.into_iter().unzip();
        Ok(FormantVector {
            speaker_id: speaker_id.into(),
            category,
            slots,
            values,
        })
    }

    /// Convenience constructor from per-vowel `(F1, F2, F3)` triples.
    pub fn from_triples<S: AsRef<str>>(
        speaker_id: impl Into<String>,
        category: Category,
        triples: &[(S, [f64; 3])],
    ) -> Result<Self> {
        let entries = triples.iter().flat_map(|(v, fs)| {
            let v = v.as_ref().to_string();
            (0..3).map(move |k| (v.clone(), k as u8 + 1, fs[k]))
        });
        FormantVector::new(speaker_id, category, entries)
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn slots(&self) -> &[FormantSlot] {
        &self.slots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Length of the concatenated frequency list.
    pub fn r(&self) -> usize {
        self.values.len()
    }

    /// Same speaker and layout, new frequencies (validated).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::invalid(format!(
                "expected {} frequencies, got {}",
                self.values.len(),
                values.len()
            )));
        }
        for (slot, &f) in self.slots.iter().zip(&values) {
            check_frequency(slot, f)?;
        }
        Ok(FormantVector {
            values,
            ..self.clone()
        })
    }

    /// Same data under another speaker id and category.
    pub fn relabeled(&self, speaker_id: impl Into<String>, category: Category) -> Self {
        FormantVector {
            speaker_id: speaker_id.into(),
            category,
            ..self.clone()
        }
    }

    /// Errors with the first differing slot when layouts disagree.
    pub fn check_layout(&self, other: &FormantVector) -> Result<()> {
        for (index, (a, b)) in self.slots.iter().zip(&other.slots).enumerate() {
            if a != b {
                return Err(Error::LayoutMismatch {
                    index,
                    expected: a.to_string(),
                    found: b.to_string(),
                });
            }
        }
        if self.slots.len() != other.slots.len() {
            let index = self.slots.len().min(other.slots.len());
            let show = |v: &FormantVector| {
                v.slots
                    .get(index)
                    .map_or("<end>".to_string(), |s| s.to_string())
            };
            return Err(Error::LayoutMismatch {
                index,
                expected: show(self),
                found: show(other),
            });
        }
        Ok(())
    }
}

/// Warp parameters: scale `alpha`, shift `kappa` (Hz) and, once
/// estimated, the noise scale `sigma` (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    pub alpha: f64,
    pub kappa: f64,
    pub sigma: Option<f64>,
}

impl AffineParams {
    pub fn new(alpha: f64, kappa: f64) -> Result<Self> {
        let p = AffineParams {
            alpha,
            kappa,
            sigma: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        let p = AffineParams {
            sigma: Some(sigma),
            ..self
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !self.kappa.is_finite() {
            return Err(Error::invalid(format!(
                "kappa must be finite, got {}",
                self.kappa
            )));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!("sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// `α f + κ(α - 1)`.
    #[inline]
    pub fn apply(&self, f: f64) -> f64 {
        warp_value(f, self.alpha, self.kappa)
    }
}

/// `α f + κ(α - 1)`.
#[inline]
pub fn warp_value(f: f64, alpha: f64, kappa: f64) -> f64 {
    alpha * f + kappa * (alpha - 1.0)
}

/// A subject `X` with references `Y₁ … Yₙ` sharing its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    subject: FormantVector,
    references: Vec<FormantVector>,
}

impl PairedDataset {
    pub fn new(subject: FormantVector, references: Vec<FormantVector>) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::invalid(
                "a paired dataset needs at least one reference",
            ));
        }
        for y in &references {
            subject.check_layout(y)?;
        }
        Ok(PairedDataset {
            subject,
            references,
        })
    }

    pub fn subject(&self) -> &FormantVector {
        &self.subject
    }

    pub fn references(&self) -> &[FormantVector] {
        &self.references
    }

    pub fn n(&self) -> usize {
        self.references.len()
    }

    pub fn r(&self) -> usize {
        self.subject.r()
    }
}

/// Applies the warp to every entry of `x`.
pub fn warp_formants(x: &FormantVector, params: &AffineParams) -> Result<FormantVector> {
    params.validate()?;
    let values: Vec<f64> = x.values().iter().map(|&f| params.apply(f)).collect();
    if let Some((slot, f)) = x.slots().iter().zip(&values).find(|(_, &f)| !(f > 0.0)) {
        return Err(Error::invalid(format!(
            "warp pushed {slot} of `{}` to {f} Hz",
            x.speaker_id()
        )));
    }
    x.with_values(values)
}

/// `y - (αx + κ(α-1)1)` componentwise.
pub fn residual(y: &FormantVector, x: &FormantVector, params: &AffineParams) -> Result<Vec<f64>> {
    x.check_layout(y)?;
    Ok(residual_values(
        y.values(),
        x.values(),
        params.alpha,
        params.kappa,
    ))
}

pub(crate) fn residual_values(y: &[f64], x: &[f64], alpha: f64, kappa: f64) -> Vec<f64> {
    y.iter()
        .zip(x)
        .map(|(&yk, &xk)| yk - warp_value(xk, alpha, kappa))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(vals: &[f64]) -> FormantVector {
        let entries = vals
            .iter()
            .enumerate()
            .map(|(k, &f)| (format!("v{:02}", k / 3), (k % 3) as u8 + 1, f));
        FormantVector::new("s", Category::Male, entries).unwrap()
    }

    #[test]
    fn canonical_order() {
        let v = FormantVector::new(
            "a",
            Category::Female,
            vec![
                ("uw".to_string(), 2, 900.0),
                ("iy".to_string(), 1, 300.0),
                ("uw".to_string(), 1, 310.0),
            ],
        )
        .unwrap();
        let labels: Vec<String> = v.slots().iter().map(|s| s.to_string()).collect();
        assert_eq!(labels, ["iy/F1", "uw/F1", "uw/F2"]);
        assert_eq!(v.values(), &[300.0, 310.0, 900.0]);
    }

    #[test]
    fn rejects_bad_entries() {
        let bad = |e: Vec<(String, u8, f64)>| FormantVector::new("a", Category::Male, e).is_err();
        assert!(bad(vec![("iy".into(), 1, 0.0)]));
        assert!(bad(vec![("iy".into(), 1, 20_000.0)]));
        assert!(bad(vec![("iy".into(), 4, 300.0)]));
        assert!(bad(vec![("iy".into(), 1, 300.0), ("iy".into(), 1, 310.0)]));
        assert!(bad(vec![]));
    }

    #[test]
    fn warp_examples() {
        let x = fv(&[500.0, 1500.0, 2500.0]);
        let w = warp_formants(&x, &AffineParams::new(1.0, 999.0).unwrap()).unwrap();
        assert_eq!(w.values(), x.values());
        let w = warp_formants(&fv(&[500.0]), &AffineParams::new(1.1, 100.0).unwrap()).unwrap();
        assert!((w.values()[0] - 560.0).abs() < 1e-9);
        let w = warp_formants(&fv(&[1000.0]), &AffineParams::new(0.9, 200.0).unwrap()).unwrap();
        assert!((w.values()[0] - 880.0).abs() < 1e-9);
    }

    #[test]
    fn warp_below_zero_is_an_error() {
        let err =
            warp_formants(&fv(&[100.0]), &AffineParams::new(0.5, 500.0).unwrap()).unwrap_err();
        assert!(err.to_string().contains("v00/F1"));
    }

    #[test]
    fn residual_examples() {
        let x = fv(&[500.0, 1500.0, 2500.0]);
        let p = AffineParams::new(1.05, 120.0).unwrap();
        let y = warp_formants(&x, &p).unwrap();
        assert!(residual(&y, &x, &p).unwrap().iter().all(|e| e.abs() < 1e-9));
        let y = fv(&[501.0, 1502.0, 2503.0]);
        assert_eq!(
            residual(&y, &x, &AffineParams::new(1.0, 0.0).unwrap()).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn layout_mismatch_names_label() {
        let x =
            FormantVector::from_triples("x", Category::Male, &[("iy", [300.0, 2300.0, 3000.0])])
                .unwrap();
        let y = FormantVector::from_triples("y", Category::Male, &[("uw", [300.0, 900.0, 2300.0])])
            .unwrap();
        match residual(&y, &x, &AffineParams::new(1.0, 0.0).unwrap()).unwrap_err() {
            Error::LayoutMismatch {
                index,
                expected,
                found,
            } => {
                assert_eq!(index, 0);
                assert_eq!(expected, "iy/F1");
                assert_eq!(found, "uw/F1");
            }
            other => panic!("{other:?}"),
        }
        let short = fv(&[500.0]);
        assert!(matches!(
            fv(&[500.0, 1500.0]).check_layout(&short),
            Err(Error::LayoutMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn dataset_validation() {
        let x = fv(&[500.0, 1500.0]);
        assert!(PairedDataset::new(x.clone(), vec![]).is_err());
        assert!(PairedDataset::new(x.clone(), vec![fv(&[500.0])]).is_err());
        let d = PairedDataset::new(x.clone(), vec![x.clone(), x]).unwrap();
        assert_eq!((d.n(), d.r()), (2, 2));
    }

    #[test]
    fn category_codes_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.code().to_string().parse::<Category>().unwrap(), c);
        }
        assert!("X".parse::<Category>().is_err());
    }

    proptest! {
        #[test]
        fn warp_is_monotone(a in 0.5f64..2.0, k in -300.0f64..600.0, f1 in 300.0f64..3000.0, df in 1e-3f64..2000.0) {
            prop_assert!(warp_value(f1, a, k) < warp_value(f1 + df, a, k));
        }

        #[test]
        fn unit_scale_is_identity(k in -1e4f64..1e4, f in 1.0f64..9000.0) {
            prop_assert_eq!(warp_value(f, 1.0, k), f);
        }

        #[test]
        fn residual_round_trip(
            a in 0.7f64..1.4,
            k in -100.0f64..400.0,
            xs in prop::collection::vec(300.0f64..3500.0, 1..12),
            seed in prop::collection::vec(-50.0f64..50.0, 12),
        ) {
            let x = fv(&xs);
            let p = AffineParams::new(a, k).unwrap();
            let eps: Vec<f64> = seed[..xs.len()].to_vec();
            let yv: Vec<f64> = x.values().iter().zip(&eps).map(|(&xk, e)| p.apply(xk) + e).collect();
            let y = x.with_values(yv).unwrap();
            let res = residual(&y, &x, &p).unwrap();
            for (r, e) in res.iter().zip(&eps) {
                prop_assert!((r - e).abs() <= 1e-9 * (1.0 + y.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))));
            }
        }
    }
}

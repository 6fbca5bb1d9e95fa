//! Inner products of a paired dataset that the conditionals and the
//! integrated likelihood need.

use crate::model::PairedDataset;

#[derive(Debug, Clone)]
pub(crate) struct PairStats {
    pub r: f64,
    /// XᵀX
    pub sxx: f64,
    /// Xᵀ1
    pub sx1: f64,
    /// Yᵢᵀ1
    pub sy1: Vec<f64>,
    /// XᵀYᵢ
    pub sxy: Vec<f64>,
}

impl PairStats {
    pub fn new(data: &PairedDataset) -> Self {
        let x = data.subject().values();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let refs = data.references();
        PairStats {
            r: x.len() as f64,
            sxx: dot(x, x),
            sx1: x.iter().sum(),
            sy1: refs.iter().map(|y| y.values().iter().sum()).collect(),
            sxy: refs.iter().map(|y| dot(x, y.values())).collect(),
        }
    }

    /// `ZᵀZ` with `Z = X + κ1`.
    #[inline]
    pub fn zz(&self, kappa: f64) -> f64 {
        self.sxx + 2.0 * kappa * self.sx1 + self.r * kappa * kappa
    }

    /// `ZᵀWᵢ` with `Z = X + κ1`, `Wᵢ = Yᵢ + κ1`.
    #[inline]
    pub fn zw(&self, i: usize, kappa: f64) -> f64 {
        self.sxy[i] + kappa * (self.sx1 + self.sy1[i]) + self.r * kappa * kappa
    }
}

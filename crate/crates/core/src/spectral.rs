//! Affine warping of sampled power spectra: axis warp, piecewise-linear
//! bandwidth adjustment above `f0`, and re-interpolation onto the
//! original bins.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{warp_value, AffineParams};

/// Default `f0` as a fraction of `f_max`.
pub const DEFAULT_F0_FRACTION: f64 = 0.85;

/// Amplitudes sampled at strictly increasing frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    freqs: Vec<f64>,
    amps: Vec<f64>,
}

fn check_pairs(freqs: &[f64], amps: &[f64]) -> Result<()> {
    if freqs.len() != amps.len() {
        return Err(Error::invalid(format!(
            "{} frequencies but {} amplitudes",
            freqs.len(),
            amps.len()
        )));
    }
    if freqs.len() < 2 {
        return Err(Error::invalid("a spectrum needs at least two bins"));
    }
    if let Some(a) = amps.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
        return Err(Error::invalid(format!(
            "amplitudes must be finite and non-negative, got {a}"
        )));
    }
    check_increasing(freqs)
}

fn check_increasing(freqs: &[f64]) -> Result<()> {
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("frequencies must be finite"));
    }
    if let Some(k) = freqs.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(format!(
            "frequencies must be strictly increasing (bins {} and {}: {} then {})",
            k,
            k + 1,
            freqs[k],
            freqs[k + 1]
        )));
    }
    Ok(())
}

impl Spectrum {
    /// A spectrum on a uniform grid (spacing equal to within 1e-9
    /// relative) ending at a positive `f_max`.
    pub fn new(freqs: Vec<f64>, amps: Vec<f64>) -> Result<Self> {
        check_pairs(&freqs, &amps)?;
        let step = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
        if let Some(w) = freqs
            .windows(2)
            .find(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step)
        {
            return Err(Error::invalid(format!(
                "bins are not uniformly spaced near {} Hz",
                w[0]
            )));
        }
        if !(freqs[freqs.len() - 1] > 0.0) {
            return Err(Error::invalid("the last bin must be above 0 Hz"));
        }
        Ok(Spectrum { freqs, amps })
    }

    /// A spectrum on arbitrary strictly increasing knots (warped axes).
    pub fn from_knots(freqs: Vec<f64>, amps: Vec<f64>) -> Result<Self> {
        check_pairs(&freqs, &amps)?;
        Ok(Spectrum { freqs, amps })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn amps(&self) -> &[f64] {
        &self.amps
    }

    /// Last bin frequency.
    pub fn f_max(&self) -> f64 {
        self.freqs[self.freqs.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Moves every bin to `αf + κ(α-1)`; amplitudes are unchanged.
pub fn warp_axis(spec: &Spectrum, params: &AffineParams) -> Result<Spectrum> {
    params.validate()?;
    let freqs = spec
        .freqs
        .iter()
        .map(|&f| warp_value(f, params.alpha, params.kappa))
        .collect();
    Spectrum::from_knots(freqs, spec.amps.clone())
}

/// A monotone frequency map `f ↦ G(f)` given at knots and linear between
/// (and beyond) them.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMap {
    source: Vec<f64>,
    target: Vec<f64>,
}

impl FrequencyMap {
    pub fn new(source: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if source.len() != target.len() || source.len() < 2 {
            return Err(Error::invalid(
                "a frequency map needs two equal-length knot lists of length >= 2",
            ));
        }
        check_increasing(&source)?;
        if target.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("frequency map targets must be finite"));
        }
        Ok(FrequencyMap { source, target })
    }

    /// The map that [`warp_axis`] applies to `spec`.
    pub fn from_warp(spec: &Spectrum, params: &AffineParams) -> Result<Self> {
        FrequencyMap::new(spec.freqs.clone(), warp_axis(spec, params)?.freqs)
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn eval(&self, f: f64) -> f64 {
        let n = self.source.len();
        let k = match self.source.binary_search_by(|s| s.total_cmp(&f)) {
            Ok(k) => return self.target[k],
            Err(0) => 0,
            Err(k) if k >= n => n - 2,
            Err(k) => k - 1,
        };
        let (s0, s1) = (self.source[k], self.source[k + 1]);
        let (t0, t1) = (self.target[k], self.target[k + 1]);
        t0 + (f - s0) * ((t1 - t0) / (s1 - s0))
    }
}

/// The bandwidth-adjusted map `G'`: equal to `G` up to `f0`, then the
/// straight line from `(f0, G(f0))` to `(f_max, f_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedMap {
    inner: FrequencyMap,
    f0: f64,
    f_max: f64,
    g_f0: f64,
    slope: f64,
}

impl AdjustedMap {
    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn eval(&self, f: f64) -> f64 {
        if f <= self.f0 {
            self.inner.eval(f)
        } else if f == self.f_max {
            self.f_max
        } else {
            self.g_f0 + (f - self.f0) * self.slope
        }
    }
}

pub fn bandwidth_adjust(g: &FrequencyMap, f0: f64, f_max: f64) -> Result<AdjustedMap> {
    if !(f0 > 0.0) || !(f0 < f_max) || !f_max.is_finite() {
        return Err(Error::invalid(format!(
            "need 0 < f0 < f_max, got f0 = {f0}, f_max = {f_max}"
        )));
    }
    let g_f0 = g.eval(f0);
    let slope = (f_max - g_f0) / (f_max - f0);
    Ok(AdjustedMap {
        inner: g.clone(),
        f0,
        f_max,
        g_f0,
        slope,
    })
}

/// Linear interpolation of `warped` at `targets`; targets outside the
/// warped support get amplitude 0.
pub fn resample_to_bins(warped: &Spectrum, targets: &[f64]) -> Result<Spectrum> {
    check_increasing(&warped.freqs)?;
    check_increasing(targets)?;
    let xs = &warped.freqs;
    let ys = &warped.amps;
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let mut amps = Vec::with_capacity(targets.len());
    let mut k = 0;
    for &t in targets {
        if t < lo || t > hi {
            amps.push(0.0);
            continue;
        }
        while k + 1 < xs.len() && xs[k + 1] <= t {
            k += 1;
        }
        if xs[k] == t {
            amps.push(ys[k]);
        } else {
            let w = (t - xs[k]) / (xs[k + 1] - xs[k]);
            amps.push(ys[k] + w * (ys[k + 1] - ys[k]));
        }
    }
    Spectrum::from_knots(targets.to_vec(), amps)
}

/// Full pipeline: warp the axis, bandwidth-adjust above `f0` (default
/// `0.85 f_max`) and resample onto the original bins.
pub fn warp_spectrum(spec: &Spectrum, params: &AffineParams, f0: Option<f64>) -> Result<Spectrum> {
    let f_max = spec.f_max();
    let g = FrequencyMap::from_warp(spec, params)?;
    let adjusted = bandwidth_adjust(&g, f0.unwrap_or(DEFAULT_F0_FRACTION * f_max), f_max)?;
    let freqs: Vec<f64> = spec.freqs.iter().map(|&f| adjusted.eval(f)).collect();
    let moved = Spectrum::from_knots(freqs, spec.amps.clone())?;
    resample_to_bins(&moved, &spec.freqs)
}

/// Reads `freq_hz,amplitude` rows; `#` lines are comments.
pub fn read_spectrum_csv<R: Read>(reader: R) -> Result<Spectrum> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["freq_hz", "amplitude"] {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `freq_hz,amplitude`".into(),
        });
    }
    let mut freqs = Vec::new();
    let mut amps = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("bad number `{s}`"),
            })
        };
        freqs.push(num(&row[0])?);
        amps.push(num(&row[1])?);
    }
    Spectrum::new(freqs, amps)
}

pub fn write_spectrum_csv<W: Write>(mut w: W, spec: &Spectrum) -> std::io::Result<()> {
    writeln!(w, "freq_hz,amplitude")?;
    for (f, a) in spec.freqs.iter().zip(&spec.amps) {
        writeln!(w, "{f},{a}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize, step: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * step).collect()
    }

    fn p(a: f64, k: f64) -> AffineParams {
        AffineParams::new(a, k).unwrap()
    }

    #[test]
    fn axis_examples() {
        let s = Spectrum::new(vec![0.0, 100.0, 200.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(warp_axis(&s, &p(1.0, 500.0)).unwrap(), s);
        let w = warp_axis(&s, &p(1.1, 0.0)).unwrap();
        for (a, b) in w.freqs().iter().zip([0.0, 110.0, 220.0]) {
            assert!((a - b).abs() < 1e-9);
        }
        let one = Spectrum::new(vec![0.0, 1000.0], vec![1.0, 1.0]).unwrap();
        assert!((warp_axis(&one, &p(0.9, 100.0)).unwrap().freqs()[1] - 890.0).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_examples() {
        let ident = FrequencyMap::new(vec![0.0, 8000.0], vec![0.0, 8000.0]).unwrap();
        let adj = bandwidth_adjust(&ident, 5000.0, 8000.0).unwrap();
        for f in [0.0, 1234.5, 5000.0, 6500.0, 8000.0] {
            assert_eq!(adj.eval(f), f);
        }
        // G(5000) = 5500
        let g = FrequencyMap::new(vec![0.0, 5000.0, 8000.0], vec![0.0, 5500.0, 8800.0]).unwrap();
        let adj = bandwidth_adjust(&g, 5000.0, 8000.0).unwrap();
        assert!((adj.eval(6500.0) - 6750.0).abs() < 1e-9);
        assert_eq!(adj.eval(8000.0), 8000.0);
        assert_eq!(adj.eval(5000.0), 5500.0);
        assert!(bandwidth_adjust(&g, 8000.0, 8000.0).is_err());
        assert!(bandwidth_adjust(&g, 0.0, 8000.0).is_err());
    }

    #[test]
    fn resample_examples() {
        let s = Spectrum::new(grid(5, 100.0), vec![1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert_eq!(resample_to_bins(&s, s.freqs()).unwrap(), s);
        let ramp = Spectrum::new(
            grid(9, 250.0),
            grid(9, 250.0).iter().map(|f| 2.0 + 0.003 * f).collect(),
        )
        .unwrap();
        let t = [13.0, 500.5, 1999.9];
        let r = resample_to_bins(&ramp, &t).unwrap();
        for (f, a) in t.iter().zip(r.amps()) {
            assert!((a - (2.0 + 0.003 * f)).abs() < 1e-9);
        }
        let bins = grid(81, 100.0);
        let s = Spectrum::new(bins.clone(), vec![1.0; 81]).unwrap();
        let w = warp_axis(&s, &p(1.1, 0.0)).unwrap();
        let shifted = Spectrum::from_knots(
            w.freqs().iter().map(|f| f + 50.0).collect(),
            w.amps().to_vec(),
        )
        .unwrap();
        assert_eq!(resample_to_bins(&shifted, &bins).unwrap().amps()[0], 0.0);
        assert!(resample_to_bins(&s, &[5.0, 1.0]).is_err());
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::new(vec![0.0, 100.0, 250.0], vec![1.0; 3]).is_err());
        assert!(Spectrum::new(vec![0.0, 100.0], vec![1.0]).is_err());
        assert!(Spectrum::new(vec![0.0, 100.0], vec![1.0, -1.0]).is_err());
        assert!(Spectrum::from_knots(vec![0.0, 100.0, 90.0], vec![1.0; 3]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = Spectrum::new(grid(4, 31.25), vec![0.1, 2.5e-7, 3.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &s).unwrap();
        assert_eq!(read_spectrum_csv(buf.as_slice()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn unit_scale_pipeline_is_identity(
            kappa in -1000.0f64..1000.0,
            amps in prop::collection::vec(0.0f64..1e3, 16..300),
            step in prop::sample::select(vec![15.625, 31.25, 7.8125, 10.0, 25.0, 33.3]),
        ) {
            let freqs: Vec<f64> = (0..amps.len()).map(|k| k as f64 * step).collect();
            let s = Spectrum::from_knots(freqs, amps).unwrap();
            let out = warp_spectrum(&s, &p(1.0, kappa), None).unwrap();
            prop_assert_eq!(out, s);
        }

        #[test]
        fn adjusted_map_hits_f_max(alpha in 0.8f64..1.25, kappa in -200.0f64..400.0, frac in 0.3f64..0.95) {
            let s = Spectrum::new(grid(257, 31.25), vec![1.0; 257]).unwrap();
            let g = FrequencyMap::from_warp(&s, &p(alpha, kappa)).unwrap();
            let f_max = s.f_max();
            let adj = bandwidth_adjust(&g, frac * f_max, f_max).unwrap();
            prop_assert_eq!(adj.eval(f_max), f_max);
            let f0 = adj.f0();
            let left = adj.eval(f0);
            let h = 1e-9 * f_max;
            let right = adj.eval(f0 + h);
            prop_assert!((left - right).abs() <= adj.slope.abs() * h + 1e-9 * f_max);
        }
    }
}

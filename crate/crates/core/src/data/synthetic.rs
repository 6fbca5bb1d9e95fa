use std::io::Write;

use super::{DatabaseName, VowelDatabase, VowelRecord};
use crate::bayes::Hyperparams;
use crate::error::{Error, Result};
use crate::model::{warp_value, Category, FormantVector, PairedDataset};
use crate::numerics::random::{sample_gaussian, RngStream};

/// Average adult-male F1/F2/F3 (Hz) for the ten vowels of the classic
/// American English vowel study.
pub const TEMPLATE_FORMANTS: [(&str, [f64; 3]); 10] = [
    ("aa", [730.0, 1090.0, 2440.0]),
    ("ae", [660.0, 1720.0, 2410.0]),
    ("ah", [520.0, 1190.0, 2390.0]),
    ("ao", [570.0, 840.0, 2410.0]),
    ("eh", [530.0, 1840.0, 2480.0]),
    ("er", [490.0, 1350.0, 1690.0]),
    ("ih", [390.0, 1990.0, 2550.0]),
    ("iy", [270.0, 2290.0, 3010.0]),
    ("uh", [440.0, 1020.0, 2240.0]),
    ("uw", [300.0, 870.0, 2240.0]),
];

/// The template as a 30-entry formant vector.
pub fn template_vector(speaker_id: &str) -> FormantVector {
    FormantVector::from_triples(speaker_id, Category::Male, &TEMPLATE_FORMANTS)
        .expect("template values are valid")
}

/// Ground truth behind a synthetic paired dataset.
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    pub kappa_true: f64,
    /// One scale per reference.
    pub alpha_true: Vec<f64>,
    /// Noise sd; zero gives noiseless references.
    pub sigma_true: f64,
    pub hyperparams_used: Option<Hyperparams>,
    /// Scales come from this stream, noise from the next stream id.
    pub rng: RngStream,
}

impl SyntheticTruth {
    /// Draws `n` scales from `N(alpha_mean, alpha_sd²)` (all equal to
    /// `alpha_mean` when `alpha_sd` is zero).
    pub fn draw(
        kappa_true: f64,
        sigma_true: f64,
        alpha_mean: f64,
        alpha_sd: f64,
        n: usize,
        rng: RngStream,
    ) -> Result<Self> {
        if !(sigma_true >= 0.0) || !(alpha_sd >= 0.0) || !kappa_true.is_finite() {
            return Err(Error::invalid(
                "synthetic truth needs finite kappa and non-negative sds",
            ));
        }
        let mut draw = rng.clone();
        let alpha_true = (0..n)
            .map(|_| {
                if alpha_sd > 0.0 {
                    sample_gaussian(&mut draw, alpha_mean, alpha_sd)
                } else {
                    Ok(alpha_mean)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if alpha_true.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::invalid("a drawn scale factor is not positive"));
        }
        Ok(SyntheticTruth {
            kappa_true,
            alpha_true,
            sigma_true,
            hyperparams_used: None,
            rng,
        })
    }
}

/// `Yᵢ = αᵢX + κ(αᵢ-1)1 + εᵢ`, `εᵢ ~ N(0, σ²I)`, for the first `n`
/// scales of `truth`.
pub fn generate_synthetic(
    x_template: &FormantVector,
    truth: &SyntheticTruth,
    n: usize,
) -> Result<PairedDataset> {
    if n == 0 {
        return Err(Error::invalid("need at least one reference"));
    }
    if truth.alpha_true.len() < n {
        return Err(Error::invalid(format!(
            "truth holds {} scale factors, {n} requested",
            truth.alpha_true.len()
        )));
    }
    let mut noise = truth.rng.fork(truth.rng.stream_id().wrapping_add(1));
    let width = n.to_string().len().max(2);
    let mut refs = Vec::with_capacity(n);
    for (i, &a) in truth.alpha_true.iter().take(n).enumerate() {
        let mut vals = Vec::with_capacity(x_template.r());
        for &x in x_template.values() {
            let e = if truth.sigma_true > 0.0 {
                sample_gaussian(&mut noise, 0.0, truth.sigma_true)?
            } else {
                0.0
            };
            vals.push(warp_value(x, a, truth.kappa_true) + e);
        }
        let y = x_template.with_values(vals)?;
        refs.push(y.relabeled(format!("ref{:0width$}", i + 1), x_template.category()));
    }
    PairedDataset::new(x_template.clone(), refs)
}

/// `key=value` text: `kappa_true`, `sigma_true`, `alpha_true` (comma
/// list), `seed`, `stream_id`, and the six hyperparameters if recorded.
pub fn write_truth_sidecar<W: Write>(mut w: W, truth: &SyntheticTruth) -> std::io::Result<()> {
    writeln!(w, "kappa_true={}", truth.kappa_true)?;
    writeln!(w, "sigma_true={}", truth.sigma_true)?;
    let alphas: Vec<String> = truth.alpha_true.iter().map(|a| a.to_string()).collect();
    writeln!(w, "alpha_true={}", alphas.join(","))?;
    writeln!(w, "seed={}", truth.rng.seed())?;
    writeln!(w, "stream_id={}", truth.rng.stream_id())?;
    if let Some(hp) = &truth.hyperparams_used {
        write!(w, "{hp}")?;
    }
    Ok(())
}

pub fn read_truth_sidecar(text: &str) -> Result<SyntheticTruth> {
    let mut kappa = None;
    let mut sigma = None;
    let mut alphas = None;
    let mut seed = None;
    let mut stream = None;
    let mut hp_lines = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |m: String| Error::Parse {
            line: i + 1,
            message: m,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| perr(format!("expected key=value, got `{line}`")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| perr(format!("bad number `{s}`")))
        };
        let int = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| perr(format!("bad integer `{s}`")))
        };
        match k.trim() {
            "kappa_true" => kappa = Some(num(v)?),
            "sigma_true" => sigma = Some(num(v)?),
            "alpha_true" => alphas = Some(v.split(',').map(num).collect::<Result<Vec<_>>>()?),
            "seed" => seed = Some(int(v)?),
            "stream_id" => stream = Some(int(v)?),
            key if Hyperparams::NAMES.contains(&key) => {
                hp_lines.push_str(line);
                hp_lines.push('\n');
            }
            other => return Err(perr(format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| Error::invalid(format!("truth file lacks `{k}`"));
    Ok(SyntheticTruth {
        kappa_true: kappa.ok_or_else(|| missing("kappa_true"))?,
        sigma_true: sigma.ok_or_else(|| missing("sigma_true"))?,
        alpha_true: alphas.ok_or_else(|| missing("alpha_true"))?,
        hyperparams_used: if hp_lines.is_empty() {
            None
        } else {
            Some(hp_lines.parse()?)
        },
        rng: RngStream::new(
            seed.ok_or_else(|| missing("seed"))?,
            stream.ok_or_else(|| missing("stream_id"))?,
        ),
    })
}

/// Shape of a synthetic multi-speaker vowel corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDatabaseConfig {
    /// Speakers per category: male, female, child.
    pub speakers: [usize; 3],
    pub repetitions: u32,
    pub kappa: f64,
    /// Mean scale per category relative to the template.
    pub alpha_center: [f64; 3],
    pub alpha_sd: f64,
    /// Relative sd of a speaker's idiosyncratic deviation per formant.
    pub speaker_sd: f64,
    /// Relative sd of token-to-token variation.
    pub token_sd: f64,
}

impl Default for SyntheticDatabaseConfig {
    fn default() -> Self {
        SyntheticDatabaseConfig {
            speakers: [12, 12, 12],
            repetitions: 2,
            kappa: 150.0,
            alpha_center: [1.0, 1.15, 1.3],
            alpha_sd: 0.04,
            speaker_sd: 0.04,
            token_sd: 0.03,
        }
    }
}

/// A corpus whose inter-speaker variation is mostly an affine warp of the
/// template, so normalization has something to remove.
pub fn synthetic_vowel_database(
    cfg: &SyntheticDatabaseConfig,
    rng: &mut RngStream,
) -> Result<VowelDatabase> {
    let mut records = Vec::new();
    for (ci, cat) in Category::ALL.into_iter().enumerate() {
        for s in 0..cfg.speakers[ci] {
            let id = format!("{}{:02}", cat.code().to_ascii_lowercase(), s + 1);
            let alpha = cfg.alpha_center[ci] + cfg.alpha_sd * sample_gaussian(rng, 0.0, 1.0)?;
            for (vowel, base) in TEMPLATE_FORMANTS {
                let mut own = [0.0; 3];
                for k in 0..3 {
                    own[k] = base[k] * (1.0 + cfg.speaker_sd * sample_gaussian(rng, 0.0, 1.0)?);
                }
                for rep in 1..=cfg.repetitions {
                    let mut formants = [0.0; 3];
                    for k in 0..3 {
                        let clean = warp_value(own[k], alpha, cfg.kappa);
                        formants[k] = (clean
                            * (1.0 + cfg.token_sd * sample_gaussian(rng, 0.0, 1.0)?))
                        .max(50.0);
                    }
                    records.push(VowelRecord {
                        speaker_id: id.clone(),
                        category: cat,
                        vowel: vowel.to_string(),
                        repetition: rep,
                        formants,
                    });
                }
            }
        }
    }
    VowelDatabase::new(DatabaseName::Synthetic, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{residual, AffineParams};

    #[test]
    fn noiseless_references_fit_exactly() {
        let x = template_vector("x");
        let truth = SyntheticTruth::draw(150.0, 0.0, 1.0, 0.05, 5, RngStream::new(1, 0)).unwrap();
        let data = generate_synthetic(&x, &truth, 5).unwrap();
        for (y, &a) in data.references().iter().zip(&truth.alpha_true) {
            let res = residual(y, &x, &AffineParams::new(a, 150.0).unwrap()).unwrap();
            assert!(res.iter().all(|e| e.abs() < 1e-9));
        }
    }

    #[test]
    fn regeneration_is_identical() {
        let x = template_vector("x");
        let t = SyntheticTruth::draw(150.0, 30.0, 1.0, 0.05, 4, RngStream::new(2, 3)).unwrap();
        let a = generate_synthetic(&x, &t, 4).unwrap();
        let t2 = SyntheticTruth::draw(150.0, 30.0, 1.0, 0.05, 4, RngStream::new(2, 3)).unwrap();
        let b = generate_synthetic(&x, &t2, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pooled_noise_sd() {
        let x = template_vector("x");
        let t = SyntheticTruth::draw(150.0, 30.0, 1.0, 0.05, 1000, RngStream::new(3, 0)).unwrap();
        let data = generate_synthetic(&x, &t, 1000).unwrap();
        let mut sq = 0.0;
        let mut cnt = 0.0;
        for (y, &a) in data.references().iter().zip(&t.alpha_true) {
            for e in residual(y, &x, &AffineParams::new(a, 150.0).unwrap()).unwrap() {
                sq += e * e;
                cnt += 1.0;
            }
        }
        let sd = (sq / cnt).sqrt();
        assert!((sd - 30.0).abs() < 0.02 * 30.0, "{sd}");
    }

    #[test]
    fn sidecar_round_trip() {
        let mut t = SyntheticTruth::draw(150.0, 30.0, 1.0, 0.05, 3, RngStream::new(9, 1)).unwrap();
        t.hyperparams_used = Some(Hyperparams::new(150.0, 50.0, 1.0, 0.1, 1.0, 100.0).unwrap());
        let mut buf = Vec::new();
        write_truth_sidecar(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("kappa_true=150\n"));
        let back = read_truth_sidecar(&text).unwrap();
        assert_eq!(back.alpha_true, t.alpha_true);
        assert_eq!(back.hyperparams_used, t.hyperparams_used);
        assert_eq!((back.rng.seed(), back.rng.stream_id()), (9, 1));
    }

    #[test]
    fn synthetic_corpus_shape() {
        let cfg = SyntheticDatabaseConfig {
            speakers: [2, 3, 1],
            ..Default::default()
        };
        let db = synthetic_vowel_database(&cfg, &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(db.speakers().len(), 6);
        assert_eq!(db.speaker_count(Category::Female), 3);
        assert_eq!(db.records().len(), 6 * 10 * 2);
        let v = super::super::build_formant_vectors(
            &db,
            super::super::RepetitionPolicy::MeanOfRepetitions,
        )
        .unwrap();
        assert!(v.iter().all(|f| f.r() == 30));
    }
}

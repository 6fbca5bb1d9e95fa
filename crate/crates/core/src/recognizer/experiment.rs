use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use super::{classify, fit_classes, LabeledFormants};
use crate::bayes::{run_gibbs, GibbsConfig, Hyperparams, DEFAULT_BURN_IN, DEFAULT_ITERATIONS};
use crate::classical::{
    aggregate, estimate_pair, Adjustment, Criterion, DegenerateShiftPolicy, PairEstimate,
};
use crate::data::{build_formant_vectors, DatabaseName, RepetitionPolicy, VowelDatabase};
use crate::error::{Error, Result};
use crate::hyper::{estimate_hyperparams, HyperparamBounds, ILGrid};
use crate::model::{warp_value, Category, FormantVector, PairedDataset};
use crate::numerics::{OptimizerConfig, RngStream};

/// A speaker category or every speaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeakerGroup {
    Male,
    Female,
    Child,
    All,
}

impl SpeakerGroup {
    pub const CATEGORIES: [SpeakerGroup; 3] = [
        SpeakerGroup::Male,
        SpeakerGroup::Female,
        SpeakerGroup::Child,
    ];

    pub fn contains(self, c: Category) -> bool {
        matches!(
            (self, c),
            (SpeakerGroup::All, _)
                | (SpeakerGroup::Male, Category::Male)
                | (SpeakerGroup::Female, Category::Female)
                | (SpeakerGroup::Child, Category::Child)
        )
    }

    pub fn code(self) -> char {
        match self {
            SpeakerGroup::Male => 'M',
            SpeakerGroup::Female => 'F',
            SpeakerGroup::Child => 'C',
            SpeakerGroup::All => 'A',
        }
    }
}

impl fmt::Display for SpeakerGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpeakerGroup::Male => "male",
            SpeakerGroup::Female => "female",
            SpeakerGroup::Child => "child",
            SpeakerGroup::All => "all",
        })
    }
}

impl FromStr for SpeakerGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m" | "male" => Ok(SpeakerGroup::Male),
            "f" | "female" => Ok(SpeakerGroup::Female),
            "c" | "child" => Ok(SpeakerGroup::Child),
            "a" | "all" => Ok(SpeakerGroup::All),
            _ => Err(Error::invalid(format!(
                "unknown speaker group `{s}` (expected male, female, child or all)"
            ))),
        }
    }
}

/// How a subject is normalized before classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Baseline,
    Bayes,
    Mse,
    MseClamped,
    Mae,
    MaeClamped,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::Baseline,
        Estimator::Bayes,
        Estimator::Mse,
        Estimator::MseClamped,
        Estimator::Mae,
        Estimator::MaeClamped,
    ];

    /// Long row label used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            Estimator::Baseline => "Baseline Case",
            Estimator::Bayes => "Bayesian Estimation",
            Estimator::Mse => "MSE without any adjustment",
            Estimator::MseClamped => "MSE with adjusted outliers",
            Estimator::Mae => "MAE without any adjustment",
            Estimator::MaeClamped => "MAE with adjusted outliers",
        }
    }

    fn classical(self) -> Option<(Criterion, bool)> {
        match self {
            Estimator::Mse => Some((Criterion::Mse, false)),
            Estimator::MseClamped => Some((Criterion::Mse, true)),
            Estimator::Mae => Some((Criterion::Mae, false)),
            Estimator::MaeClamped => Some((Criterion::Mae, true)),
            _ => None,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Baseline => "baseline",
            Estimator::Bayes => "bayes",
            Estimator::Mse => "mse",
            Estimator::MseClamped => "mse-clamped",
            Estimator::Mae => "mae",
            Estimator::MaeClamped => "mae-clamped",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| Error::invalid(format!("unknown estimator `{s}`")))
    }
}

/// Subject group, reference group and estimator of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExperimentPlan {
    pub subject: SpeakerGroup,
    /// Ignored by [`Estimator::Baseline`].
    pub reference: SpeakerGroup,
    pub estimator: Estimator,
}

impl ExperimentPlan {
    pub fn new(subject: SpeakerGroup, reference: SpeakerGroup, estimator: Estimator) -> Self {
        ExperimentPlan {
            subject,
            reference,
            estimator,
        }
    }

    /// Two-letter code such as `MF` (male subjects, female references).
    pub fn code(&self) -> String {
        format!("{}{}", self.subject.code(), self.reference.code())
    }
}

/// Where the Bayesian estimator gets its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperparamSource {
    /// Maximize the integrated likelihood for every subject.
    PerSubject {
        bounds: HyperparamBounds,
        grid: ILGrid,
        optimizer: OptimizerConfig,
    },
    Fixed(Hyperparams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesSettings {
    pub hyperparams: HyperparamSource,
    pub iterations: usize,
    pub burn_in: usize,
    /// Subject `k` of the database uses stream `k` of this seed.
    pub seed: u64,
}

impl Default for BayesSettings {
    fn default() -> Self {
        BayesSettings {
            hyperparams: HyperparamSource::PerSubject {
                bounds: HyperparamBounds::default(),
                grid: ILGrid::default(),
                optimizer: OptimizerConfig::default(),
            },
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfigs {
    /// Simplex settings for the pairwise fits.
    pub optimizer: OptimizerConfig,
    /// Upper end `L` of the clamp range for the adjusted estimators.
    pub clamp_limit: f64,
    pub bayes: BayesSettings,
}

impl Default for EstimatorConfigs {
    fn default() -> Self {
        EstimatorConfigs {
            optimizer: OptimizerConfig::default(),
            clamp_limit: 500.0,
            bayes: BayesSettings::default(),
        }
    }
}

/// Counts indexed by (true vowel, recognized vowel).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::invalid(format!("vowel `{label}` is not a class label")))
    }

    /// Trials per true vowel.
    pub fn row_totals(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectOutcome {
    pub speaker_id: String,
    pub category: Category,
    pub alpha: f64,
    pub kappa: f64,
    pub trials: usize,
    pub correct: usize,
}

/// A subject left out because its normalization failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectFailure {
    pub speaker_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub database: DatabaseName,
    pub plan: ExperimentPlan,
    pub accuracy: f64,
    pub n_trials: usize,
    pub n_correct: usize,
    pub confusion: ConfusionMatrix,
    pub subjects: Vec<SubjectOutcome>,
    pub failures: Vec<SubjectFailure>,
}

/// `(method - baseline) / baseline × 100`.
pub fn improvement_percent(method: f64, baseline: f64) -> f64 {
    (method - baseline) / baseline * 100.0
}

type Warp = std::result::Result<(f64, f64), String>;

/// Leave-one-speaker-out evaluation.
///
/// Each subject of `plan.subject` is normalized against the speakers of
/// `plan.reference` other than itself; every one of its tokens is warped
/// and classified against classes fitted on the unnormalized tokens of
/// all other speakers. Classical estimators share one database shift
/// per plan, averaged over that plan's subjects.
pub fn run_experiment(
    plan: &ExperimentPlan,
    db: &VowelDatabase,
    cfg: &EstimatorConfigs,
) -> Result<ExperimentResult> {
    let vectors = build_formant_vectors(db, RepetitionPolicy::MeanOfRepetitions)?;
    let subjects: Vec<(usize, &FormantVector)> = vectors
        .iter()
        .enumerate()
        .filter(|(_, v)| plan.subject.contains(v.category()))
        .collect();
    if subjects.is_empty() {
        return Err(Error::invalid(format!(
            "no {} speakers in the database",
            plan.subject
        )));
    }
    let references_of = |x: &FormantVector| -> Vec<FormantVector> {
        vectors
            .iter()
            .filter(|y| y.speaker_id() != x.speaker_id() && plan.reference.contains(y.category()))
            .cloned()
            .collect()
    };

    let warps: Vec<Warp> = match plan.estimator {
        Estimator::Baseline => vec![Ok((1.0, 0.0)); subjects.len()],
        Estimator::Bayes => subjects
            .par_iter()
            .map(|&(k, x)| {
                bayes_warp(x, references_of(x), k as u64, &cfg.bayes).map_err(|e| e.to_string())
            })
            .collect(),
        est => {
            let (criterion, clamped) = est.classical().expect("classical estimator");
            let adjustment = if clamped {
                Adjustment::Clamped(cfg.clamp_limit)
            } else {
                Adjustment::None
            };
            classical_warps(
                &subjects,
                &references_of,
                criterion,
                adjustment,
                &cfg.optimizer,
            )
        }
    };

    let mut confusion = ConfusionMatrix::new(db.vowels());
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (&(_, x), warp) in subjects.iter().zip(warps) {
        let (alpha, kappa) = match warp {
            Ok(w) => w,
            Err(message) => {
                warn!(
                    "subject `{}` left out of {}: {message}",
                    x.speaker_id(),
                    plan.code()
                );
                failures.push(SubjectFailure {
                    speaker_id: x.speaker_id().to_string(),
                    message,
                });
                continue;
            }
        };
        let training: Vec<LabeledFormants> = db
            .records()
            .iter()
            .filter(|r| r.speaker_id != x.speaker_id())
            .map(|r| LabeledFormants {
                label: r.vowel.clone(),
                formants: r.formants,
            })
            .collect();
        let model = fit_classes(&training)?;
        let (mut trials, mut correct) = (0, 0);
        for r in db.records_of(x.speaker_id()) {
            let warped = r.formants.map(|f| warp_value(f, alpha, kappa));
            let (label, _) = classify(warped, &model)?;
            let (t, p) = (confusion.index(&r.vowel)?, confusion.index(&label)?);
            confusion.counts[t][p] += 1;
            trials += 1;
            correct += usize::from(t == p);
        }
        outcomes.push(SubjectOutcome {
            speaker_id: x.speaker_id().to_string(),
            category: x.category(),
            alpha,
            kappa,
            trials,
            correct,
        });
    }

    let n_trials: usize = outcomes.iter().map(|o| o.trials).sum();
    let n_correct: usize = outcomes.iter().map(|o| o.correct).sum();
    if n_trials == 0 {
        return Err(Error::invalid(format!(
            "plan {} {}: no subject could be evaluated",
            plan.code(),
            plan.estimator
        )));
    }
    Ok(ExperimentResult {
        database: db.name,
        plan: *plan,
        accuracy: n_correct as f64 / n_trials as f64,
        n_trials,
        n_correct,
        confusion,
        subjects: outcomes,
        failures,
    })
}

fn bayes_warp(
    x: &FormantVector,
    refs: Vec<FormantVector>,
    stream: u64,
    s: &BayesSettings,
) -> Result<(f64, f64)> {
    if refs.is_empty() {
        return Err(Error::invalid("no reference speakers"));
    }
    let data = PairedDataset::new(x.clone(), refs)?;
    let hp = match &s.hyperparams {
        HyperparamSource::Fixed(hp) => *hp,
        HyperparamSource::PerSubject {
            bounds,
            grid,
            optimizer,
        } => estimate_hyperparams(&data, bounds, grid, optimizer)?,
    };
    let cfg = GibbsConfig::new(RngStream::new(s.seed, stream)).with_length(s.iterations, s.burn_in);
    let est = run_gibbs(&data, &hp, &cfg)?;
    Ok((est.subject_alpha(), est.kappa_mean))
}

fn classical_warps(
    subjects: &[(usize, &FormantVector)],
    references_of: &(dyn Fn(&FormantVector) -> Vec<FormantVector> + Sync),
    criterion: Criterion,
    adjustment: Adjustment,
    optimizer: &OptimizerConfig,
) -> Vec<Warp> {
    let fits: Vec<std::result::Result<Vec<PairEstimate>, String>> = subjects
        .par_iter()
        .map(|&(_, x)| {
            let refs = references_of(x);
            if refs.is_empty() {
                return Err("no reference speakers".to_string());
            }
            refs.iter()
                .map(|y| estimate_pair(y, x, criterion, optimizer))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.to_string())
        })
        .collect();
    let pairs: Vec<PairEstimate> = fits
        .iter()
        .filter_map(|f| f.as_ref().ok())
        .flatten()
        .cloned()
        .collect();
    let agg = if pairs.is_empty() {
        Err("no pairwise fit succeeded".to_string())
    } else {
        aggregate(&pairs, adjustment, DegenerateShiftPolicy::Exclude).map_err(|e| e.to_string())
    };
    subjects
        .iter()
        .zip(fits)
        .map(|(&(_, x), fit)| {
            fit?;
            let est = agg.as_ref().map_err(Clone::clone)?;
            Ok((est.alpha_by_subject[x.speaker_id()], est.kappa))
        })
        .collect()
}

/// One row per result:
/// `database,plan,subject_category,reference_category,estimator,accuracy,n_trials,failed_subjects`.
pub fn write_accuracy_csv<W: Write>(mut w: W, results: &[ExperimentResult]) -> std::io::Result<()> {
    writeln!(w, "database,plan,subject_category,reference_category,estimator,accuracy,n_trials,failed_subjects")?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.database,
            r.plan.code(),
            r.plan.subject,
            r.plan.reference,
            r.plan.estimator,
            r.accuracy,
            r.n_trials,
            r.failures.len()
        )?;
    }
    Ok(())
}

/// `method,database,accuracy_percent,improvement_percent`, the
/// improvement taken against the baseline row with the same database and
/// subject group (empty when there is none).
pub fn write_summary_csv<W: Write>(mut w: W, results: &[ExperimentResult]) -> std::io::Result<()> {
    writeln!(
        w,
        "method,database,subject_category,reference_category,accuracy_percent,improvement_percent"
    )?;
    for r in results {
        let baseline = results.iter().find(|b| {
            b.plan.estimator == Estimator::Baseline
                && b.database == r.database
                && b.plan.subject == r.plan.subject
        });
        let improvement = match baseline {
            Some(b) if r.plan.estimator != Estimator::Baseline => {
                format!("{:.1}", improvement_percent(r.accuracy, b.accuracy))
            }
            _ => String::new(),
        };
        writeln!(
            w,
            "{},{},{},{},{:.1},{}",
            r.plan.estimator.label(),
            r.database,
            r.plan.subject,
            r.plan.reference,
            100.0 * r.accuracy,
            improvement
        )?;
    }
    Ok(())
}

/// Square table: first column the true vowel, one column per recognized
/// vowel.
pub fn write_confusion_csv<W: Write>(mut w: W, c: &ConfusionMatrix) -> std::io::Result<()> {
    writeln!(w, "vowel,{}", c.labels.join(","))?;
    for (label, row) in c.labels.iter().zip(&c.counts) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        writeln!(w, "{label},{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthetic_vowel_database, SyntheticDatabaseConfig};

    fn small_db(seed: u64) -> VowelDatabase {
        let cfg = SyntheticDatabaseConfig {
            speakers: [6, 6, 6],
            ..Default::default()
        };
        synthetic_vowel_database(&cfg, &mut RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        for g in ["male", "F", "child", "all"] {
            assert!(g.parse::<SpeakerGroup>().is_ok());
        }
        assert_eq!(
            ExperimentPlan::new(SpeakerGroup::Male, SpeakerGroup::Female, Estimator::Mae).code(),
            "MF"
        );
        assert!((improvement_percent(80.1, 75.2) - 6.5).abs() < 0.05);
    }

    #[test]
    fn baseline_bookkeeping() {
        let db = small_db(3);
        let plan = ExperimentPlan::new(SpeakerGroup::All, SpeakerGroup::All, Estimator::Baseline);
        let r = run_experiment(&plan, &db, &EstimatorConfigs::default()).unwrap();
        assert_eq!(r.n_trials, db.records().len());
        assert!((0.0..=1.0).contains(&r.accuracy));
        let totals = r.confusion.row_totals();
        for (label, total) in r.confusion.labels.iter().zip(totals) {
            assert_eq!(
                total,
                db.records().iter().filter(|x| &x.vowel == label).count()
            );
        }
        let diag: usize = (0..r.confusion.labels.len())
            .map(|i| r.confusion.counts[i][i])
            .sum();
        assert_eq!(diag, r.n_correct);
        assert!(r.subjects.iter().all(|s| s.alpha == 1.0 && s.kappa == 0.0));
    }

    #[test]
    fn normalization_helps_on_warped_speakers() {
        let db = small_db(11);
        let cfg = EstimatorConfigs {
            bayes: BayesSettings {
                hyperparams: HyperparamSource::Fixed(
                    Hyperparams::new(150.0, 20.0, 1.0, 0.2, 5.0, 200.0).unwrap(),
                ),
                iterations: 400,
                burn_in: 200,
                seed: 5,
            },
            ..Default::default()
        };
        let acc = |e| {
            run_experiment(
                &ExperimentPlan::new(SpeakerGroup::All, SpeakerGroup::All, e),
                &db,
                &cfg,
            )
            .unwrap()
            .accuracy
        };
        let base = acc(Estimator::Baseline);
        let bayes = acc(Estimator::Bayes);
        assert!(bayes > base, "bayes {bayes} vs baseline {base}");
        assert!(acc(Estimator::Mae) > base);
    }

    #[test]
    fn csv_exports() {
        let db = small_db(2);
        let cfg = EstimatorConfigs::default();
        let results: Vec<ExperimentResult> = [Estimator::Baseline, Estimator::MseClamped]
            .into_iter()
            .map(|e| {
                run_experiment(
                    &ExperimentPlan::new(SpeakerGroup::All, SpeakerGroup::All, e),
                    &db,
                    &cfg,
                )
                .unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &results).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(
            lines[1].starts_with("Baseline Case,Synthetic,all,all,") && lines[1].ends_with(',')
        );
        let expected = improvement_percent(results[1].accuracy, results[0].accuracy);
        let got: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
        assert!((got - expected).abs() <= 0.05 + 1e-12);

        let mut buf = Vec::new();
        write_confusion_csv(&mut buf, &results[0].confusion).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + results[0].confusion.labels.len());
    }

    #[test]
    fn empty_group_is_an_error() {
        let cfg = SyntheticDatabaseConfig {
            speakers: [5, 5, 0],
            ..Default::default()
        };
        let db = synthetic_vowel_database(&cfg, &mut RngStream::new(1, 0)).unwrap();
        let plan = ExperimentPlan::new(SpeakerGroup::Child, SpeakerGroup::All, Estimator::Baseline);
        assert!(run_experiment(&plan, &db, &EstimatorConfigs::default()).is_err());
    }
}

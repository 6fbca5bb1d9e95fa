use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use vtln::bayes::{DEFAULT_BURN_IN, DEFAULT_ITERATIONS};
use vtln::classical::Criterion;
use vtln::data::{DatabaseName, RepetitionPolicy};
use vtln::hyper::{HyperAxis, HyperparamBounds, ILGrid};
use vtln::numerics::OptimizerConfig;
use vtln::recognizer::SpeakerGroup;

/// A vowel database and which speakers to use from it.
#[derive(Debug, Clone, Args)]
pub struct DatabaseArgs {
    /// Vowel database CSV: speaker_id,category,vowel,repetition,F1,F2,F3.
    #[arg(long)]
    pub input: PathBuf,

    /// Corpus label recorded in the outputs (pnb, hil or synthetic).
    #[arg(long, default_value = "synthetic")]
    pub database: DatabaseName,

    /// How repeated tokens form a speaker's vector: mean or each.
    #[arg(long, default_value = "mean")]
    pub repetitions: RepetitionPolicy,

    /// Reference speakers: male, female, child or all (the subject is
    /// always left out).
    #[arg(long, default_value = "all")]
    pub references: SpeakerGroup,
}

/// Nelder-Mead stopping rules.
#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Iteration cap, summed over restarts.
    #[arg(long, default_value_t = OptimizerConfig::default().max_iterations)]
    pub max_iterations: usize,

    /// Simplex diameter tolerance.
    #[arg(long, default_value_t = OptimizerConfig::default().x_tolerance)]
    pub x_tol: f64,

    /// Objective spread tolerance.
    #[arg(long, default_value_t = OptimizerConfig::default().f_tolerance)]
    pub f_tol: f64,

    /// Initial simplex edge relative to each coordinate.
    #[arg(long, default_value_t = OptimizerConfig::default().initial_simplex_scale)]
    pub simplex_scale: f64,
}

impl OptimizerArgs {
    pub fn config(&self) -> anyhow::Result<OptimizerConfig> {
        let cfg = OptimizerConfig {
            max_iterations: self.max_iterations,
            x_tolerance: self.x_tol,
            f_tolerance: self.f_tol,
            initial_simplex_scale: self.simplex_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Integrated-likelihood quadrature and hyperparameter search box.
#[derive(Debug, Clone, Args)]
pub struct LikelihoodArgs {
    /// Starting shift nodes of the (shift, noise) quadrature.
    #[arg(long, default_value_t = ILGrid::default().kappa_nodes)]
    pub kappa_nodes: usize,

    /// Starting noise nodes.
    #[arg(long, default_value_t = ILGrid::default().sigma_nodes)]
    pub sigma_nodes: usize,

    /// Cap on shift nodes while doubling.
    #[arg(long, default_value_t = ILGrid::default().max_kappa_nodes)]
    pub max_kappa_nodes: usize,

    /// Cap on noise nodes while doubling.
    #[arg(long, default_value_t = ILGrid::default().max_sigma_nodes)]
    pub max_sigma_nodes: usize,

    /// Stop doubling once successive log values differ by less.
    #[arg(long, default_value_t = ILGrid::default().tolerance)]
    pub il_tolerance: f64,

    /// Integrate over the whole prior box instead of the located mass.
    #[arg(long)]
    pub no_focus: bool,

    /// Override one search bound, e.g. `--bound b=1:200`. Defaults:
    /// a=-500:1000 b=1:500 c=0.5:2 d=0.01:0.5 theta1=0.1:50 theta2=1.1:500.
    #[arg(long = "bound", value_name = "NAME=LO:HI")]
    pub bounds: Vec<String>,

    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

impl LikelihoodArgs {
    pub fn grid(&self) -> anyhow::Result<ILGrid> {
        let grid = ILGrid {
            kappa_range: None,
            kappa_nodes: self.kappa_nodes,
            sigma_nodes: self.sigma_nodes,
            max_kappa_nodes: self.max_kappa_nodes,
            max_sigma_nodes: self.max_sigma_nodes,
            tolerance: self.il_tolerance,
            focus: !self.no_focus,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn bounds(&self) -> anyhow::Result<HyperparamBounds> {
        let mut b = HyperparamBounds::default();
        for spec in &self.bounds {
            let (name, range) = spec
                .split_once('=')
                .with_context(|| format!("bound `{spec}` is not NAME=LO:HI"))?;
            let axis: HyperAxis = name.trim().parse()?;
            let (lo, hi) = range
                .split_once(':')
                .with_context(|| format!("bound `{spec}` is not NAME=LO:HI"))?;
            b.lower[axis.index()] = lo
                .trim()
                .parse()
                .with_context(|| format!("bad lower bound in `{spec}`"))?;
            b.upper[axis.index()] = hi
                .trim()
                .parse()
                .with_context(|| format!("bad upper bound in `{spec}`"))?;
        }
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClassicalArgs {
    #[command(flatten)]
    pub db: DatabaseArgs,

    /// Fit criterion: mse or mae.
    #[arg(long, default_value = "mse")]
    pub criterion: Criterion,

    /// Clamp every pairwise shift into [0, L] Hz before averaging.
    #[arg(long, value_name = "L")]
    pub clamp: Option<f64>,

    /// Subject speaker id; repeat for several. Every speaker when omitted.
    #[arg(long = "subject")]
    pub subjects: Vec<String>,

    /// Fail instead of skipping a subject whose shift average is undefined.
    #[arg(long)]
    pub strict: bool,

    #[command(flatten)]
    pub optimizer: OptimizerArgs,

    /// Directory for pairs.csv, subjects.csv and estimate.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BayesArgs {
    #[command(flatten)]
    pub db: DatabaseArgs,

    /// Subject speaker id.
    #[arg(long)]
    pub subject: String,

    /// Hyperparameters as key=value lines (a, b, c, d, theta1, theta2);
    /// the integrated-likelihood fit is skipped when given.
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,

    /// Insist on supplied hyperparameters (requires --hyperparams).
    #[arg(long)]
    pub skip_hyperopt: bool,

    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Gibbs iterations in total.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,

    /// Leading iterations discarded before averaging.
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,

    /// Initial shift [default: prior mean a].
    #[arg(long)]
    pub kappa0: Option<f64>,

    /// Initial noise sd [default: (theta1 + theta2) / 2].
    #[arg(long)]
    pub sigma0: Option<f64>,

    /// Also write every sample to trace.csv.
    #[arg(long)]
    pub trace: bool,

    #[command(flatten)]
    pub likelihood: LikelihoodArgs,

    /// Directory for estimate.txt, alphas.csv, hyperparams.txt and trace.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HyperoptArgs {
    #[command(flatten)]
    pub db: DatabaseArgs,

    /// Subject speaker id.
    #[arg(long)]
    pub subject: String,

    /// Use these hyperparameters as the scan centre instead of fitting.
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,

    /// Export a scan of one hyperparameter (a, b, c, d, theta1, theta2);
    /// repeat for several.
    #[arg(long = "scan", value_name = "NAME")]
    pub scans: Vec<HyperAxis>,

    /// Points per scan.
    #[arg(long, default_value_t = 21)]
    pub scan_points: usize,

    #[command(flatten)]
    pub likelihood: LikelihoodArgs,

    /// Directory for hyperparams.txt and scan_<name>.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Which subject/reference combinations to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Setting {
    /// All speakers as subjects against all other speakers.
    Independent,
    /// The nine category pairs (subject × reference).
    Dependent,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct VowelEvalArgs {
    /// Converted Peterson-Barney CSV.
    #[arg(long)]
    pub pnb: Option<PathBuf>,

    /// Converted Hillenbrand CSV.
    #[arg(long)]
    pub hil: Option<PathBuf>,

    /// Any other database CSV (labelled synthetic).
    #[arg(long)]
    pub synthetic: Option<PathBuf>,

    /// Comma-separated estimators: baseline, bayes, mse, mse-clamped,
    /// mae, mae-clamped.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "baseline,bayes,mse,mse-clamped,mae,mae-clamped"
    )]
    pub estimators: Vec<String>,

    #[arg(long, value_enum, default_value_t = Setting::Independent)]
    pub setting: Setting,

    /// Clamp limit L in Hz; required by the *-clamped estimators.
    #[arg(long, value_name = "L")]
    pub clamp: Option<f64>,

    /// Fixed hyperparameters for the Bayesian estimator; fitted per
    /// subject when omitted.
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,

    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,

    /// Also write one confusion matrix per evaluation.
    #[arg(long)]
    pub confusion: bool,

    #[command(flatten)]
    pub likelihood: LikelihoodArgs,

    /// Directory for accuracy.csv, summary.csv and confusion/.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct WarpArgs {
    /// Spectrum CSV: freq_hz,amplitude on uniform bins.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub output: PathBuf,

    /// Scale factor.
    #[arg(long)]
    pub alpha: f64,

    /// Shift in Hz.
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,

    /// Start of the bandwidth adjustment in Hz [default: 0.85 × last bin].
    #[arg(long)]
    pub f0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 0)]
    pub stream: u64,

    /// Shift in Hz.
    #[arg(long, default_value_t = 150.0)]
    pub kappa: f64,

    /// Noise sd in Hz.
    #[arg(long, default_value_t = 30.0)]
    pub sigma: f64,

    /// Mean of the per-reference scale factors.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_mean: f64,

    /// Sd of the per-reference scale factors.
    #[arg(long, default_value_t = 0.05)]
    pub alpha_sd: f64,

    /// Number of references.
    #[arg(short = 'n', long, default_value_t = 20)]
    pub references: usize,

    /// Write a multi-speaker vowel corpus instead of a paired dataset.
    #[arg(long)]
    pub corpus: bool,

    /// Corpus speakers per category as M,F,C.
    #[arg(long, value_delimiter = ',', default_value = "12,12,12")]
    pub speakers: Vec<usize>,

    /// Corpus repetitions per vowel.
    #[arg(long, default_value_t = 2)]
    pub corpus_repetitions: u32,

    /// Database CSV to write.
    #[arg(long)]
    pub output: PathBuf,

    /// Truth sidecar (paired datasets only).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl SynthArgs {
    pub fn speaker_counts(&self) -> anyhow::Result<[usize; 3]> {
        match self.speakers.as_slice() {
            &[m, f, c] => Ok([m, f, c]),
            other => bail!("--speakers needs three counts (M,F,C), got {}", other.len()),
        }
    }
}

pub fn policy_label(p: RepetitionPolicy) -> &'static str {
    match p {
        RepetitionPolicy::MeanOfRepetitions => "mean",
        RepetitionPolicy::EachRepetition => "each",
    }
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use vtln::bayes::{run_gibbs, GibbsConfig, Hyperparams};
use vtln::classical::{
    aggregate, estimate_pairs, write_pairs_csv, Adjustment, DegenerateShiftPolicy,
};
use vtln::data::{
    build_formant_vectors, generate_synthetic, load_database, synthetic_vowel_database,
    template_vector, vectors_to_database, write_database, write_truth_sidecar, DatabaseName,
    SyntheticDatabaseConfig, SyntheticTruth, VowelDatabase,
};
use vtln::hyper::{axis_scan, fit_hyperparams, write_scan_csv};
use vtln::model::AffineParams;
use vtln::model::{FormantVector, PairedDataset};
use vtln::numerics::RngStream;
use vtln::recognizer::{
    run_experiment, write_accuracy_csv, write_confusion_csv, write_summary_csv, BayesSettings,
    Estimator, EstimatorConfigs, ExperimentPlan, HyperparamSource, SpeakerGroup,
};
use vtln::spectral::{read_spectrum_csv, warp_spectrum, write_spectrum_csv};

use crate::options::{
    policy_label, BayesArgs, ClassicalArgs, DatabaseArgs, HyperoptArgs, Setting, SynthArgs,
    VowelEvalArgs, WarpArgs,
};

/// The invocation, as recorded at the top of every output file.
fn stamp() -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    format!("# vtln {}", args.join(" "))
}

/// Creates `path` (and its parent directory), writes the stamp line and
/// then whatever `body` writes.
fn write_stamped(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", stamp())
        .and_then(|_| body(&mut w))
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn read_hyperparams(path: &Path) -> Result<Hyperparams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse()
        .with_context(|| format!("parsing {}", path.display()))
}

fn load(args: &DatabaseArgs) -> Result<(VowelDatabase, Vec<FormantVector>)> {
    let db = load_database(&args.input, args.database)?;
    let vectors = build_formant_vectors(&db, args.repetitions)?;
    Ok((db, vectors))
}

/// The subject against every other speaker of the reference group.
fn paired(args: &DatabaseArgs, subject: &str) -> Result<PairedDataset> {
    let (_, vectors) = load(args)?;
    let x = vectors
        .iter()
        .find(|v| v.speaker_id() == subject)
        .with_context(|| format!("speaker `{subject}` not found in {}", args.input.display()))?
        .clone();
    let refs: Vec<FormantVector> = vectors
        .into_iter()
        .filter(|v| v.speaker_id() != subject && args.references.contains(v.category()))
        .collect();
    if refs.is_empty() {
        bail!(
            "no {} reference speakers besides `{subject}`",
            args.references
        );
    }
    Ok(PairedDataset::new(x, refs)?)
}

pub fn estimate_classical(a: &ClassicalArgs) -> Result<()> {
    let cfg = a.optimizer.config()?;
    let adjustment = match a.clamp {
        Some(l) => Adjustment::Clamped(l),
        None => Adjustment::None,
    };
    let (_, vectors) = load(&a.db)?;
    for s in &a.subjects {
        if !vectors.iter().any(|v| v.speaker_id() == s) {
            bail!("speaker `{s}` not found in {}", a.db.input.display());
        }
    }
    let subjects: Vec<FormantVector> = vectors
        .iter()
        .filter(|v| a.subjects.is_empty() || a.subjects.iter().any(|s| s == v.speaker_id()))
        .cloned()
        .collect();
    let references: Vec<FormantVector> = vectors
        .iter()
        .filter(|v| a.db.references.contains(v.category()))
        .cloned()
        .collect();
    let pairs = estimate_pairs(&subjects, &references, a.criterion, &cfg)?;
    let policy = if a.strict {
        DegenerateShiftPolicy::Error
    } else {
        DegenerateShiftPolicy::Exclude
    };
    let est = aggregate(&pairs, adjustment, policy)?;

    let out = &a.out_dir;
    write_stamped(&out.join("pairs.csv"), |w| {
        write_pairs_csv(w, &est.pair_estimates)
    })?;
    write_stamped(&out.join("subjects.csv"), |w| {
        writeln!(w, "subject_id,alpha,kappa,excluded")?;
        for (id, alpha) in &est.alpha_by_subject {
            match est.kappa_by_subject.get(id) {
                Some(k) => writeln!(w, "{id},{alpha},{k},false")?,
                None => writeln!(w, "{id},{alpha},,true")?,
            }
        }
        Ok(())
    })?;
    write_stamped(&out.join("estimate.txt"), |w| {
        writeln!(w, "criterion={}", a.criterion)?;
        match a.clamp {
            Some(l) => writeln!(w, "clamp={l}")?,
            None => writeln!(w, "clamp=none")?,
        }
        writeln!(w, "repetitions={}", policy_label(a.db.repetitions))?;
        writeln!(w, "kappa={}", est.kappa)?;
        writeln!(w, "subjects={}", est.alpha_by_subject.len())?;
        writeln!(w, "excluded={}", est.excluded_subjects.join(","))
    })?;
    println!("kappa={}", est.kappa);
    Ok(())
}

pub fn estimate_bayes(a: &BayesArgs) -> Result<()> {
    if a.skip_hyperopt && a.hyperparams.is_none() {
        bail!("--skip-hyperopt needs --hyperparams");
    }
    let data = paired(&a.db, &a.subject)?;
    let (hp, log_il) = match &a.hyperparams {
        Some(path) => (read_hyperparams(path)?, None),
        None => {
            let fit = fit_hyperparams(
                &data,
                &a.likelihood.bounds()?,
                &a.likelihood.grid()?,
                &a.likelihood.optimizer.config()?,
            )?;
            (fit.hyperparams, Some(fit.log_il))
        }
    };
    let mut cfg = GibbsConfig::new(RngStream::new(a.seed, 0))
        .with_length(a.iterations, a.burn_in)
        .with_trace(a.trace);
    cfg.kappa0 = a.kappa0;
    cfg.sigma0 = a.sigma0;
    let est = run_gibbs(&data, &hp, &cfg)?;

    let out = &a.out_dir;
    write_stamped(&out.join("hyperparams.txt"), |w| {
        if let Some(l) = log_il {
            writeln!(w, "# log_il={l}")?;
        }
        write!(w, "{hp}")
    })?;
    write_stamped(&out.join("alphas.csv"), |w| {
        writeln!(w, "reference_id,alpha")?;
        for (y, alpha) in data.references().iter().zip(&est.alpha_mean) {
            writeln!(w, "{},{alpha}", y.speaker_id())?;
        }
        Ok(())
    })?;
    write_stamped(&out.join("estimate.txt"), |w| {
        writeln!(w, "subject={}", a.subject)?;
        writeln!(w, "alpha={}", est.subject_alpha())?;
        writeln!(w, "kappa={}", est.kappa_mean)?;
        writeln!(w, "sigma={}", est.sigma_mean)?;
        writeln!(w, "seed={}", a.seed)?;
        writeln!(w, "iterations={}", a.iterations)?;
        writeln!(w, "burn_in={}", a.burn_in)?;
        write!(w, "{hp}")
    })?;
    if let Some(trace) = &est.trace {
        write_stamped(&out.join("trace.csv"), |w| trace.write_csv(w))?;
    }
    println!(
        "alpha={} kappa={} sigma={}",
        est.subject_alpha(),
        est.kappa_mean,
        est.sigma_mean
    );
    Ok(())
}

pub fn hyperopt(a: &HyperoptArgs) -> Result<()> {
    let data = paired(&a.db, &a.subject)?;
    let bounds = a.likelihood.bounds()?;
    let grid = a.likelihood.grid()?;
    let out = &a.out_dir;
    let center = match &a.hyperparams {
        Some(path) => read_hyperparams(path)?,
        None => {
            let fit = fit_hyperparams(&data, &bounds, &grid, &a.likelihood.optimizer.config()?)?;
            write_stamped(&out.join("hyperparams.txt"), |w| {
                writeln!(w, "# log_il={}", fit.log_il)?;
                writeln!(
                    w,
                    "# iterations={} converged={}",
                    fit.iterations, fit.converged
                )?;
                write!(w, "{}", fit.hyperparams)
            })?;
            println!("log_il={}", fit.log_il);
            fit.hyperparams
        }
    };
    for axis in &a.scans {
        let rows = axis_scan(&data, &center, *axis, &bounds, a.scan_points, &grid)?;
        write_stamped(&out.join(format!("scan_{axis}.csv")), |w| {
            write_scan_csv(w, *axis, &rows)
        })?;
    }
    Ok(())
}

pub fn vowel_eval(a: &VowelEvalArgs) -> Result<()> {
    let estimators: Vec<Estimator> = a
        .estimators
        .iter()
        .map(|s| s.trim().parse())
        .collect::<vtln::Result<_>>()?;
    let needs_clamp = estimators
        .iter()
        .any(|e| matches!(e, Estimator::MseClamped | Estimator::MaeClamped));
    let clamp_limit = match (a.clamp, needs_clamp) {
        (Some(l), _) => l,
        (None, true) => bail!("the *-clamped estimators need an explicit --clamp L"),
        (None, false) => f64::NAN,
    };
    let hyperparams = match &a.hyperparams {
        Some(path) => HyperparamSource::Fixed(read_hyperparams(path)?),
        None => HyperparamSource::PerSubject {
            bounds: a.likelihood.bounds()?,
            grid: a.likelihood.grid()?,
            optimizer: a.likelihood.optimizer.config()?,
        },
    };
    let cfg = EstimatorConfigs {
        optimizer: a.likelihood.optimizer.config()?,
        clamp_limit,
        bayes: BayesSettings {
            hyperparams,
            iterations: a.iterations,
            burn_in: a.burn_in,
            seed: a.seed,
        },
    };

    let inputs = [
        (DatabaseName::PnB, &a.pnb),
        (DatabaseName::Hil, &a.hil),
        (DatabaseName::Synthetic, &a.synthetic),
    ];
    if inputs.iter().all(|(_, p)| p.is_none()) {
        bail!("give at least one of --pnb, --hil, --synthetic");
    }
    let mut groups: Vec<(SpeakerGroup, SpeakerGroup)> = Vec::new();
    if matches!(a.setting, Setting::Independent | Setting::Both) {
        groups.push((SpeakerGroup::All, SpeakerGroup::All));
    }
    if matches!(a.setting, Setting::Dependent | Setting::Both) {
        for s in SpeakerGroup::CATEGORIES {
            for r in SpeakerGroup::CATEGORIES {
                groups.push((s, r));
            }
        }
    }

    let mut results = Vec::new();
    for (name, path) in inputs {
        let Some(path) = path else { continue };
        let db = load_database(path, name)?;
        for &(s, r) in &groups {
            for &e in &estimators {
                // the baseline does not depend on the reference group
                if e == Estimator::Baseline
                    && results
                        .iter()
                        .any(|x: &vtln::recognizer::ExperimentResult| {
                            x.database == name && x.plan.subject == s && x.plan.estimator == e
                        })
                {
                    continue;
                }
                let plan = ExperimentPlan::new(s, r, e);
                let res = run_experiment(&plan, &db, &cfg)
                    .with_context(|| format!("{name} plan {} estimator {e}", plan.code()))?;
                info!(
                    "{name} {} {e}: accuracy {:.4} over {} trials",
                    plan.code(),
                    res.accuracy,
                    res.n_trials
                );
                results.push(res);
            }
        }
    }

    let out = &a.out_dir;
    write_stamped(&out.join("accuracy.csv"), |w| {
        write_accuracy_csv(w, &results)
    })?;
    write_stamped(&out.join("summary.csv"), |w| write_summary_csv(w, &results))?;
    if a.confusion {
        for r in &results {
            let name = format!("{}_{}_{}.csv", r.database, r.plan.code(), r.plan.estimator);
            write_stamped(&out.join("confusion").join(name), |w| {
                write_confusion_csv(w, &r.confusion)
            })?;
        }
    }
    for r in &results {
        for f in &r.failures {
            eprintln!(
                "warning: {} {} {}: subject `{}` failed: {}",
                r.database,
                r.plan.code(),
                r.plan.estimator,
                f.speaker_id,
                f.message
            );
        }
    }
    Ok(())
}

pub fn warp(a: &WarpArgs) -> Result<()> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let spec = read_spectrum_csv(std::io::BufReader::new(file))
        .with_context(|| format!("reading {}", a.input.display()))?;
    let params = AffineParams::new(a.alpha, a.kappa)?;
    let out = warp_spectrum(&spec, &params, a.f0)?;
    write_stamped(&a.output, |w| write_spectrum_csv(w, &out))
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let rng = RngStream::new(a.seed, a.stream);
    if a.corpus {
        if a.truth.is_some() {
            bail!("--truth applies to paired datasets, not --corpus");
        }
        let cfg = SyntheticDatabaseConfig {
            speakers: a.speaker_counts()?,
            repetitions: a.corpus_repetitions,
            kappa: a.kappa,
            ..Default::default()
        };
        let db = synthetic_vowel_database(&cfg, &mut rng.clone())?;
        return write_stamped(&a.output, |w| write_database(w, &db));
    }
    let truth = SyntheticTruth::draw(
        a.kappa,
        a.sigma,
        a.alpha_mean,
        a.alpha_sd,
        a.references,
        rng,
    )?;
    let data = generate_synthetic(&template_vector("subject"), &truth, a.references)?;
    let mut vectors = vec![data.subject().clone()];
    vectors.extend(data.references().iter().cloned());
    let db = vectors_to_database(DatabaseName::Synthetic, &vectors)?;
    write_stamped(&a.output, |w| write_database(w, &db))?;
    if let Some(path) = &a.truth {
        write_stamped(path, |w| write_truth_sidecar(w, &truth))?;
    }
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vtln::bayes::{run_gibbs, GibbsConfig, Hyperparams};
use vtln::data::{build_formant_vectors, load_database, DatabaseName, RepetitionPolicy};
use vtln::model::PairedDataset;
use vtln::numerics::RngStream;

fn vtln(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtln"))
        .args(args)
        .output()
        .expect("run vtln")
}

fn ok(args: &[&str]) -> String {
    let out = vtln(args);
    assert!(
        out.status.success(),
        "vtln {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// File contents without `#` comment lines.
fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// `key=value` lookup in a text report.
fn value(path: &Path, key: &str) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {}", path.display()))
        .to_string()
}

fn write_hyperparams(dir: &Path, hp: &Hyperparams) -> PathBuf {
    let path = dir.join("hp.txt");
    fs::write(&path, hp.to_string()).unwrap();
    path
}

fn assert_stamped(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    assert!(
        text.starts_with("# vtln "),
        "{} lacks the invocation line",
        path.display()
    );
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        ok(&["synth", "--seed", "9", "-n", "5", "--output", p(out)]);
    }
    assert_eq!(data_lines(&a), data_lines(&b));
    ok(&["synth", "--seed", "10", "-n", "5", "--output", p(&b)]);
    assert_ne!(data_lines(&a), data_lines(&b));
    assert_stamped(&a);
}

#[test]
fn classical_recovers_noiseless_shift() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.csv");
    let truth = dir.path().join("truth.txt");
    ok(&[
        "synth",
        "--seed",
        "4",
        "--sigma",
        "0",
        "--alpha-sd",
        "0.08",
        "-n",
        "8",
        "--output",
        p(&db),
        "--truth",
        p(&truth),
    ]);
    let out = dir.path().join("out");
    ok(&[
        "estimate-classical",
        "--input",
        p(&db),
        "--subject",
        "subject",
        "--out-dir",
        p(&out),
    ]);
    let kappa: f64 = value(&out.join("estimate.txt"), "kappa").parse().unwrap();
    let kappa_true: f64 = value(&truth, "kappa_true").parse().unwrap();
    assert!((kappa - kappa_true).abs() < 0.5, "{kappa} vs {kappa_true}");
    assert_eq!(data_lines(&out.join("pairs.csv")).len(), 1 + 8);
    for f in ["pairs.csv", "subjects.csv", "estimate.txt"] {
        assert_stamped(&out.join(f));
    }
}

#[test]
fn classical_echoes_flags() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.csv");
    ok(&["synth", "--seed", "2", "-n", "4", "--output", p(&db)]);
    let out = dir.path().join("out");
    ok(&[
        "estimate-classical",
        "--input",
        p(&db),
        "--criterion",
        "mae",
        "--clamp",
        "500",
        "--out-dir",
        p(&out),
    ]);
    let report = out.join("estimate.txt");
    assert_eq!(value(&report, "criterion"), "mae");
    assert_eq!(value(&report, "clamp"), "500");
    let stamp = fs::read_to_string(&report)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(stamp.contains("--criterion mae --clamp 500"));
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = vtln(&[
        "estimate-classical",
        "--input",
        p(&missing),
        "--out-dir",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(p(&missing)));
}

#[test]
fn bayes_is_deterministic_and_honours_supplied_hyperparams() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.csv");
    ok(&["synth", "--seed", "5", "-n", "6", "--output", p(&db)]);
    let hp = Hyperparams::new(140.0, 30.0, 1.0, 0.1, 2.0, 90.0).unwrap();
    let hp_file = write_hyperparams(dir.path(), &hp);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "estimate-bayes",
            "--input",
            p(&db),
            "--subject",
            "subject",
            "--skip-hyperopt",
            "--hyperparams",
            p(&hp_file),
            "--seed",
            "11",
            "--iterations",
            "600",
            "--burn-in",
            "300",
            "--trace",
            "--out-dir",
            p(&out),
        ]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(
        data_lines(&a.join("estimate.txt")),
        data_lines(&b.join("estimate.txt"))
    );
    assert_eq!(
        data_lines(&a.join("trace.csv")),
        data_lines(&b.join("trace.csv"))
    );
    assert_eq!(data_lines(&a.join("trace.csv")).len(), 1 + 600);
    let used: Hyperparams = fs::read_to_string(a.join("hyperparams.txt"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(used, hp);

    let out = vtln(&[
        "estimate-bayes",
        "--input",
        p(&db),
        "--subject",
        "subject",
        "--skip-hyperopt",
        "--out-dir",
        p(&a),
    ]);
    assert!(!out.status.success());
}

#[test]
fn bayes_matches_long_chain_on_reference_instance() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.csv");
    ok(&[
        "synth",
        "--seed",
        "1",
        "--kappa",
        "150",
        "--sigma",
        "30",
        "--alpha-sd",
        "0.05",
        "-n",
        "20",
        "--output",
        p(&db),
    ]);
    let hp = Hyperparams::new(150.0, 50.0, 1.0, 0.1, 1.0, 100.0).unwrap();
    let hp_file = write_hyperparams(dir.path(), &hp);
    let out = dir.path().join("out");
    ok(&[
        "estimate-bayes",
        "--input",
        p(&db),
        "--subject",
        "subject",
        "--hyperparams",
        p(&hp_file),
        "--seed",
        "3",
        "--out-dir",
        p(&out),
    ]);
    let kappa: f64 = value(&out.join("estimate.txt"), "kappa").parse().unwrap();

    let vectors = build_formant_vectors(
        &load_database(&db, DatabaseName::Synthetic).unwrap(),
        RepetitionPolicy::MeanOfRepetitions,
    )
    .unwrap();
    let data = PairedDataset::new(vectors[0].clone(), vectors[1..].to_vec()).unwrap();
    let long = run_gibbs(
        &data,
        &hp,
        &GibbsConfig::new(RngStream::new(1000, 0))
            .with_length(200_000, 1500)
            .with_trace(true),
    )
    .unwrap();
    let ks = &long.trace.as_ref().unwrap().kappa()[1500..];
    let sd = (ks
        .iter()
        .map(|k| (k - long.kappa_mean).powi(2))
        .sum::<f64>()
        / ks.len() as f64)
        .sqrt();
    assert!(
        (kappa - long.kappa_mean).abs() <= 3.0 * sd,
        "{kappa} vs {} ± {sd}",
        long.kappa_mean
    );
}

#[test]
fn hyperopt_scan_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.csv");
    ok(&["synth", "--seed", "6", "-n", "5", "--output", p(&db)]);
    let hp_file = write_hyperparams(
        dir.path(),
        &Hyperparams::new(150.0, 40.0, 1.0, 0.05, 10.0, 60.0).unwrap(),
    );
    let out = dir.path().join("out");
    ok(&[
        "hyperopt",
        "--input",
        p(&db),
        "--subject",
        "subject",
        "--hyperparams",
        p(&hp_file),
        "--scan",
        "a",
        "--scan",
        "theta2",
        "--out-dir",
        p(&out),
    ]);
    let rows = data_lines(&out.join("scan_a.csv"));
    assert_eq!(rows[0], "a,log_il");
    assert_eq!(rows.len(), 1 + 21);
    assert!(rows[1..].iter().all(|r| r
        .split(',')
        .nth(1)
        .unwrap()
        .parse::<f64>()
        .unwrap()
        .is_finite()));
    assert_eq!(data_lines(&out.join("scan_theta2.csv")).len(), 1 + 21);
}

#[test]
fn hyperopt_fit_writes_hyperparams() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.csv");
    ok(&["synth", "--seed", "8", "-n", "4", "--output", p(&db)]);
    let out = dir.path().join("out");
    ok(&[
        "hyperopt",
        "--input",
        p(&db),
        "--subject",
        "subject",
        "--max-iterations",
        "400",
        "--out-dir",
        p(&out),
    ]);
    let fitted: Hyperparams = fs::read_to_string(out.join("hyperparams.txt"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(fitted.theta2 >= fitted.theta1 + 1.0 - 1e-9);
}

fn spectrum_csv(path: &Path) {
    let mut text = String::from("freq_hz,amplitude\n");
    for k in 0..257 {
        let f = k as f64 * 31.25;
        let a = ((k * 37) % 101) as f64 / 7.0;
        text.push_str(&format!("{f},{a}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn warp_with_unit_scale_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("in.csv"), dir.path().join("out.csv"));
    spectrum_csv(&input);
    ok(&[
        "warp",
        "--input",
        p(&input),
        "--output",
        p(&output),
        "--alpha",
        "1",
        "--kappa",
        "275",
    ]);
    assert_eq!(data_lines(&output), data_lines(&input));
    assert_stamped(&output);

    ok(&[
        "warp",
        "--input",
        p(&input),
        "--output",
        p(&output),
        "--alpha",
        "1.1",
    ]);
    let rows = data_lines(&output);
    assert_eq!(rows.len(), 258);
    assert_eq!(rows.last().unwrap().split(',').next().unwrap(), "8000");

    let bad = vtln(&[
        "warp",
        "--input",
        p(&input),
        "--output",
        p(&output),
        "--alpha",
        "1",
        "--f0",
        "9000",
    ]);
    assert!(!bad.status.success());
}

#[test]
fn vowel_eval_rows_and_improvements() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.csv");
    ok(&[
        "synth",
        "--corpus",
        "--seed",
        "3",
        "--speakers",
        "5,5,5",
        "--output",
        p(&corpus),
    ]);

    let out = dir.path().join("baseline");
    ok(&[
        "vowel-eval",
        "--synthetic",
        p(&corpus),
        "--estimators",
        "baseline",
        "--out-dir",
        p(&out),
    ]);
    let rows = data_lines(&out.join("accuracy.csv"));
    assert_eq!(rows.len(), 2);
    let acc: f64 = rows[1].split(',').nth(5).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let hp_file = write_hyperparams(
        dir.path(),
        &Hyperparams::new(150.0, 20.0, 1.0, 0.2, 5.0, 200.0).unwrap(),
    );
    let out = dir.path().join("all");
    ok(&[
        "vowel-eval",
        "--synthetic",
        p(&corpus),
        "--clamp",
        "500",
        "--hyperparams",
        p(&hp_file),
        "--iterations",
        "300",
        "--burn-in",
        "100",
        "--confusion",
        "--out-dir",
        p(&out),
    ]);
    let summary = data_lines(&out.join("summary.csv"));
    let methods: Vec<&str> = summary[1..]
        .iter()
        .map(|r| r.split(',').next().unwrap())
        .collect();
    assert_eq!(
        methods,
        [
            "Baseline Case",
            "Bayesian Estimation",
            "MSE without any adjustment",
            "MSE with adjusted outliers",
            "MAE without any adjustment",
            "MAE with adjusted outliers"
        ]
    );
    let cols = |r: &str| r.split(',').map(str::to_string).collect::<Vec<_>>();
    let base: f64 = cols(&summary[1])[4].parse().unwrap();
    for r in &summary[2..] {
        let c = cols(r);
        let acc: f64 = c[4].parse().unwrap();
        let imp: f64 = c[5].parse().unwrap();
        // both columns are rounded to one decimal
        assert!((imp - (acc - base) / base * 100.0).abs() < 0.2, "{r}");
    }
    assert_eq!(fs::read_dir(out.join("confusion")).unwrap().count(), 6);

    let missing_clamp = vtln(&[
        "vowel-eval",
        "--synthetic",
        p(&corpus),
        "--estimators",
        "mae-clamped",
        "--out-dir",
        p(&out),
    ]);
    assert!(!missing_clamp.status.success());
}

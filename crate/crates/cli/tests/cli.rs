//! Black-box tests of the `eventloc` binary: exit codes, produced files, and
//! flag/config interplay.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eventloc"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn synthetic(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/synthetic")
        .join(name)
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn treat_writes_treated_documents_and_reports_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("treat")
        .arg("--corpus")
        .arg(fixture("corpus_zh.jsonl"))
        .arg("--lexicons")
        .arg(fixture("lexicons_zh"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let log = stdout(&output);
    assert!(
        log.contains("1517019: 7 sentences"),
        "unexpected treat output: {log}"
    );
    assert!(log.contains("heilongjiang=3"), "unexpected treat output: {log}");
    assert!(log.contains("beijing=2"), "unexpected treat output: {log}");
    let treated = std::fs::read_to_string(dir.path().join("treated.jsonl")).unwrap();
    assert_eq!(treated.lines().count(), 2);
}

#[test]
fn missing_corpus_file_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("treat")
        .arg("--corpus")
        .arg(dir.path().join("no-such-corpus.jsonl"))
        .arg("--lexicons")
        .arg(fixture("lexicons_zh"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
    assert!(stderr(&output).contains("error:"));
}

#[test]
fn unknown_subcommand_exits_with_usage_error() {
    let output = bin().arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn train_then_predict_roundtrip_ranks_the_true_location_higher() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("--seed")
        .arg("7")
        .arg("train")
        .arg("--corpus")
        .arg(fixture("corpus_zh.jsonl"))
        .arg("--lexicons")
        .arg(fixture("lexicons_zh"))
        .args(["--model", "rforest", "--trees", "200"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(dir.path().join("model.json").is_file());
    assert!(dir.path().join("corpora.json").is_file());

    let output = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("predict")
        .arg("--corpus")
        .arg(fixture("corpus_zh.jsonl"))
        .arg("--lexicons")
        .arg(fixture("lexicons_zh"))
        .arg("--model")
        .arg(dir.path().join("model.json"))
        .arg("--corpora")
        .arg(dir.path().join("corpora.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let csv = std::fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("story_id,location,probability,predicted"));
    let probability = |location: &str| -> f64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("1517019,{location},")))
            .unwrap_or_else(|| panic!("no prediction row for {location}"))
            .split(',')
            .nth(2)
            .unwrap()
            .parse()
            .unwrap()
    };
    let heilongjiang = probability("heilongjiang");
    let beijing = probability("beijing");
    assert!(
        heilongjiang > beijing,
        "in-sample ranking wrong: heilongjiang {heilongjiang} vs beijing {beijing}"
    );
    assert!(heilongjiang >= 0.5, "heilongjiang probability {heilongjiang}");
}

#[test]
fn corrupt_model_file_exits_with_prediction_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, "{\"kind\":\"not a model\"}").unwrap();
    let corpora = dir.path().join("corpora.json");
    std::fs::write(&corpora, "{}").unwrap();
    let output = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("predict")
        .arg("--corpus")
        .arg(fixture("corpus_zh.jsonl"))
        .arg("--lexicons")
        .arg(fixture("lexicons_zh"))
        .arg("--model")
        .arg(&model)
        .arg("--corpora")
        .arg(&corpora)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4), "{}", stderr(&output));
    assert!(stderr(&output).contains("model file rejected"));
}

#[test]
fn single_class_labels_exit_with_training_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(
        &corpus,
        "{\"story_id\":\"solo\",\"text\":\"The workers protested in Beijing and Shandong.\",\
         \"labels\":{\"beijing\":1,\"shandong\":1}}\n",
    )
    .unwrap();
    let output = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("--seed")
        .arg("1")
        .arg("train")
        .arg("--corpus")
        .arg(&corpus)
        .arg("--lexicons")
        .arg(fixture("lexicons_zh"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "{}", stderr(&output));
}

#[test]
fn too_few_stories_for_cv_exits_with_evaluation_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("--seed")
        .arg("1")
        .arg("evaluate")
        .arg("--corpus")
        .arg(fixture("corpus_zh.jsonl"))
        .arg("--lexicons")
        .arg(fixture("lexicons_zh"))
        .args(["--k", "3"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(5), "{}", stderr(&output));
    assert!(stderr(&output).contains("3-fold CV needs at least 3 stories"));
}

#[test]
fn command_line_flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("eventloc.conf");
    std::fs::write(
        &config,
        format!(
            "corpus={}\nlexicons={}\n",
            dir.path().join("missing.jsonl").display(),
            fixture("lexicons_zh").display()
        ),
    )
    .unwrap();

    // The config's corpus path is broken, so the flag must win for this to
    // succeed.
    let output = bin()
        .arg("--config")
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .arg("treat")
        .arg("--corpus")
        .arg(fixture("corpus_zh.jsonl"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));

    // Without the flag the config value is used, and it points nowhere.
    let output = bin()
        .arg("--config")
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .arg("treat")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
}

fn run_small_evaluate(out_dir: &Path, jobs: &str) {
    let output = bin()
        .arg("--out-dir")
        .arg(out_dir)
        .args(["--seed", "31", "--jobs", jobs])
        .arg("evaluate")
        .arg("--corpus")
        .arg(synthetic("corpus.jsonl"))
        .arg("--lexicons")
        .arg(synthetic("lexicons"))
        .args(["--models", "rforest", "--trees", "40"])
        .args(["--k", "3", "--repeats", "1", "--n-min", "2", "--n-max", "4"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
}

#[test]
fn thread_count_does_not_change_evaluation_results() {
    let dir = tempfile::tempdir().unwrap();
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    run_small_evaluate(&serial, "1");
    run_small_evaluate(&parallel, "4");
    for file in ["report.json", "accuracy.csv", "roc.csv", "province_counts.csv"] {
        let a = std::fs::read(serial.join(file)).unwrap();
        let b = std::fs::read(parallel.join(file)).unwrap();
        assert!(a == b, "{file} differs between --jobs 1 and --jobs 4");
    }
}

#[test]
fn export_plots_rebuilds_the_csv_files_from_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let eval_dir = dir.path().join("eval");
    run_small_evaluate(&eval_dir, "2");
    let originals: Vec<(String, Vec<u8>)> = ["accuracy.csv", "roc.csv", "province_counts.csv"]
        .iter()
        .map(|f| (f.to_string(), std::fs::read(eval_dir.join(f)).unwrap()))
        .collect();

    let plot_dir = dir.path().join("plots");
    let output = bin()
        .arg("--out-dir")
        .arg(&plot_dir)
        .arg("export-plots")
        .arg("--report")
        .arg(eval_dir.join("report.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    for (file, body) in originals {
        let rebuilt = std::fs::read(plot_dir.join(&file)).unwrap();
        assert!(rebuilt == body, "{file} round-trip through export-plots drifted");
    }
}

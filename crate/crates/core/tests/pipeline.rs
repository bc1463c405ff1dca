use std::fs;
use std::path::{Path, PathBuf};

use poplift::pipeline::{
    load_config, run_pipeline, run_stage, with_jobs, Layout, PipelineConfig, PipelineError, Stage,
};
use poplift::recommenders::Algorithm;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

fn toy_config(out: &Path) -> PipelineConfig {
    let mut config = load_config(&fixture_dir().join("config.toml")).unwrap();
    config.output = out.to_path_buf();
    config
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every file under `root` except the run manifest, which holds timings.
fn output_files(root: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "run_manifest.json" {
                files.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    files.sort();
    files
}

fn assert_same_outputs(a: &Path, b: &Path) {
    let (fa, fb) = (output_files(a), output_files(b));
    assert_eq!(fa, fb);
    for f in fa {
        assert!(
            read(&a.join(&f)) == read(&b.join(&f)),
            "{} differs",
            f.display()
        );
    }
}

#[test]
fn full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path());
    let manifest = run_pipeline(&config).unwrap();
    let layout = Layout::new(dir.path());
    for f in layout.metric_files(&config.algorithms) {
        assert!(f.is_file(), "{} missing", f.display());
    }
    for a in &config.algorithms {
        assert!(layout.recommendations(*a).is_file());
        assert!(layout.model_manifest(*a).is_file());
    }
    assert!(layout.split_manifest().is_file());
    assert_eq!(manifest.stages.len(), 5);
    assert_eq!(manifest.inputs.len(), 2);
    assert_eq!(manifest.model_seeds.len(), 5);

    let text = fs::read_to_string(layout.run_manifest()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(json["split_seed"], 42);
    let split: serde_json::Value = serde_json::from_slice(&read(&layout.split_manifest())).unwrap();
    assert_eq!(split["generator"], "chacha8-mulshift-v1");
    assert_eq!(split["input_hash"], json["inputs"][0]["sha256"]);
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    run_pipeline(&toy_config(a.path())).unwrap();
    with_jobs(Some(1), || run_pipeline(&toy_config(b.path()))).unwrap();
    with_jobs(Some(4), || run_pipeline(&toy_config(c.path()))).unwrap();
    assert_same_outputs(a.path(), b.path());
    assert_same_outputs(a.path(), c.path());
}

#[test]
fn stages_compose_to_full_run() {
    let (whole, staged) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_pipeline(&toy_config(whole.path())).unwrap();
    let config = toy_config(staged.path());
    for stage in Stage::ALL {
        run_stage(stage, &config).unwrap();
    }
    assert_same_outputs(whole.path(), staged.path());
}

#[test]
fn seed_override_changes_the_split() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut config = toy_config(b.path());
    config.override_seed(7);
    run_stage(Stage::Split, &toy_config(a.path())).unwrap();
    run_stage(Stage::Split, &config).unwrap();
    assert_ne!(
        read(&a.path().join("train.csv")),
        read(&b.path().join("train.csv"))
    );
}

#[test]
fn most_popular_only_completes() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config
        .override_algorithms(vec![Algorithm::MostPopular])
        .unwrap();
    run_pipeline(&config).unwrap();
    let layout = Layout::new(dir.path());
    for f in layout.metric_files(&[Algorithm::MostPopular]) {
        assert!(f.is_file(), "{} missing", f.display());
    }
    assert!(!layout.audit(Algorithm::Bmf).exists());
}

#[test]
fn recommend_before_train_is_a_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path());
    run_stage(Stage::Split, &config).unwrap();
    let err = run_stage(Stage::Recommend, &config).unwrap_err();
    match &err {
        PipelineError::MissingInput { stage, path } => {
            assert_eq!(*stage, Stage::Recommend);
            assert!(path.ends_with("models/user-knn.json"), "{}", path.display());
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().starts_with("recommend: missing input"));
}

#[test]
fn missing_dataset_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.dataset.ratings = dir.path().join("nope.csv");
    let err = run_pipeline(&config).unwrap_err();
    assert!(matches!(err, PipelineError::MissingInput { .. }));
    assert_eq!(err.exit_code(), 1);
}

const TINY_RATINGS: &str = "user_id,item_id,rating\n\
1,1,5\n1,2,4\n1,3,3\n1,4,2\n1,5,4\n\
2,1,4\n2,2,2\n2,6,5\n2,7,3\n2,8,4\n\
3,1,3\n3,3,4\n3,5,5\n3,6,1\n3,8,2\n\
";
const TINY_ITEMS: &str = "item_id,title,genres\n\
1,A,Action\n2,B,Comedy\n3,C,Action|Comedy\n4,D,Drama\n5,E,Drama\n6,F,Comedy\n7,G,Action\n8,H,Drama|Action\n";

fn tiny_config(dir: &Path, cohorts: usize) -> PipelineConfig {
    fs::write(dir.join("ratings.csv"), TINY_RATINGS).unwrap();
    fs::write(dir.join("items.csv"), TINY_ITEMS).unwrap();
    let text = format!(
        "output = \"out\"\nalgorithms = [\"most-popular\", \"item-knn\"]\n\
         [dataset]\nratings = \"ratings.csv\"\ncatalog = \"items.csv\"\n\
         [split]\nfraction = 0.6\n\
         [evaluation]\nlist_size = 2\ncohorts = {cohorts}\n"
    );
    PipelineConfig::from_toml_str(&text, dir).unwrap()
}

#[test]
fn audit_of_hand_written_recommendations() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = tiny_config(dir.path(), 3);
    config
        .override_algorithms(vec![Algorithm::MostPopular])
        .unwrap();
    run_stage(Stage::Split, &config).unwrap();
    let layout = Layout::new(&config.output);
    let recs = layout.recommendations(Algorithm::MostPopular);
    fs::create_dir_all(recs.parent().unwrap()).unwrap();
    fs::write(
        &recs,
        "user_id\titem_id\trank\tscore\n1\t7\t1\t0.9\n1\t8\t2\t0.5\n2\t4\t1\t1\n3\t2\t1\t3\n3\t7\t2\t2\n",
    )
    .unwrap();
    run_stage(Stage::Audit, &config).unwrap();
    let text = fs::read_to_string(layout.audit(Algorithm::MostPopular)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "user_id,profile_gap,rec_gap,mc,precision,n_profile,n_recs"
    );
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,") && lines[3].starts_with("3,"));
    assert!(
        lines[2].ends_with(",1"),
        "user 2 got one item: {}",
        lines[2]
    );

    // a broken row is reported with its row number
    fs::write(
        &recs,
        "user_id\titem_id\trank\tscore\n1\t7\t1\t0.9\n1\t8\t1\t0.5\n",
    )
    .unwrap();
    let err = run_stage(Stage::Audit, &config).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("row 3"), "{err}");
}

#[test]
fn report_has_one_block_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), 2);
    run_pipeline(&config).unwrap();
    let layout = Layout::new(&config.output);
    let text = fs::read_to_string(layout.cohort_report()).unwrap();
    let algorithms: std::collections::BTreeSet<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(algorithms.len(), 2);
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    let sig = fs::read_to_string(layout.significance()).unwrap();
    assert_eq!(sig.lines().count(), 1 + 2 * 2);
}

#[test]
fn too_many_cohorts_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), 5);
    let err = run_pipeline(&config).unwrap_err();
    assert!(
        matches!(
            err,
            PipelineError::Analysis {
                stage: Stage::Report,
                ..
            }
        ),
        "{err}"
    );
    assert_eq!(err.exit_code(), 1);
}

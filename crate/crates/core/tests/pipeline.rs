use std::fs;
use std::path::{Path, PathBuf};

use mvcp::pipeline::{run_pipeline, sweep, PipelineConfig, SweepParam, STAGES};
use mvcp::Error;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/synthetic30")
        .join(name)
}

fn small_config() -> PipelineConfig {
    let mut c = PipelineConfig::new(
        data("edges.txt"),
        data("features.txt"),
        Some(data("labels.txt")),
    );
    c.k = 3;
    c.rank = 8;
    c.repeats = 3;
    c.train_fractions = vec![0.5];
    c
}

#[test]
fn smoke_run_lists_all_stages() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.prune_threshold = Some(0.12);
    let out = run_pipeline(&cfg, &dir.path().join("run")).unwrap();
    assert_eq!(
        out.manifest.stages,
        STAGES.iter().map(|s| s.to_string()).collect::<Vec<_>>()
    );
    assert_eq!(out.manifest.num_nodes, 30);
    assert_eq!(out.embeddings.num_nodes(), 30);
    assert_eq!(out.model.rank(), 8);
    assert_eq!(out.manifest.inputs.len(), 3);
    assert!(out.pruning.is_some());
    for f in [
        "knn.txt",
        "embeddings.txt",
        "evaluate.json",
        "weights.csv",
        "pruning.json",
        "manifest.json",
    ] {
        assert!(out.dir.join(f).is_file(), "{f} missing");
    }
    assert!(out.dir.join("model").join("A.txt").is_file());
    assert!(!out.dir.join("FAILED").exists());
    let f1 = out.primary_micro_f1().unwrap();
    assert!((0.0..=1.0).contains(&f1));
}

#[test]
fn manifest_reproduces_fit_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&small_config(), dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let hist: Vec<f64> = serde_json::from_value(v["fit_history"].clone()).unwrap();
    assert_eq!(hist, out.model.fit_history);
    assert_eq!(v["config"]["k"], 3);
    assert_eq!(v["tensor_nnz"], out.manifest.tensor_nnz);
}

#[test]
fn identical_config_gives_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.prune_threshold = Some(0.12);
    let a = run_pipeline(&cfg, &dir.path().join("a")).unwrap();
    let b = run_pipeline(&cfg, &dir.path().join("b")).unwrap();
    for f in [
        "knn.txt",
        "embeddings.txt",
        "evaluate.json",
        "weights.csv",
        "pruning.json",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(a.dir.join(f)).unwrap(),
            fs::read(b.dir.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn missing_labels_aborts_at_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.labels = Some(dir.path().join("nope.txt"));
    let err = run_pipeline(&cfg, &dir.path().join("run")).unwrap_err();
    match &err {
        Error::Stage { stage, source } => {
            assert_eq!(*stage, "evaluate");
            assert!(matches!(**source, Error::Io { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("nope.txt"));
    assert!(dir.path().join("run/FAILED").is_file());
    // Earlier stages left their artifacts.
    assert!(dir.path().join("run/embeddings.txt").is_file());
}

#[test]
fn unreadable_edges_abort_at_first_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.edges = dir.path().join("missing-edges.txt");
    let err = run_pipeline(&cfg, &dir.path().join("run")).unwrap_err();
    assert!(matches!(err, Error::Stage { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn adjacency_only_uses_one_view() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.adjacency_only = true;
    let out = run_pipeline(&cfg, dir.path()).unwrap();
    assert_eq!(out.model.dims()[2], 1);
    assert_eq!(out.manifest.tensor_nnz, 2 * out.manifest.num_edges);
}

#[test]
fn k_sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep(&small_config(), SweepParam::K, &[2, 5, 10], dir.path()).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.value).collect::<Vec<_>>(),
        vec![2, 5, 10]
    );
    assert!(rows.iter().all(|r| r.micro_f1_mean.is_some()));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("k,micro_f1_mean"));
}

#[test]
fn sweep_records_per_value_failure_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    // K = 30 is not below the 30 nodes, so that value alone fails.
    let rows = sweep(&small_config(), SweepParam::K, &[2, 30], dir.path()).unwrap();
    assert!(rows[0].micro_f1_mean.is_some());
    assert!(rows[1].micro_f1_mean.is_none());
    assert!(rows[1].error.is_some());
}

#[test]
fn sweep_rejects_duplicates_and_empty_lists() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sweep(&small_config(), SweepParam::K, &[2, 5, 2], dir.path()).is_err());
    assert!(sweep(&small_config(), SweepParam::Rank, &[], dir.path()).is_err());
}

#[test]
fn rank_sweep_header() {
    let dir = tempfile::tempdir().unwrap();
    sweep(&small_config(), SweepParam::Rank, &[2, 4], dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("d,micro_f1_mean"));
    assert_eq!(csv.lines().count(), 3);
}

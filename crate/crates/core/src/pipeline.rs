//! End-to-end runs: K-NN view → stacked tensor → CP-ALS → embedding →
//! evaluation → interpretation, with every intermediate written to a run
//! directory, plus parameter sweeps over K and d.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::als::{self, AlsConfig, FactorModel, InitKind};
use crate::embedding::{extract_embeddings, EmbeddingSource};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, EvalReport};
use crate::interpret::{pruning_report, write_weights_csv, PruningReport};
use crate::io::{self, EmbeddingMatrix, Graph};
use crate::knn::{build_knn_view, KnnView};
use crate::tensor::{self, Tensor3};

/// Environment variable naming the default parent directory for runs.
pub const RUNS_DIR_ENV: &str = "MVCP_RUNS_DIR";

pub const STAGES: [&str; 6] = [
    "build-knn",
    "stack",
    "decompose",
    "embed",
    "evaluate",
    "interpret",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: Option<PathBuf>,
    /// Node count override for the edge list.
    pub num_nodes: Option<usize>,
    pub k: usize,
    pub rank: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub init: InitKind,
    pub train_fractions: Vec<f64>,
    pub repeats: usize,
    pub inverse_l2: f64,
    pub prune_threshold: Option<f64>,
    pub source: EmbeddingSource,
    /// Factorize the adjacency view alone, without the K-NN slice.
    pub adjacency_only: bool,
}

impl PipelineConfig {
    pub fn new(
        edges: impl Into<PathBuf>,
        features: impl Into<PathBuf>,
        labels: Option<PathBuf>,
    ) -> Self {
        PipelineConfig {
            edges: edges.into(),
            features: features.into(),
            labels,
            num_nodes: None,
            k: 15,
            rank: 128,
            seed: 0,
            tol: 1e-6,
            max_iters: 100,
            init: InitKind::RandomUniform,
            train_fractions: vec![0.1, 0.5, 0.9],
            repeats: 10,
            inverse_l2: 1.0,
            prune_threshold: None,
            source: EmbeddingSource::A,
            adjacency_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.rank == 0 || self.max_iters == 0 || self.repeats == 0 {
            return Err(Error::invalid(
                "k, rank, max_iters and repeats must all be at least 1",
            ));
        }
        if let Some(f) = self
            .train_fractions
            .iter()
            .find(|f| !(**f > 0.0 && **f < 1.0))
        {
            return Err(Error::invalid(format!(
                "train fraction {f} is not in (0, 1)"
            )));
        }
        if let Some(t) = self.prune_threshold {
            if !(t >= 0.0) {
                return Err(Error::invalid("prune threshold must be nonnegative"));
            }
        }
        self.als_config().validate()
    }

    pub fn als_config(&self) -> AlsConfig {
        AlsConfig {
            rank: self.rank,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            init: self.init,
        }
    }

    pub fn eval_config(&self, train_fraction: f64) -> EvalConfig {
        EvalConfig {
            train_fraction,
            repeats: self.repeats,
            seed: self.seed,
            inverse_l2: self.inverse_l2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub inputs: Vec<InputChecksum>,
    pub stages: Vec<String>,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub self_loops_dropped: usize,
    pub knn_edges: usize,
    /// Nodes with fewer than K selected neighbours, as `(node, out_degree)`.
    pub knn_shortfall: Vec<(usize, usize)>,
    pub tensor_nnz: usize,
    pub fit_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub reports: Vec<String>,
}

/// Everything a run produced, also persisted in the run directory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub model: FactorModel,
    pub embeddings: EmbeddingMatrix,
    pub evaluations: Vec<EvalReport>,
    pub pruning: Option<PruningReport>,
}

impl RunOutput {
    /// Mean Micro-F1 at the first configured train fraction.
    pub fn primary_micro_f1(&self) -> Option<f64> {
        self.evaluations.first().map(|r| r.micro_f1_mean)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// `<root>/run-<unix seconds>[-n]`, root from `MVCP_RUNS_DIR` or `runs`.
pub fn default_run_dir() -> PathBuf {
    let root = std::env::var_os(RUNS_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut dir = root.join(format!("run-{secs}"));
    let mut n = 1;
    while dir.exists() {
        dir = root.join(format!("run-{secs}-{n}"));
        n += 1;
    }
    dir
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// Runs every stage, writing outputs under `dir`. On failure a `FAILED`
/// file naming the stage and cause is left next to the partial outputs.
pub fn run_pipeline(config: &PipelineConfig, dir: &Path) -> Result<RunOutput> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let failed = dir.join("FAILED");
    if failed.exists() {
        fs::remove_file(&failed).map_err(|e| Error::io(&failed, e))?;
    }
    let result = run_stages(config, dir);
    if let Err(e) = &result {
        let _ = fs::write(&failed, format!("{e}\n"));
    }
    result
}

fn run_stages(config: &PipelineConfig, dir: &Path) -> Result<RunOutput> {
    let mut stages = Vec::new();
    let mut inputs = Vec::new();

    let (graph, edge_stats, knn) = stage(
        "build-knn",
        (|| {
            let (graph, stats) = io::load_edge_list(&config.edges, config.num_nodes)?;
            inputs.push(InputChecksum {
                path: config.edges.clone(),
                sha256: sha256_file(&config.edges)?,
            });
            let features = io::load_features(&config.features, None)?;
            inputs.push(InputChecksum {
                path: config.features.clone(),
                sha256: sha256_file(&config.features)?,
            });
            let features = pad_features(features, graph.num_nodes())?;
            let knn = build_knn_view(&features, config.k)?;
            io::save_pairs(knn.pairs(), &dir.join("knn.txt"))?;
            Ok((graph, stats, knn))
        })(),
    )?;
    stages.push("build-knn");

    let x = stage("stack", build_tensor(&graph, &knn, config.adjacency_only))?;
    stages.push("stack");

    let model = stage(
        "decompose",
        (|| {
            let cfg = config.als_config();
            let model = als::decompose(&x, &cfg)?;
            als::save_model(&model, Some(&cfg), &dir.join("model"))?;
            Ok(model)
        })(),
    )?;
    stages.push("decompose");

    let embeddings = stage(
        "embed",
        (|| {
            let emb = extract_embeddings(&model, config.source)?;
            io::save_embeddings(&emb, &dir.join("embeddings.txt"))?;
            Ok(emb)
        })(),
    )?;
    stages.push("embed");

    let mut reports = Vec::new();
    let labels = match &config.labels {
        Some(path) => Some(stage(
            "evaluate",
            (|| {
                let labels = io::load_labels(path)?.aligned_to(graph.num_nodes())?;
                inputs.push(InputChecksum {
                    path: path.clone(),
                    sha256: sha256_file(path)?,
                });
                Ok(labels)
            })(),
        )?),
        None => None,
    };
    let evaluations = match &labels {
        Some(labels) => stage(
            "evaluate",
            (|| {
                let evals = config
                    .train_fractions
                    .iter()
                    .map(|&f| evaluate(&embeddings, labels, &config.eval_config(f)))
                    .collect::<Result<Vec<_>>>()?;
                write_json(&evals, &dir.join("evaluate.json"))?;
                Ok(evals)
            })(),
        )?,
        None => Vec::new(),
    };
    if labels.is_some() {
        reports.push("evaluate.json".to_string());
    }
    stages.push("evaluate");

    let pruning = stage(
        "interpret",
        (|| {
            write_weights_csv(&model, config.prune_threshold, &dir.join("weights.csv"))?;
            let mut pruning = None;
            if let (Some(t), Some(labels)) = (config.prune_threshold, &labels) {
                if config.source != EmbeddingSource::A {
                    return Err(Error::invalid(
                        "pruning evaluation requires embeddings from factor A",
                    ));
                }
                let fraction = config.train_fractions.first().copied().unwrap_or(0.5);
                let rep = pruning_report(
                    &model,
                    &embeddings,
                    labels,
                    t,
                    &config.eval_config(fraction),
                )?;
                write_json(&rep, &dir.join("pruning.json"))?;
                pruning = Some(rep);
            }
            Ok(pruning)
        })(),
    )?;
    reports.push("weights.csv".to_string());
    if pruning.is_some() {
        reports.push("pruning.json".to_string());
    }
    stages.push("interpret");

    let manifest = RunManifest {
        config: config.clone(),
        inputs,
        stages: stages.iter().map(|s| s.to_string()).collect(),
        num_nodes: graph.num_nodes(),
        num_edges: graph.num_edges(),
        self_loops_dropped: edge_stats.self_loops_dropped,
        knn_edges: knn.num_edges(),
        knn_shortfall: knn.shortfall(),
        tensor_nnz: x.nnz(),
        fit_history: model.fit_history.clone(),
        converged: model.converged,
        iterations: model.iterations(),
        reports,
    };
    write_json(&manifest, &dir.join("manifest.json"))?;
    Ok(RunOutput {
        dir: dir.to_path_buf(),
        manifest,
        model,
        embeddings,
        evaluations,
        pruning,
    })
}

/// Stacks the two views, or the adjacency alone.
pub fn build_tensor(graph: &Graph, knn: &KnnView, adjacency_only: bool) -> Result<Tensor3> {
    if adjacency_only {
        tensor::adjacency_only(graph)
    } else {
        tensor::stack_views(graph, knn)
    }
}

/// Features may omit trailing featureless nodes; extend them to the graph.
fn pad_features(features: io::FeatureMatrix, num_nodes: usize) -> Result<io::FeatureMatrix> {
    if features.num_nodes() == num_nodes {
        return Ok(features);
    }
    if features.num_nodes() > num_nodes {
        return Err(Error::shape(format!(
            "features cover {} nodes but the graph has {num_nodes}",
            features.num_nodes()
        )));
    }
    io::FeatureMatrix::from_triples(num_nodes, features.num_features(), features.triples())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    K,
    Rank,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" | "K" => Ok(SweepParam::K),
            "d" | "rank" => Ok(SweepParam::Rank),
            other => Err(Error::invalid(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub micro_f1_mean: Option<f64>,
    pub error: Option<String>,
}

/// Runs the pipeline once per value, everything else fixed, each in
/// `<dir>/<param>-<value>`. Failures are recorded and the sweep continues.
/// Writes `<dir>/sweep.csv`.
pub fn sweep(
    config: &PipelineConfig,
    param: SweepParam,
    values: &[usize],
    dir: &Path,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let unique: BTreeSet<_> = values.iter().collect();
    if unique.len() != values.len() {
        return Err(Error::invalid("sweep values contain duplicates"));
    }
    if config.labels.is_none() {
        return Err(Error::invalid(
            "sweep needs a labels file to score each run",
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = match param {
        SweepParam::K => "k",
        SweepParam::Rank => "d",
    };
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = config.clone();
        match param {
            SweepParam::K => cfg.k = v,
            SweepParam::Rank => cfg.rank = v,
        }
        let row = match run_pipeline(&cfg, &dir.join(format!("{name}-{v}"))) {
            Ok(out) => SweepRow {
                value: v,
                micro_f1_mean: out.primary_micro_f1(),
                error: None,
            },
            Err(e) => {
                log::warn!("sweep {name} = {v} failed: {e}");
                SweepRow {
                    value: v,
                    micro_f1_mean: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    let mut csv = format!("{name},micro_f1_mean,error\n");
    for r in &rows {
        let score = r.micro_f1_mean.map_or(String::new(), |s| s.to_string());
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        csv.push_str(&format!("{},{score},{err}\n", r.value));
    }
    let path = dir.join("sweep.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Powers of two `2^lo ..= 2^hi`.
pub fn log2_grid(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|e| 1usize << e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_matches_log2_range() {
        assert_eq!(log2_grid(3, 9), vec![8, 16, 32, 64, 128, 256, 512]);
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::new("e", "f", None);
        assert!(c.validate().is_ok());
        c.train_fractions = vec![0.0];
        assert!(c.validate().is_err());
        c.train_fractions = vec![0.5];
        c.k = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sweep_param_parsing() {
        assert_eq!("k".parse::<SweepParam>().unwrap(), SweepParam::K);
        assert_eq!("d".parse::<SweepParam>().unwrap(), SweepParam::Rank);
        assert!("x".parse::<SweepParam>().is_err());
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use mvcp::als::{self, AlsConfig, InitKind};
use mvcp::embedding::{extract_embeddings, prune_dimensions, EmbeddingSource};
use mvcp::error::{Error, Result};
use mvcp::eval::{evaluate, EvalConfig};
use mvcp::interpret::{pruning_report, write_weights_csv};
use mvcp::io;
use mvcp::knn::{build_knn_view, KnnView};
use mvcp::pipeline::{self, PipelineConfig, SweepParam};
use mvcp::synthetic::{planted_partition, SyntheticSpec};
use mvcp::tensor::{self, reconstruct_view};

#[derive(Parser)]
#[command(name = "mvcp", version, about = "Multi-view CP node embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the binary K-NN view from node features.
    BuildKnn {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stack adjacency and K-NN views and factorize with CP-ALS.
    Decompose {
        #[arg(long)]
        adj: PathBuf,
        /// Directed K-NN edge list; omit to factorize the adjacency alone.
        #[arg(long)]
        knn: Option<PathBuf>,
        #[arg(long)]
        num_nodes: Option<usize>,
        #[arg(long, default_value_t = 128)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value = "uniform", value_parser = parse_init)]
        init: InitKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write node embeddings from a saved model.
    Embed {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "A")]
        source: EmbeddingSource,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        prune_threshold: Option<f64>,
    },
    /// One-vs-rest logistic regression over repeated stratified splits.
    Evaluate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Inverse L2 strength of the classifier.
        #[arg(long, default_value_t = 1.0)]
        inverse_l2: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-view weight table; with --prune-eval, the before/after pruning report.
    Interpret {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, requires_all = ["labels", "report"])]
        prune_eval: bool,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        inverse_l2: f64,
    },
    /// Dense reconstruction of one view as CSV.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        view: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline into one run directory.
    Run {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Defaults to $MVCP_RUNS_DIR/run-<timestamp>.
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Sensitivity sweep over K or d.
    Sweep {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, value_parser = parse_sweep_param)]
        param: SweepParam,
        /// Comma-separated values, e.g. `2,5,10`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert LINQS `.content`/`.cites` files into edge, feature and label files.
    ImportLinqs {
        #[arg(long, required = true, num_args = 1..)]
        content: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        cites: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a planted-partition dataset (edges, features, labels).
    Synth {
        #[arg(long, default_value_t = 30)]
        nodes: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 24)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    num_nodes: Option<usize>,
    #[arg(long, default_value_t = 15)]
    k: usize,
    #[arg(long, default_value_t = 128)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    train_fractions: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 1.0)]
    inverse_l2: f64,
    #[arg(long)]
    prune_threshold: Option<f64>,
    #[arg(long, default_value = "A")]
    source: EmbeddingSource,
    #[arg(long)]
    adjacency_only: bool,
}

impl PipelineArgs {
    fn into_config(self) -> PipelineConfig {
        PipelineConfig {
            edges: self.edges,
            features: self.features,
            labels: self.labels,
            num_nodes: self.num_nodes,
            k: self.k,
            rank: self.rank,
            seed: self.seed,
            tol: self.tol,
            max_iters: self.max_iters,
            init: InitKind::RandomUniform,
            train_fractions: self.train_fractions,
            repeats: self.repeats,
            inverse_l2: self.inverse_l2,
            prune_threshold: self.prune_threshold,
            source: self.source,
            adjacency_only: self.adjacency_only,
        }
    }
}

fn parse_init(s: &str) -> std::result::Result<InitKind, String> {
    match s {
        "uniform" | "random-uniform" => Ok(InitKind::RandomUniform),
        "normal" | "random-normal" => Ok(InitKind::RandomNormal),
        other => Err(format!("unknown init `{other}` (uniform | normal)")),
    }
}

fn parse_sweep_param(s: &str) -> std::result::Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn write_csv_matrix(m: &mvcp::Mat, path: &Path) -> Result<()> {
    let mut s = String::with_capacity(m.rows() * m.cols() * 8);
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn write_json<T: serde::Serialize>(v: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Invalid(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildKnn { features, k, out } => {
            let f = io::load_features(&features, None)?;
            let z = build_knn_view(&f, k)?;
            io::save_pairs(z.pairs(), &out)?;
            let short = z.shortfall();
            info!(
                "{} directed K-NN edges; {} nodes below K",
                z.num_edges(),
                short.len()
            );
            println!("edges\t{}\nshortfall_nodes\t{}", z.num_edges(), short.len());
        }
        Command::Decompose {
            adj,
            knn,
            num_nodes,
            rank,
            seed,
            tol,
            max_iters,
            init,
            out,
        } => {
            let z_pairs = match &knn {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|e| Error::Io {
                        path: p.clone(),
                        source: e,
                    })?;
                    let mut pairs = Vec::new();
                    for (ln, line) in text.lines().enumerate() {
                        let t = line.trim();
                        if t.is_empty() || t.starts_with('#') {
                            continue;
                        }
                        let mut it = t.split_whitespace().map(str::parse::<usize>);
                        match (it.next(), it.next(), it.next()) {
                            (Some(Ok(u)), Some(Ok(v)), None) => pairs.push((u, v)),
                            _ => {
                                return Err(Error::Parse {
                                    path: p.clone(),
                                    line: ln + 1,
                                    msg: "expected `u v`".into(),
                                })
                            }
                        }
                    }
                    Some(pairs)
                }
                None => None,
            };
            let z_max = z_pairs
                .iter()
                .flatten()
                .map(|&(u, v)| u.max(v) + 1)
                .max()
                .unwrap_or(0);
            let n = num_nodes.map(|n| n.max(z_max));
            let (graph, _) = io::load_edge_list(&adj, n)?;
            let graph = if graph.num_nodes() < z_max {
                io::load_edge_list(&adj, Some(z_max))?.0
            } else {
                graph
            };
            let x = match &z_pairs {
                Some(pairs) => {
                    tensor::stack_views(&graph, &KnnView::from_pairs(graph.num_nodes(), pairs)?)?
                }
                None => tensor::adjacency_only(&graph)?,
            };
            let cfg = AlsConfig {
                rank,
                max_iters,
                tol,
                seed,
                init,
            };
            let model = als::decompose(&x, &cfg)?;
            als::save_model(&model, Some(&cfg), &out)?;
            println!(
                "fit\t{}\niterations\t{}\nconverged\t{}",
                model.final_fit().unwrap_or(f64::NAN),
                model.iterations(),
                model.converged
            );
        }
        Command::Embed {
            model,
            source,
            out,
            prune_threshold,
        } => {
            let m = als::load_model(&model)?;
            let emb = extract_embeddings(&m, source)?;
            let emb = match prune_threshold {
                Some(t) => {
                    if source != EmbeddingSource::A {
                        return Err(Error::Invalid("pruning requires --source A".into()));
                    }
                    let (p, removed) = prune_dimensions(&emb, &m, t)?;
                    println!("removed\t{removed:?}");
                    p
                }
                None => emb,
            };
            io::save_embeddings(&emb, &out)?;
        }
        Command::Evaluate {
            embeddings,
            labels,
            train_fraction,
            repeats,
            seed,
            inverse_l2,
            out,
        } => {
            let emb = io::load_embeddings(&embeddings)?;
            let labels = io::load_labels(&labels)?.aligned_to(emb.num_nodes())?;
            let rep = evaluate(
                &emb,
                &labels,
                &EvalConfig {
                    train_fraction,
                    repeats,
                    seed,
                    inverse_l2,
                },
            )?;
            write_json(&rep, &out)?;
            println!(
                "micro_f1\t{:.4} ± {:.4}",
                rep.micro_f1_mean, rep.micro_f1_std
            );
            println!(
                "macro_f1\t{:.4} ± {:.4}",
                rep.macro_f1_mean, rep.macro_f1_std
            );
        }
        Command::Interpret {
            model,
            threshold,
            out,
            prune_eval,
            labels,
            report,
            train_fraction,
            repeats,
            seed,
            inverse_l2,
        } => {
            let m = als::load_model(&model)?;
            write_weights_csv(&m, threshold, &out)?;
            if prune_eval {
                let t = threshold
                    .ok_or_else(|| Error::Invalid("--prune-eval needs --threshold".into()))?;
                let (labels, report) = labels
                    .zip(report)
                    .expect("clap enforces --labels and --report");
                let emb = extract_embeddings(&m, EmbeddingSource::A)?;
                let labels = io::load_labels(&labels)?.aligned_to(emb.num_nodes())?;
                let cfg = EvalConfig {
                    train_fraction,
                    repeats,
                    seed,
                    inverse_l2,
                };
                let rep = pruning_report(&m, &emb, &labels, t, &cfg)?;
                write_json(&rep, &report)?;
                println!(
                    "removed\t{}\nmicro_f1_before\t{:.4}\nmicro_f1_after\t{:.4}",
                    rep.removed.len(),
                    rep.before.micro_f1_mean,
                    rep.after.micro_f1_mean
                );
            }
        }
        Command::Reconstruct { model, view, out } => {
            let m = als::load_model(&model)?;
            write_csv_matrix(&reconstruct_view(&m, view)?, &out)?;
        }
        Command::Run {
            pipeline: args,
            run_dir,
        } => {
            let cfg = args.into_config();
            let dir = run_dir.unwrap_or_else(pipeline::default_run_dir);
            let out = pipeline::run_pipeline(&cfg, &dir)?;
            println!("run_dir\t{}", out.dir.display());
            println!("fit\t{}", out.model.final_fit().unwrap_or(f64::NAN));
            for r in &out.evaluations {
                println!("micro_f1@{}\t{:.4}", r.train_fraction, r.micro_f1_mean);
            }
        }
        Command::Sweep {
            pipeline: args,
            param,
            values,
            out,
        } => {
            let rows = pipeline::sweep(&args.into_config(), param, &values, &out)?;
            for r in rows {
                match (r.micro_f1_mean, r.error) {
                    (Some(s), _) => println!("{}\t{s:.4}", r.value),
                    (None, Some(e)) => println!("{}\tfailed: {e}", r.value),
                    _ => println!("{}\t-", r.value),
                }
            }
        }
        Command::ImportLinqs {
            content,
            cites,
            out,
        } => {
            let ds = io::load_linqs(&content, &cites)?;
            fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            io::save_pairs(ds.graph.edges().iter().copied(), &out.join("edges.txt"))?;
            io::save_features(&ds.features, &out.join("features.txt"))?;
            io::save_labels(&ds.labels, &out.join("labels.txt"))?;
            let ids = ds.node_ids.join("\n") + "\n";
            fs::write(out.join("ids.txt"), ids).map_err(|e| Error::Io {
                path: out.join("ids.txt"),
                source: e,
            })?;
            let classes = ds.class_names.join("\n") + "\n";
            fs::write(out.join("classes.txt"), classes).map_err(|e| Error::Io {
                path: out.join("classes.txt"),
                source: e,
            })?;
            println!(
                "nodes\t{}\nedges\t{}\nfeatures\t{}\nclasses\t{}\ndangling_citations\t{}",
                ds.graph.num_nodes(),
                ds.graph.num_edges(),
                ds.features.num_features(),
                ds.class_names.len(),
                ds.dangling_citations
            );
        }
        Command::Synth {
            nodes,
            classes,
            features,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                num_nodes: nodes,
                num_classes: classes,
                num_features: features,
                seed,
                ..Default::default()
            };
            let ds = planted_partition(&spec)?;
            fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            io::save_pairs(ds.graph.edges().iter().copied(), &out.join("edges.txt"))?;
            io::save_features(&ds.features, &out.join("features.txt"))?;
            io::save_labels(&ds.labels, &out.join("labels.txt"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Multi-view node embeddings by CP decomposition.
//!
//! The pipeline builds a binary K-nearest-neighbour view from node features
//! (cosine similarity), stacks it with the adjacency matrix into a
//! `V × V × 2` tensor, factorizes that tensor with CP-ALS and uses the node
//! factor as an embedding. Downstream helpers evaluate the embedding with a
//! one-vs-rest logistic regression, reconstruct individual views and report
//! per-view component weights.

pub mod als;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod io;
pub mod knn;
pub mod matrix;
pub mod pipeline;
pub mod synthetic;
pub mod tensor;

pub use als::{decompose, AlsConfig, FactorModel, InitKind};
pub use embedding::{extract_embeddings, prune_dimensions, EmbeddingSource};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalConfig, EvalReport, OvrClassifier, PredictMode};
pub use io::{EmbeddingMatrix, FeatureMatrix, Graph, LabelSet};
pub use knn::{build_knn_view, KnnView, SimilarityMatrix};
pub use matrix::Mat;
pub use pipeline::{run_pipeline, sweep, PipelineConfig};
pub use tensor::Tensor3;

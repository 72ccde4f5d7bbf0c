//! Node embeddings from a fitted factor model, and weight-based pruning of
//! embedding dimensions.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::als::FactorModel;
use crate::error::{Error, Result};
use crate::interpret::view_weights;
use crate::io::EmbeddingMatrix;
use crate::matrix::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EmbeddingSource {
    /// Mode-1 node factor.
    #[default]
    A,
    /// Mode-2 node factor.
    B,
    /// `[A | B]`, dimension `2d`.
    AConcatB,
}

impl FromStr for EmbeddingSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(EmbeddingSource::A),
            "B" | "b" => Ok(EmbeddingSource::B),
            "A-concat-B" | "AB" | "ab" | "concat" => Ok(EmbeddingSource::AConcatB),
            other => Err(Error::invalid(format!(
                "unknown embedding source `{other}`"
            ))),
        }
    }
}

fn scaled(factor: &Mat, scales: &[f64]) -> Mat {
    let mut m = factor.clone();
    for (r, &s) in scales.iter().enumerate() {
        m.scale_column(r, s);
    }
    m
}

/// Rows of the normalized node factor with the component scales multiplied
/// back in.
pub fn extract_embeddings(model: &FactorModel, source: EmbeddingSource) -> Result<EmbeddingMatrix> {
    let m = model.normalized();
    let data = match source {
        EmbeddingSource::A => scaled(m.a(), m.scales()),
        EmbeddingSource::B => scaled(m.b(), m.scales()),
        EmbeddingSource::AConcatB => {
            let (a, b) = (scaled(m.a(), m.scales()), scaled(m.b(), m.scales()));
            if a.rows() != b.rows() {
                return Err(Error::shape("A and B have different row counts"));
            }
            let d = m.rank();
            Mat::from_fn(a.rows(), 2 * d, |i, j| {
                if j < d {
                    a[(i, j)]
                } else {
                    b[(i, j - d)]
                }
            })
        }
    };
    EmbeddingMatrix::new(data)
}

/// Weight of each dimension: its largest per-view weight, relative to the
/// largest weight in the whole table (so the strongest dimension has 1).
pub fn dimension_weights(model: &FactorModel) -> Vec<f64> {
    let table = view_weights(model);
    let per_dim: Vec<f64> = (0..table.num_dims())
        .map(|r| {
            (0..table.num_views())
                .map(|l| table.get(l, r))
                .fold(0.0, f64::max)
        })
        .collect();
    let top = per_dim.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return vec![0.0; per_dim.len()];
    }
    per_dim.into_iter().map(|w| w / top).collect()
}

/// Dimensions whose weight falls strictly below `threshold`.
pub fn pruned_dimensions(model: &FactorModel, threshold: f64) -> Vec<usize> {
    dimension_weights(model)
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w < threshold)
        .map(|(r, _)| r)
        .collect()
}

/// Removes the low-weight columns of an embedding taken from factor A.
/// Surviving columns keep their order.
pub fn prune_dimensions(
    emb: &EmbeddingMatrix,
    model: &FactorModel,
    threshold: f64,
) -> Result<(EmbeddingMatrix, Vec<usize>)> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid("prune threshold must be nonnegative"));
    }
    if emb.dim() != model.rank() {
        return Err(Error::shape(format!(
            "embedding has {} dimensions, model rank is {}",
            emb.dim(),
            model.rank()
        )));
    }
    let removed = pruned_dimensions(model, threshold);
    let keep: Vec<usize> = (0..model.rank()).filter(|r| !removed.contains(r)).collect();
    if keep.is_empty() {
        return Err(Error::invalid(format!(
            "threshold {threshold} removes all {} dimensions",
            model.rank()
        )));
    }
    Ok((
        EmbeddingMatrix::new(emb.matrix().select_columns(&keep))?,
        removed,
    ))
}

//! Per-view component weights, pruning reports and correlation of pruned
//! dimensions with the surviving ones.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::als::FactorModel;
use crate::embedding::{dimension_weights, prune_dimensions};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, EvalReport};
use crate::io::{EmbeddingMatrix, LabelSet};
use crate::matrix::Mat;

/// `|scale_r · C(l, r)|` of the model with unit-norm A and B columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewWeightTable {
    weights: Mat,
    pub threshold: Option<f64>,
}

impl ViewWeightTable {
    pub fn num_views(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_dims(&self) -> usize {
        self.weights.cols()
    }

    pub fn get(&self, view: usize, dim: usize) -> f64 {
        self.weights[(view, dim)]
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    /// One row per dimension: raw weight per view, the relative dimension
    /// weight used for pruning and, with a threshold, whether it is pruned.
    pub fn to_csv(&self, relative: &[f64]) -> String {
        let mut s = String::from("dimension");
        for l in 0..self.num_views() {
            let _ = write!(s, ",view_{l}");
        }
        s.push_str(",relative_weight");
        if self.threshold.is_some() {
            s.push_str(",pruned");
        }
        s.push('\n');
        for r in 0..self.num_dims() {
            let _ = write!(s, "{r}");
            for l in 0..self.num_views() {
                let _ = write!(s, ",{}", self.get(l, r));
            }
            let _ = write!(s, ",{}", relative[r]);
            if let Some(t) = self.threshold {
                let _ = write!(s, ",{}", u8::from(relative[r] < t));
            }
            s.push('\n');
        }
        s
    }
}

pub fn view_weights(model: &FactorModel) -> ViewWeightTable {
    let m = model.normalized();
    let weights = Mat::from_fn(m.c().rows(), m.rank(), |l, r| {
        (m.scales()[r] * m.c()[(l, r)]).abs()
    });
    ViewWeightTable {
        weights,
        threshold: None,
    }
}

/// Writes the weight table (with optional pruning threshold) as CSV.
pub fn write_weights_csv(model: &FactorModel, threshold: Option<f64>, path: &Path) -> Result<()> {
    let mut table = view_weights(model);
    table.threshold = threshold;
    let csv = table.to_csv(&dimension_weights(model));
    fs::write(path, csv).map_err(|e| Error::io(path, e))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCorrelation {
    pub dimension: usize,
    /// Largest |Pearson r| against any surviving dimension.
    pub max_abs_r: f64,
    pub most_correlated_with: usize,
}

/// For each removed column of `emb`, its strongest absolute Pearson
/// correlation with a column that was kept.
pub fn dimension_correlation(
    emb: &EmbeddingMatrix,
    removed: &[usize],
) -> Result<Vec<DimensionCorrelation>> {
    if emb.num_nodes() < 3 {
        return Err(Error::invalid(
            "correlation analysis needs at least 3 nodes",
        ));
    }
    if let Some(&r) = removed.iter().find(|&&r| r >= emb.dim()) {
        return Err(Error::invalid(format!("dimension {r} out of range")));
    }
    let kept: Vec<usize> = (0..emb.dim()).filter(|r| !removed.contains(r)).collect();
    if kept.len() < 2 {
        return Err(Error::invalid(
            "correlation analysis needs at least 2 surviving dimensions",
        ));
    }
    let m = emb.matrix();
    let kept_cols: Vec<Vec<f64>> = kept.iter().map(|&k| m.column(k)).collect();
    Ok(removed
        .iter()
        .map(|&r| {
            let col = m.column(r);
            let (best, val) = kept
                .iter()
                .zip(&kept_cols)
                .map(|(&k, kc)| (k, pearson(&col, kc).abs()))
                .fold((kept[0], -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            DimensionCorrelation {
                dimension: r,
                max_abs_r: val.max(0.0),
                most_correlated_with: best,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruningReport {
    pub threshold: f64,
    pub removed: Vec<usize>,
    pub kept: usize,
    pub before: EvalReport,
    pub after: EvalReport,
    /// `after − before` mean Micro-F1.
    pub micro_f1_delta: f64,
    /// Empty when nothing was removed or fewer than two dimensions survive.
    pub correlations: Vec<DimensionCorrelation>,
}

/// Evaluates the embedding before and after pruning under the same
/// evaluation configuration.
pub fn pruning_report(
    model: &FactorModel,
    emb: &EmbeddingMatrix,
    labels: &LabelSet,
    threshold: f64,
    eval: &EvalConfig,
) -> Result<PruningReport> {
    let (pruned, removed) = prune_dimensions(emb, model, threshold)?;
    let before = evaluate(emb, labels, eval)?;
    let after = evaluate(&pruned, labels, eval)?;
    let correlations = if !removed.is_empty() && pruned.dim() >= 2 && emb.num_nodes() >= 3 {
        dimension_correlation(emb, &removed)?
    } else {
        Vec::new()
    };
    Ok(PruningReport {
        threshold,
        kept: pruned.dim(),
        micro_f1_delta: after.micro_f1_mean - before.micro_f1_mean,
        removed,
        before,
        after,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{extract_embeddings, EmbeddingSource};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_c_with_unit_scales() {
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let m = FactorModel::from_factors(a.clone(), a, c, vec![1.0, 1.0]).unwrap();
        let t = view_weights(&m);
        assert_eq!(t.weights().as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn scale_absorption_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Mat::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let b = Mat::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let c = Mat::from_fn(2, 3, |_, _| rng.gen_range(-1.0..1.0));
        let m1 = FactorModel::from_factors(a.clone(), b.clone(), c.clone(), vec![1.0, 2.0, 3.0])
            .unwrap();
        let mut a2 = a;
        a2.scale_column(1, 2.0);
        let m2 = FactorModel::from_factors(a2, b, c, vec![1.0, 1.0, 3.0]).unwrap();
        let (t1, t2) = (view_weights(&m1), view_weights(&m2));
        assert!(t1.weights().max_abs_diff(t2.weights()) < 1e-12);
    }

    #[test]
    fn correlation_rules() {
        let e = EmbeddingMatrix::new(
            Mat::from_rows(&[
                vec![1.0, 5.0, 1.0, 2.0],
                vec![2.0, 5.0, 0.0, 4.0],
                vec![3.0, 5.0, 1.0, 6.0],
                vec![4.0, 5.0, 3.0, 8.0],
            ])
            .unwrap(),
        )
        .unwrap();
        // column 3 is 2 × column 0
        let c = dimension_correlation(&e, &[3]).unwrap();
        assert!((c[0].max_abs_r - 1.0).abs() < 1e-12);
        assert_eq!(c[0].most_correlated_with, 0);
        // constant column correlates with nothing
        let c = dimension_correlation(&e, &[1]).unwrap();
        assert_eq!(c[0].max_abs_r, 0.0);
        assert!(dimension_correlation(&e, &[0, 1, 2]).is_err());
    }

    #[test]
    fn independent_noise_is_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 20_000;
        let m = Mat::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
        let e = EmbeddingMatrix::new(m.clone()).unwrap();
        let c = dimension_correlation(&e, &[2]).unwrap();
        // reference: textbook two-pass Pearson on the same columns
        let reference = |x: &[f64], y: &[f64]| {
            let k = x.len() as f64;
            let mx = x.iter().sum::<f64>() / k;
            let my = y.iter().sum::<f64>() / k;
            let cov: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - mx) * (b - my))
                .sum::<f64>()
                / k;
            let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / k).sqrt();
            let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / k).sqrt();
            (cov / (sx * sy)).abs()
        };
        let want = reference(&m.column(2), &m.column(0)).max(reference(&m.column(2), &m.column(1)));
        assert!((c[0].max_abs_r - want).abs() < 1e-12);
        // ~ 1/sqrt(n) scale
        assert!(c[0].max_abs_r < 0.05);
    }

    #[test]
    fn pruning_report_threshold_zero_and_too_high() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 30;
        let m = FactorModel::from_factors(
            Mat::from_fn(n, 3, |_, _| rng.gen_range(0.0..1.0)),
            Mat::from_fn(n, 3, |_, _| rng.gen_range(0.0..1.0)),
            Mat::from_fn(2, 3, |_, _| rng.gen_range(0.1..1.0)),
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let e = extract_embeddings(&m, EmbeddingSource::A).unwrap();
        let labels = LabelSet::new(2, (0..n).map(|i| vec![i % 2]).collect()).unwrap();
        let cfg = EvalConfig {
            repeats: 3,
            ..Default::default()
        };
        let rep = pruning_report(&m, &e, &labels, 0.0, &cfg).unwrap();
        assert!(rep.removed.is_empty());
        assert_eq!(rep.before, rep.after);
        assert_eq!(rep.micro_f1_delta, 0.0);
        // standalone evaluation reproduces the "before" score
        assert_eq!(evaluate(&e, &labels, &cfg).unwrap(), rep.before);
        assert!(pruning_report(&m, &e, &labels, 1.01, &cfg).is_err());
    }

    #[test]
    fn csv_layout() {
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = Mat::from_rows(&[vec![0.5, 0.05], vec![0.4, 0.01]]).unwrap();
        let m = FactorModel::from_factors(a.clone(), a, c, vec![1.0, 1.0]).unwrap();
        let mut t = view_weights(&m);
        t.threshold = Some(0.12);
        let csv = t.to_csv(&dimension_weights(&m));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "dimension,view_0,view_1,relative_weight,pruned");
        assert!(lines[1].starts_with("0,0.5,0.4,1,0"));
        assert!(lines[2].ends_with(",1"));
    }
}

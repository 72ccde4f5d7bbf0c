//! Node classification protocol: one-vs-rest L2-regularized logistic
//! regression over repeated stratified train/test splits, scored with
//! Micro- and Macro-F1.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{EmbeddingMatrix, LabelSet};

const GRAD_TOL: f64 = 1e-6;
const MAX_NEWTON_ITERS: usize = 1000;

/// How a binary model was obtained for one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinaryKind {
    Fitted,
    /// No positive training example: always scores 0.
    AlwaysNegative,
    /// Every training example positive: always scores 1.
    AlwaysPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kind: BinaryKind,
    pub iterations: usize,
}

impl BinaryModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        match self.kind {
            BinaryKind::AlwaysNegative => 0.0,
            BinaryKind::AlwaysPositive => 1.0,
            BinaryKind::Fitted => sigmoid(dot(&self.weights, x) + self.bias),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrClassifier {
    pub num_labels: usize,
    /// Inverse regularization strength: the objective is
    /// `½‖w‖² + c · Σ logloss`. The bias is not penalized.
    pub inverse_l2: f64,
    pub models: Vec<BinaryModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictMode {
    /// Highest-scoring label; ties go to the lowest id.
    SingleLabel,
    /// The `k` highest-scoring labels, `k` = number of true labels.
    MultiLabelTopK,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-m))`, stable for large |m|.
#[inline]
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// Regularized binary logistic objective with labels `y ∈ {0, 1}`.
pub fn logistic_objective(rows: &[&[f64]], y: &[bool], w: &[f64], b: f64, c: f64) -> f64 {
    let reg = 0.5 * dot(w, w);
    let data: f64 = rows
        .iter()
        .zip(y)
        .map(|(x, &yi)| {
            let z = dot(w, x) + b;
            log1p_exp_neg(if yi { z } else { -z })
        })
        .sum();
    reg + c * data
}

/// Gradient of [`logistic_objective`] with respect to `(w, b)`.
pub fn logistic_gradient(rows: &[&[f64]], y: &[bool], w: &[f64], b: f64, c: f64) -> Vec<f64> {
    let d = w.len();
    let mut g = w.to_vec();
    g.push(0.0);
    for (x, &yi) in rows.iter().zip(y) {
        let p = sigmoid(dot(w, x) + b);
        let r = c * (p - if yi { 1.0 } else { 0.0 });
        for k in 0..d {
            g[k] += r * x[k];
        }
        g[d] += r;
    }
    g
}

/// Damped Newton's method on the strictly convex logistic objective.
pub fn fit_binary(rows: &[&[f64]], y: &[bool], c: f64) -> Result<BinaryModel> {
    let d = rows.first().map_or(0, |r| r.len());
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Ok(BinaryModel {
            weights: vec![0.0; d],
            bias: 0.0,
            kind: if positives == 0 {
                BinaryKind::AlwaysNegative
            } else {
                BinaryKind::AlwaysPositive
            },
            iterations: 0,
        });
    }
    let mut w = vec![0.0; d];
    // start the bias at the prior log-odds
    let prior = positives as f64 / y.len() as f64;
    let mut b = (prior / (1.0 - prior)).ln();
    let mut f = logistic_objective(rows, y, &w, b, c);
    let mut iterations = 0;
    for it in 0..MAX_NEWTON_ITERS {
        iterations = it;
        let g = logistic_gradient(rows, y, &w, b, c);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= GRAD_TOL {
            break;
        }
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for k in 0..d {
            h[(k, k)] = 1.0;
        }
        let mut xa = vec![0.0; d + 1];
        xa[d] = 1.0;
        for x in rows {
            let p = sigmoid(dot(&w, x) + b);
            let s = c * p * (1.0 - p);
            if s == 0.0 {
                continue;
            }
            xa[..d].copy_from_slice(x);
            for a in 0..=d {
                let sa = s * xa[a];
                if sa == 0.0 {
                    continue;
                }
                for bb in a..=d {
                    h[(a, bb)] += sa * xa[bb];
                }
            }
        }
        for a in 0..=d {
            for bb in 0..a {
                h[(a, bb)] = h[(bb, a)];
            }
        }
        // the bias row can be nearly singular when predictions saturate
        h[(d, d)] += 1e-12;
        let gv = DVector::from_vec(g.clone());
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&gv),
            None => h
                .lu()
                .solve(&gv)
                .ok_or_else(|| Error::Numerical("singular logistic Hessian".into()))?,
        };
        let mut t = 1.0;
        let slope: f64 = g.iter().zip(step.iter()).map(|(a, s)| a * s).sum();
        let mut accepted = false;
        for _ in 0..60 {
            let nw: Vec<f64> = (0..d).map(|k| w[k] - t * step[k]).collect();
            let nb = b - t * step[d];
            let nf = logistic_objective(rows, y, &nw, nb, c);
            if nf <= f - 1e-4 * t * slope {
                w = nw;
                b = nb;
                f = nf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no further decrease is representable
            break;
        }
    }
    if !(w.iter().all(|v| v.is_finite()) && b.is_finite()) {
        return Err(Error::Numerical("logistic regression diverged".into()));
    }
    Ok(BinaryModel {
        weights: w,
        bias: b,
        kind: BinaryKind::Fitted,
        iterations,
    })
}

/// Fits one binary model per label on the given training nodes.
pub fn train_ovr(
    emb: &EmbeddingMatrix,
    labels: &LabelSet,
    train_idx: &[usize],
    inverse_l2: f64,
) -> Result<OvrClassifier> {
    if train_idx.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if !(inverse_l2 > 0.0) {
        return Err(Error::invalid(
            "inverse regularization strength must be positive",
        ));
    }
    for &n in train_idx {
        if n >= emb.num_nodes() || n >= labels.num_nodes() {
            return Err(Error::shape(format!("training node {n} out of range")));
        }
        if labels.labels(n).is_empty() {
            return Err(Error::invalid(format!("training node {n} has no label")));
        }
    }
    let rows: Vec<&[f64]> = train_idx.iter().map(|&n| emb.row(n)).collect();
    let models = (0..labels.num_labels())
        .into_par_iter()
        .map(|lab| {
            let y: Vec<bool> = train_idx
                .iter()
                .map(|&n| labels.labels(n).binary_search(&lab).is_ok())
                .collect();
            fit_binary(&rows, &y, inverse_l2)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrClassifier {
        num_labels: labels.num_labels(),
        inverse_l2,
        models,
    })
}

impl OvrClassifier {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.models.iter().map(|m| m.probability(x)).collect()
    }

    pub fn labels_without_positives(&self) -> Vec<usize> {
        self.models
            .iter()
            .enumerate()
            .filter(|(_, m)| m.kind == BinaryKind::AlwaysNegative)
            .map(|(l, _)| l)
            .collect()
    }
}

/// Label ids ranked by descending score, lowest id first on ties.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Predicted label set for already-computed scores. `true_count` is only
/// consulted in top-k mode.
pub fn predict_from_scores(scores: &[f64], mode: PredictMode, true_count: usize) -> Vec<usize> {
    let r = ranked(scores);
    let k = match mode {
        PredictMode::SingleLabel => 1,
        PredictMode::MultiLabelTopK => true_count,
    };
    let mut out: Vec<usize> = r.into_iter().take(k.min(scores.len())).collect();
    out.sort_unstable();
    out
}

pub fn predict(
    clf: &OvrClassifier,
    emb: &EmbeddingMatrix,
    labels: &LabelSet,
    node: usize,
    mode: PredictMode,
) -> Vec<usize> {
    predict_from_scores(&clf.scores(emb.row(node)), mode, labels.labels(node).len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// Per-label true/false positive and false negative counts.
pub fn label_counts(
    predicted: &[Vec<usize>],
    truth: &[Vec<usize>],
    num_labels: usize,
) -> Result<Vec<Counts>> {
    if predicted.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} nodes",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let mut counts = vec![Counts::default(); num_labels];
    for (p, t) in predicted.iter().zip(truth) {
        for &l in p.iter().chain(t) {
            if l >= num_labels {
                return Err(Error::invalid(format!("label {l} outside 0..{num_labels}")));
            }
        }
        for &l in p {
            if t.contains(&l) {
                counts[l].tp += 1;
            } else {
                counts[l].fp += 1;
            }
        }
        for &l in t {
            if !p.contains(&l) {
                counts[l].fn_ += 1;
            }
        }
    }
    Ok(counts)
}

fn infer_num_labels(predicted: &[Vec<usize>], truth: &[Vec<usize>]) -> usize {
    predicted
        .iter()
        .chain(truth)
        .flatten()
        .max()
        .map_or(0, |m| m + 1)
}

/// F1 over TP/FP/FN pooled across all labels.
pub fn micro_f1(predicted: &[Vec<usize>], truth: &[Vec<usize>]) -> Result<f64> {
    let counts = label_counts(predicted, truth, infer_num_labels(predicted, truth))?;
    let pooled = counts.iter().fold(Counts::default(), |acc, c| Counts {
        tp: acc.tp + c.tp,
        fp: acc.fp + c.fp,
        fn_: acc.fn_ + c.fn_,
    });
    Ok(pooled.f1())
}

/// Unweighted mean of per-label F1 over labels `0..num_labels`. A label
/// with no true and no predicted instances contributes 0.
pub fn macro_f1_with_labels(
    predicted: &[Vec<usize>],
    truth: &[Vec<usize>],
    num_labels: usize,
) -> Result<f64> {
    let counts = label_counts(predicted, truth, num_labels)?;
    if num_labels == 0 {
        return Ok(0.0);
    }
    Ok(counts.iter().map(Counts::f1).sum::<f64>() / num_labels as f64)
}

/// Macro-F1 over every label id that occurs in either argument.
pub fn macro_f1(predicted: &[Vec<usize>], truth: &[Vec<usize>]) -> Result<f64> {
    macro_f1_with_labels(predicted, truth, infer_num_labels(predicted, truth))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub inverse_l2: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.5,
            repeats: 10,
            seed: 0,
            inverse_l2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub inverse_l2: f64,
    pub predict_mode: PredictMode,
    pub micro_f1_mean: f64,
    pub micro_f1_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub micro_f1_per_repeat: Vec<f64>,
    pub macro_f1_per_repeat: Vec<f64>,
    /// Per repeat, labels that had no positive training example.
    pub labels_without_training_positives: Vec<Vec<usize>>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Stratified split of the labeled nodes. Nodes are grouped by their
/// smallest label; each group contributes `round(fraction · size)` training
/// nodes, kept strictly between 0 and the group size whenever the group has
/// at least two members.
pub fn stratified_split(
    labels: &LabelSet,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); labels.num_labels()];
    for n in labels.labeled_nodes() {
        groups[labels.labels(n)[0]].push(n);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut g in groups {
        if g.is_empty() {
            continue;
        }
        g.shuffle(rng);
        let mut k = (fraction * g.len() as f64).round() as usize;
        if g.len() >= 2 {
            k = k.clamp(1, g.len() - 1);
        }
        test.extend_from_slice(&g[k..]);
        g.truncate(k);
        train.extend(g);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Repeated stratified random-split evaluation; a pure function of its
/// inputs (repeat `r` draws from stream `r` of the seeded generator).
pub fn evaluate(
    emb: &EmbeddingMatrix,
    labels: &LabelSet,
    config: &EvalConfig,
) -> Result<EvalReport> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::invalid(
            "train fraction must lie strictly between 0 and 1",
        ));
    }
    if config.repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    if labels.num_nodes() > emb.num_nodes() {
        return Err(Error::shape(format!(
            "labels cover {} nodes but the embedding has {}",
            labels.num_nodes(),
            emb.num_nodes()
        )));
    }
    let mode = if labels.is_multi_label() {
        PredictMode::MultiLabelTopK
    } else {
        PredictMode::SingleLabel
    };
    let runs = (0..config.repeats)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64, Vec<usize>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let (train, test) = stratified_split(labels, config.train_fraction, &mut rng);
            if train.is_empty() || test.is_empty() {
                return Err(Error::invalid(format!(
                    "train fraction {} leaves an empty train or test set",
                    config.train_fraction
                )));
            }
            let clf = train_ovr(emb, labels, &train, config.inverse_l2)?;
            let missing = clf.labels_without_positives();
            if !missing.is_empty() {
                log::warn!("repeat {r}: labels {missing:?} have no training examples");
            }
            let predicted: Vec<Vec<usize>> = test
                .iter()
                .map(|&n| predict(&clf, emb, labels, n, mode))
                .collect();
            let truth: Vec<Vec<usize>> = test.iter().map(|&n| labels.labels(n).to_vec()).collect();
            let mi = micro_f1(&predicted, &truth)?;
            let ma = macro_f1_with_labels(&predicted, &truth, labels.num_labels())?;
            Ok((mi, ma, missing))
        })
        .collect::<Result<Vec<_>>>()?;
    let micro: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let macro_: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (micro_mean, micro_std) = mean_std(&micro);
    let (macro_mean, macro_std) = mean_std(&macro_);
    Ok(EvalReport {
        train_fraction: config.train_fraction,
        repeats: config.repeats,
        seed: config.seed,
        inverse_l2: config.inverse_l2,
        predict_mode: mode,
        micro_f1_mean: micro_mean,
        micro_f1_std: micro_std,
        macro_f1_mean: macro_mean,
        macro_f1_std: macro_std,
        micro_f1_per_repeat: micro,
        macro_f1_per_repeat: macro_,
        labels_without_training_positives: runs.into_iter().map(|r| r.2).collect(),
    })
}

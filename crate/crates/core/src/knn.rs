//! Implicit-proximity view: each node's K most cosine-similar nodes by features.
//!
//! Selection repeatedly takes the row maximum, so the result is the K largest
//! strictly positive similarities per row. Ties go to the lowest node id.
//! Zero similarities are never selected, so nodes with an all-zero feature row
//! (or fewer than K positive neighbours) end up with fewer than K out-edges.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::FeatureMatrix;

/// Dense symmetric cosine similarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    num_nodes: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_dense(num_nodes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_nodes * num_nodes {
            return Err(Error::shape("similarity matrix must be square"));
        }
        Ok(SimilarityMatrix { num_nodes, values })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.num_nodes + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_nodes..(i + 1) * self.num_nodes]
    }
}

/// Binary directed K-NN matrix kept as per-node neighbour lists, in
/// selection order (most similar first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnnView {
    num_nodes: usize,
    k: usize,
    out_edges: Vec<Vec<usize>>,
}

impl KnnView {
    pub fn new(num_nodes: usize, k: usize, out_edges: Vec<Vec<usize>>) -> Result<Self> {
        if out_edges.len() != num_nodes {
            return Err(Error::shape(format!(
                "{} neighbour lists for {num_nodes} nodes",
                out_edges.len()
            )));
        }
        for (v, list) in out_edges.iter().enumerate() {
            if list.len() > k {
                return Err(Error::invalid(format!(
                    "node {v} has more than {k} neighbours"
                )));
            }
            if list.iter().any(|&u| u == v || u >= num_nodes) {
                return Err(Error::invalid(format!("node {v} has an invalid neighbour")));
            }
        }
        Ok(KnnView {
            num_nodes,
            k,
            out_edges,
        })
    }

    /// An empty view (no selected neighbours) over `num_nodes` nodes.
    pub fn empty(num_nodes: usize) -> Self {
        KnnView {
            num_nodes,
            k: 0,
            out_edges: vec![Vec::new(); num_nodes],
        }
    }

    /// Reads a directed `u v` edge list as a K-NN view.
    pub fn from_pairs(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut out_edges = vec![Vec::new(); num_nodes];
        for &(u, v) in pairs {
            if u >= num_nodes || v >= num_nodes || u == v {
                return Err(Error::invalid(format!("invalid K-NN edge ({u}, {v})")));
            }
            if !out_edges[u].contains(&v) {
                out_edges[u].push(v);
            }
        }
        let k = out_edges.iter().map(Vec::len).max().unwrap_or(0);
        KnnView::new(num_nodes, k, out_edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    /// Number of directed edges, i.e. nonzeros of the binary matrix.
    pub fn num_edges(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().map(move |&v| (u, v)))
    }

    /// Nodes that received fewer than K neighbours, with their out-degree.
    pub fn shortfall(&self) -> Vec<(usize, usize)> {
        self.out_edges
            .iter()
            .enumerate()
            .filter(|(_, l)| l.len() < self.k)
            .map(|(v, l)| (v, l.len()))
            .collect()
    }
}

/// Column-major view of the feature matrix for accumulating dot products.
struct Inverted {
    cols: Vec<Vec<(usize, f64)>>,
    norms: Vec<f64>,
}

impl Inverted {
    fn new(features: &FeatureMatrix) -> Self {
        let mut cols = vec![Vec::new(); features.num_features()];
        let mut norms = Vec::with_capacity(features.num_nodes());
        for n in 0..features.num_nodes() {
            let (fs, vs) = features.row(n);
            let mut sq = 0.0;
            for (&f, &v) in fs.iter().zip(vs) {
                cols[f].push((n, v));
                sq += v * v;
            }
            norms.push(sq.sqrt());
        }
        Inverted { cols, norms }
    }

    /// Cosine similarities of `node` against every node, diagonal zeroed.
    ///
    /// Each dot product sums the shared features in ascending feature order,
    /// so `sim(i, j)` and `sim(j, i)` are computed identically.
    fn similarity_row(&self, features: &FeatureMatrix, node: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let ni = self.norms[node];
        if ni == 0.0 {
            return;
        }
        let (fs, vs) = features.row(node);
        for (&f, &a) in fs.iter().zip(vs) {
            for &(j, b) in &self.cols[f] {
                out[j] += a * b;
            }
        }
        for (j, v) in out.iter_mut().enumerate() {
            let nj = self.norms[j];
            *v = if j == node || nj == 0.0 {
                0.0
            } else {
                (*v / (ni * nj)).min(1.0)
            };
        }
    }
}

/// Dense cosine similarity between all pairs of feature rows.
pub fn cosine_similarity(features: &FeatureMatrix) -> Result<SimilarityMatrix> {
    let n = features.num_nodes();
    if n < 2 {
        return Err(Error::invalid("cosine similarity needs at least two nodes"));
    }
    let inv = Inverted::new(features);
    let mut values = vec![0.0; n * n];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| inv.similarity_row(features, i, row));
    Ok(SimilarityMatrix {
        num_nodes: n,
        values,
    })
}

/// The `k` largest strictly positive entries of one row, lowest index on ties.
fn select_row(row: &[f64], k: usize) -> Vec<usize> {
    let mut cand: Vec<(usize, f64)> = row
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(j, &v)| (j, v))
        .collect();
    let order = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    };
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, order);
        cand.truncate(k);
    }
    cand.sort_unstable_by(order);
    cand.into_iter().map(|(j, _)| j).collect()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k >= n {
        return Err(Error::invalid(format!(
            "k = {k} needs more than {n} nodes to pick distinct neighbours"
        )));
    }
    Ok(())
}

pub fn top_k_select(sim: &SimilarityMatrix, k: usize) -> Result<KnnView> {
    let n = sim.num_nodes();
    check_k(n, k)?;
    let out_edges = (0..n)
        .into_par_iter()
        .map(|i| select_row(sim.row(i), k))
        .collect();
    Ok(KnnView {
        num_nodes: n,
        k,
        out_edges,
    })
}

/// `top_k_select(cosine_similarity(features), k)` without holding the full
/// similarity matrix: rows are computed and reduced one at a time.
pub fn build_knn_view(features: &FeatureMatrix, k: usize) -> Result<KnnView> {
    let n = features.num_nodes();
    if n < 2 {
        return Err(Error::invalid("cosine similarity needs at least two nodes"));
    }
    check_k(n, k)?;
    let inv = Inverted::new(features);
    let out_edges = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, i| {
                inv.similarity_row(features, i, buf);
                select_row(buf, k)
            },
        )
        .collect();
    Ok(KnnView {
        num_nodes: n,
        k,
        out_edges,
    })
}

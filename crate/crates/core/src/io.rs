//! Text formats for graphs, node features, labels and embeddings.
//!
//! All formats are whitespace-delimited UTF-8. Blank lines and lines whose
//! first non-space character is `#` are skipped.
//!
//! * edge list: `u v`
//! * features: `node feature [value]`, value defaults to 1
//! * labels: `node label`, one line per (node, label) pair
//! * embeddings: header `num_nodes dim`, then one row of floats per node

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Undirected, unweighted graph with dense 0-based node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    /// Sorted, each pair stored once with `u < v`.
    edges: Vec<(usize, usize)>,
}

/// Counts of input lines that did not become edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeListStats {
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

impl Graph {
    /// Builds a graph from arbitrary pairs, dropping self-loops and duplicates.
    pub fn from_pairs(
        num_nodes: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<(Graph, EdgeListStats)> {
        let mut stats = EdgeListStats::default();
        let mut set = BTreeSet::new();
        for (u, v) in pairs {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            if u == v {
                stats.self_loops_dropped += 1;
                continue;
            }
            if !set.insert((u.min(v), u.max(v))) {
                stats.duplicates_dropped += 1;
            }
        }
        Ok((
            Graph {
                num_nodes,
                edges: set.into_iter().collect(),
            },
            stats,
        ))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Undirected edges, `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Nonzeros of the symmetric adjacency matrix (each edge twice).
    pub fn adjacency_entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)])
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }
}

/// Sparse nonnegative `num_nodes × num_features` matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    num_nodes: usize,
    num_features: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl FeatureMatrix {
    /// Zero values are dropped; negative, non-finite, out-of-range or
    /// duplicated entries are rejected.
    pub fn from_triples(
        num_nodes: usize,
        num_features: usize,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_nodes];
        for (n, f, v) in triples {
            if n >= num_nodes || f >= num_features {
                return Err(Error::invalid(format!(
                    "feature entry ({n}, {f}) outside {num_nodes}x{num_features}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "feature entry ({n}, {f}) has invalid value {v}"
                )));
            }
            if v != 0.0 {
                rows[n].push((f, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(num_nodes + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (n, mut r) in rows.into_iter().enumerate() {
            r.sort_by_key(|e| e.0);
            if let Some(w) = r.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!(
                    "duplicate feature entry ({n}, {})",
                    w[0].0
                )));
            }
            for (f, v) in r {
                cols.push(f);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(FeatureMatrix {
            num_nodes,
            num_features,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.first().map_or(0, Vec::len);
        let triples = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)));
        Self::from_triples(rows.len(), t, triples)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(feature ids, values)` of one node, sorted by feature id.
    pub fn row(&self, node: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[node], self.row_ptr[node + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes).flat_map(move |n| {
            let (c, v) = self.row(n);
            c.iter().zip(v).map(move |(&f, &x)| (n, f, x))
        })
    }

    /// Multiplies one row by `factor`.
    pub fn scale_row(&mut self, node: usize, factor: f64) {
        let (s, e) = (self.row_ptr[node], self.row_ptr[node + 1]);
        for v in &mut self.vals[s..e] {
            *v *= factor;
        }
    }
}

/// Per-node label sets. Unlabeled nodes have an empty set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    num_labels: usize,
    assignments: Vec<Vec<usize>>,
}

impl LabelSet {
    pub fn new(num_labels: usize, assignments: Vec<Vec<usize>>) -> Result<Self> {
        let mut assignments = assignments;
        for (n, set) in assignments.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if let Some(&l) = set.iter().find(|&&l| l >= num_labels) {
                return Err(Error::invalid(format!(
                    "node {n} has label {l} but only {num_labels} labels exist"
                )));
            }
        }
        Ok(LabelSet {
            num_labels,
            assignments,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn labels(&self, node: usize) -> &[usize] {
        &self.assignments[node]
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&n| !self.assignments[n].is_empty())
            .collect()
    }

    pub fn is_multi_label(&self) -> bool {
        self.assignments.iter().any(|s| s.len() > 1)
    }

    /// Pads (or checks) the node count against a graph of `num_nodes` nodes.
    pub fn aligned_to(&self, num_nodes: usize) -> Result<LabelSet> {
        if let Some(n) =
            (num_nodes..self.assignments.len()).find(|&n| !self.assignments[n].is_empty())
        {
            return Err(Error::shape(format!(
                "label file references node {n} but the graph has {num_nodes} nodes"
            )));
        }
        let mut assignments = self.assignments.clone();
        assignments.resize(num_nodes, Vec::new());
        Ok(LabelSet {
            num_labels: self.num_labels,
            assignments,
        })
    }
}

/// Dense node embedding, one finite row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Mat,
}

impl EmbeddingMatrix {
    pub fn new(data: Mat) -> Result<Self> {
        if data.cols() == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if !data.all_finite() {
            return Err(Error::Numerical(
                "embedding contains NaN or infinite values".into(),
            ));
        }
        Ok(EmbeddingMatrix { data })
    }

    pub fn num_nodes(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn row(&self, node: usize) -> &[f64] {
        self.data.row(node)
    }

    pub fn matrix(&self) -> &Mat {
        &self.data
    }

    pub fn into_matrix(self) -> Mat {
        self.data
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-comment, non-blank lines with their 1-based line number.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        (!t.is_empty() && !t.starts_with('#')).then_some((i + 1, t))
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_index(path: &Path, line: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    tok.parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{tok}`")))
}

/// Reads an edge list. `num_nodes` overrides the inferred `1 + max id`.
pub fn load_edge_list(path: &Path, num_nodes: Option<usize>) -> Result<(Graph, EdgeListStats)> {
    let text = read(path)?;
    let mut pairs = Vec::new();
    for (ln, line) in data_lines(&text) {
        let mut it = line.split_whitespace();
        let u = parse_index(path, ln, it.next(), "source node")?;
        let v = parse_index(path, ln, it.next(), "target node")?;
        if it.next().is_some() {
            return Err(parse_err(path, ln, "expected exactly two fields"));
        }
        pairs.push((u, v));
    }
    if pairs.is_empty() {
        return Err(Error::Empty(path.to_path_buf()));
    }
    let inferred = 1 + pairs.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0);
    let n = match num_nodes {
        Some(n) if n < inferred => {
            return Err(Error::invalid(format!(
                "{}: node id {} exceeds declared node count {n}",
                path.display(),
                inferred - 1
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    let (g, stats) = Graph::from_pairs(n, pairs)?;
    if stats.self_loops_dropped > 0 {
        warn!(
            "{}: dropped {} self-loop(s)",
            path.display(),
            stats.self_loops_dropped
        );
    }
    Ok((g, stats))
}

/// Writes a graph (or any directed pair list) as `u v` lines.
pub fn save_pairs(pairs: impl IntoIterator<Item = (usize, usize)>, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for (u, v) in pairs {
        writeln!(w, "{u} {v}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads node features. `bounds` declares `(num_nodes, num_features)`;
/// without it both are inferred from the largest ids present.
pub fn load_features(path: &Path, bounds: Option<(usize, usize)>) -> Result<FeatureMatrix> {
    let text = read(path)?;
    let mut triples = Vec::new();
    for (ln, line) in data_lines(&text) {
        let mut it = line.split_whitespace();
        let n = parse_index(path, ln, it.next(), "node")?;
        let f = parse_index(path, ln, it.next(), "feature")?;
        let v = match it.next() {
            None => 1.0,
            Some(tok) => tok
                .parse::<f64>()
                .map_err(|_| parse_err(path, ln, format!("invalid value `{tok}`")))?,
        };
        if it.next().is_some() {
            return Err(parse_err(path, ln, "expected two or three fields"));
        }
        if !v.is_finite() || v < 0.0 {
            return Err(parse_err(
                path,
                ln,
                format!("feature value {v} must be finite and nonnegative"),
            ));
        }
        if let Some((bn, bf)) = bounds {
            if n >= bn || f >= bf {
                return Err(parse_err(
                    path,
                    ln,
                    format!("entry ({n}, {f}) outside declared {bn}x{bf}"),
                ));
            }
        }
        triples.push((n, f, v));
    }
    if triples.is_empty() && bounds.is_none() {
        return Err(Error::Empty(path.to_path_buf()));
    }
    let (bn, bf) = bounds.unwrap_or_else(|| {
        let n = triples.iter().map(|t| t.0).max().map_or(0, |m| m + 1);
        let f = triples.iter().map(|t| t.1).max().map_or(0, |m| m + 1);
        (n, f)
    });
    FeatureMatrix::from_triples(bn, bf, triples).map_err(|e| match e {
        Error::Invalid(msg) => Error::Invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads `node label` lines into a label set.
pub fn load_labels(path: &Path) -> Result<LabelSet> {
    let text = read(path)?;
    let mut pairs = Vec::new();
    for (ln, line) in data_lines(&text) {
        let mut it = line.split_whitespace();
        let n = parse_index(path, ln, it.next(), "node")?;
        let l = parse_index(path, ln, it.next(), "label")?;
        if it.next().is_some() {
            return Err(parse_err(path, ln, "expected exactly two fields"));
        }
        pairs.push((n, l));
    }
    if pairs.is_empty() {
        return Err(Error::Empty(path.to_path_buf()));
    }
    let num_nodes = 1 + pairs.iter().map(|p| p.0).max().unwrap_or(0);
    let num_labels = 1 + pairs.iter().map(|p| p.1).max().unwrap_or(0);
    let mut sets = vec![Vec::new(); num_nodes];
    for (n, l) in pairs {
        sets[n].push(l);
    }
    LabelSet::new(num_labels, sets)
}

pub fn save_labels(labels: &LabelSet, path: &Path) -> Result<()> {
    let pairs = (0..labels.num_nodes()).flat_map(|n| labels.labels(n).iter().map(move |&l| (n, l)));
    save_pairs(pairs, path)
}

pub fn save_features(features: &FeatureMatrix, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for (n, t, v) in features.triples() {
        writeln!(w, "{n} {t} {v}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a dense matrix in the embedding format. `f64`'s `Display` is the
/// shortest representation that parses back to the same bits.
pub fn save_matrix(m: &Mat, path: &Path) -> Result<()> {
    if m.cols() == 0 {
        return Err(Error::invalid("cannot save a matrix with zero columns"));
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", m.rows(), m.cols()).map_err(io)?;
    for i in 0..m.rows() {
        let mut first = true;
        for v in m.row(i) {
            if !first {
                w.write_all(b" ").map_err(io)?;
            }
            first = false;
            write!(w, "{v}").map_err(io)?;
        }
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_matrix(path: &Path) -> Result<Mat> {
    let text = read(path)?;
    let mut lines = data_lines(&text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::Empty(path.to_path_buf()))?;
    let mut it = header.split_whitespace();
    let rows = parse_index(path, hl, it.next(), "row count")?;
    let cols = parse_index(path, hl, it.next(), "column count")?;
    if it.next().is_some() {
        return Err(parse_err(path, hl, "header must be `num_nodes dim`"));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, line) in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .map_err(|_| parse_err(path, ln, format!("invalid number `{tok}`")))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(parse_err(
                path,
                ln,
                format!("row has {} values, header says {cols}", data.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::shape(format!(
            "{}: header declares {rows} rows, found {seen}",
            path.display()
        )));
    }
    Mat::from_vec(rows, cols, data)
}

pub fn save_embeddings(emb: &EmbeddingMatrix, path: &Path) -> Result<()> {
    save_matrix(emb.matrix(), path)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::new(load_matrix(path)?)
}

/// Sidecar id map: one external id per line, line order gives the dense id.
pub fn load_id_map(path: &Path) -> Result<HashMap<String, usize>> {
    let text = read(path)?;
    let mut map = HashMap::new();
    for (ln, line) in data_lines(&text) {
        if map.insert(line.to_string(), map.len()).is_some() {
            return Err(parse_err(path, ln, format!("duplicate id `{line}`")));
        }
    }
    Ok(map)
}

/// A complete labeled, featured graph read from LINQS-style
/// `.content` (`id feat_1 .. feat_T class`) and `.cites` (`id id`) files.
#[derive(Debug, Clone)]
pub struct LinqsDataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelSet,
    pub node_ids: Vec<String>,
    pub class_names: Vec<String>,
    /// Citation lines that reference a node id missing from the content files.
    pub dangling_citations: usize,
    pub edge_stats: EdgeListStats,
}

/// Loads one or more `.content`/`.cites` pairs as a single graph. Node order
/// follows the content files; class ids follow sorted class names.
pub fn load_linqs(content: &[PathBuf], cites: &[PathBuf]) -> Result<LinqsDataset> {
    let mut node_ids = Vec::new();
    let mut index = HashMap::new();
    let mut raw_rows: Vec<(Vec<f64>, String)> = Vec::new();
    let mut width = None;
    for path in content {
        let text = read(path)?;
        for (ln, line) in data_lines(&text) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 3 {
                return Err(parse_err(
                    path,
                    ln,
                    "content line needs id, features and class",
                ));
            }
            let t = toks.len() - 2;
            match width {
                None => width = Some(t),
                Some(w) if w != t => {
                    return Err(parse_err(
                        path,
                        ln,
                        format!("expected {w} features, found {t}"),
                    ))
                }
                _ => {}
            }
            let mut row = Vec::with_capacity(t);
            for tok in &toks[1..toks.len() - 1] {
                row.push(
                    tok.parse::<f64>()
                        .map_err(|_| parse_err(path, ln, format!("invalid feature `{tok}`")))?,
                );
            }
            let id = toks[0].to_string();
            if index.insert(id.clone(), node_ids.len()).is_some() {
                return Err(parse_err(path, ln, format!("duplicate node id `{id}`")));
            }
            node_ids.push(id);
            raw_rows.push((row, toks[toks.len() - 1].to_string()));
        }
    }
    if node_ids.is_empty() {
        return Err(Error::invalid("no content lines found"));
    }
    let mut class_names: Vec<String> = raw_rows.iter().map(|r| r.1.clone()).collect();
    class_names.sort();
    class_names.dedup();
    let class_of: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels = LabelSet::new(
        class_names.len(),
        raw_rows
            .iter()
            .map(|r| vec![class_of[r.1.as_str()]])
            .collect(),
    )?;
    let features =
        FeatureMatrix::from_dense(&raw_rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>())?;

    let mut pairs = Vec::new();
    let mut dangling = 0;
    for path in cites {
        let text = read(path)?;
        for (ln, line) in data_lines(&text) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(parse_err(path, ln, "citation line needs two ids"));
            }
            match (index.get(toks[0]), index.get(toks[1])) {
                (Some(&u), Some(&v)) => pairs.push((u, v)),
                _ => dangling += 1,
            }
        }
    }
    let (graph, edge_stats) = Graph::from_pairs(node_ids.len(), pairs)?;
    Ok(LinqsDataset {
        graph,
        features,
        labels,
        node_ids,
        class_names,
        dangling_citations: dangling,
        edge_stats,
    })
}

//! Planted-partition graphs with class-dependent bag-of-words features, for
//! smoke tests and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{FeatureMatrix, Graph, LabelSet};

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub num_features: usize,
    /// Edge probability inside a class.
    pub p_in: f64,
    /// Edge probability across classes.
    pub p_out: f64,
    /// Probability that a node uses a word from its own class's block.
    pub p_word_in: f64,
    pub p_word_out: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_nodes: 30,
            num_classes: 3,
            num_features: 24,
            p_in: 0.3,
            p_out: 0.03,
            p_word_in: 0.4,
            p_word_out: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelSet,
}

/// Node `v` belongs to class `v % num_classes`; features are split into
/// one contiguous word block per class.
pub fn planted_partition(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    let SyntheticSpec {
        num_nodes: n,
        num_classes: c,
        num_features: t,
        ..
    } = *spec;
    if n < 2 || c == 0 || t < c {
        return Err(Error::invalid(
            "need ≥2 nodes, ≥1 class and at least one word per class",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let class = |v: usize| v % c;
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if class(u) == class(v) {
                spec.p_in
            } else {
                spec.p_out
            };
            if rng.gen_bool(p) {
                pairs.push((u, v));
            }
        }
    }
    let block = t / c;
    let mut triples = Vec::new();
    for v in 0..n {
        let own = class(v);
        let mut any = false;
        for f in 0..t {
            let fc = (f / block).min(c - 1);
            let p = if fc == own {
                spec.p_word_in
            } else {
                spec.p_word_out
            };
            if rng.gen_bool(p) {
                triples.push((v, f, 1.0));
                any = true;
            }
        }
        if !any {
            triples.push((v, own * block, 1.0));
        }
    }
    let (graph, _) = Graph::from_pairs(n, pairs)?;
    let features = FeatureMatrix::from_triples(n, t, triples)?;
    let labels = LabelSet::new(c, (0..n).map(|v| vec![class(v)]).collect())?;
    Ok(SyntheticDataset {
        graph,
        features,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let a = planted_partition(&SyntheticSpec::default()).unwrap();
        let b = planted_partition(&SyntheticSpec::default()).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features, b.features);
        assert_eq!(a.graph.num_nodes(), 30);
        assert_eq!(a.labels.num_labels(), 3);
        assert!((0..30).all(|v| a.features.row(v).0.len() > 0));
    }
}

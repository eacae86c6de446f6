use crate::embedding::SimilarityMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected weighted graph over similarity-matrix rows. Edges satisfy
/// `i < j` and are kept in lexicographic pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    node_ids: Vec<String>,
    edges: Vec<Edge>,
}

impl SimilarityGraph {
    pub fn new(node_ids: Vec<String>, mut edges: Vec<Edge>) -> Result<Self> {
        let n = node_ids.len();
        for e in &edges {
            if e.i >= e.j || e.j >= n {
                return Err(Error::domain(format!(
                    "edge ({}, {}) must satisfy i < j < {n}",
                    e.i, e.j
                )));
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(Error::domain(format!("edge weight {} outside [0, 1]", e.weight)));
            }
        }
        edges.sort_by_key(|e| (e.i, e.j));
        if edges.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::domain("duplicate edge"));
        }
        Ok(SimilarityGraph { node_ids, edges })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// All node pairs of a similarity matrix ranked by ascending weight, ties
/// broken by `(i, j)`. Pruning at any cutoff drops a prefix of this ranking.
#[derive(Debug, Clone)]
pub struct EdgeRanking {
    node_ids: Vec<String>,
    ranked: Vec<Edge>,
}

impl EdgeRanking {
    pub fn new(sim: &SimilarityMatrix) -> Self {
        let mut ranked: Vec<Edge> = sim
            .pairs()
            .map(|(i, j, weight)| Edge { i, j, weight })
            .collect();
        // Stable sort keeps the lexicographic pair order among equal weights.
        ranked.sort_by(|a, b| a.weight.total_cmp(&b.weight));
        EdgeRanking {
            node_ids: sim.ids().to_vec(),
            ranked,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.ranked.len()
    }

    /// Number of edges dropped at `cutoff_pct`: `floor(cutoff/100 × E)`.
    pub fn dropped_at(&self, cutoff_pct: u32) -> Result<usize> {
        if cutoff_pct >= 100 {
            return Err(Error::domain(format!(
                "cutoff {cutoff_pct}% must be below 100"
            )));
        }
        Ok(self.ranked.len() * cutoff_pct as usize / 100)
    }

    pub fn prune(&self, cutoff_pct: u32) -> Result<SimilarityGraph> {
        let drop = self.dropped_at(cutoff_pct)?;
        let mut edges = self.ranked[drop..].to_vec();
        edges.sort_by_key(|e| (e.i, e.j));
        Ok(SimilarityGraph {
            node_ids: self.node_ids.clone(),
            edges,
        })
    }
}

/// Drop the `cutoff_pct`% lowest-weight edges of the complete graph.
pub fn build_pruned_graph(sim: &SimilarityMatrix, cutoff_pct: u32) -> Result<SimilarityGraph> {
    EdgeRanking::new(sim).prune(cutoff_pct)
}

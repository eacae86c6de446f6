//! Similarity-graph clustering: edge pruning, Louvain community detection,
//! partition comparison and cutoff selection.

mod ari;
mod graph;
mod louvain;
mod sweep;

use std::collections::HashMap;

pub use ari::{adjusted_rand_index, adjusted_rand_index_labels};
pub use graph::{build_pruned_graph, Edge, EdgeRanking, SimilarityGraph};
pub use louvain::{louvain, louvain_with, modularity, modularity_with_resolution, LouvainConfig};
pub use sweep::{stability_sweep, SweepConfig, SweepReport, SweepRow};

use crate::{Error, Result};

/// Total assignment of nodes to communities. Community ids are canonical:
/// numbered `0..k` in order of first appearance over the node list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    node_ids: Vec<String>,
    assignment: Vec<usize>,
}

impl Partition {
    /// Build from arbitrary labels; labels are renumbered canonically.
    pub fn new(node_ids: Vec<String>, labels: &[usize]) -> Result<Self> {
        if node_ids.len() != labels.len() {
            return Err(Error::domain(format!(
                "{} node ids but {} labels",
                node_ids.len(),
                labels.len()
            )));
        }
        Ok(Partition {
            node_ids,
            assignment: canonicalize(labels),
        })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn community_of(&self, node_id: &str) -> Option<usize> {
        self.node_ids
            .iter()
            .position(|id| id == node_id)
            .map(|i| self.assignment[i])
    }

    /// `node_id → community` lookup table.
    pub fn to_map(&self) -> HashMap<&str, usize> {
        self.node_ids
            .iter()
            .map(String::as_str)
            .zip(self.assignment.iter().copied())
            .collect()
    }
}

/// Renumber labels to `0..k` by first appearance.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut remap = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = remap.len();
            *remap.entry(l).or_insert(next)
        })
        .collect()
}

/// Remove communities smaller than `min_size`. Returns the renumbered
/// partition over the remaining nodes and the ids of the removed nodes.
pub fn drop_small_clusters(p: &Partition, min_size: usize) -> (Partition, Vec<String>) {
    let sizes = p.community_sizes();
    let mut kept_ids = Vec::new();
    let mut kept_labels = Vec::new();
    let mut removed = Vec::new();
    for (id, &c) in p.node_ids.iter().zip(&p.assignment) {
        if sizes[c] >= min_size {
            kept_ids.push(id.clone());
            kept_labels.push(c);
        } else {
            removed.push(id.clone());
        }
    }
    let kept = Partition {
        node_ids: kept_ids,
        assignment: canonicalize(&kept_labels),
    };
    (kept, removed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partition_with_sizes(sizes: &[usize]) -> Partition {
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c * 7 + 3, n))
            .collect();
        let ids = (0..labels.len()).map(|i| format!("n{i}")).collect();
        Partition::new(ids, &labels).unwrap()
    }

    #[test]
    fn canonical_labels() {
        assert_eq!(canonicalize(&[5, 5, 2, 9, 2]), vec![0, 0, 1, 2, 1]);
    }

    #[test]
    fn small_cluster_removal() {
        let p = partition_with_sizes(&[500, 300, 25]);
        let (kept, removed) = drop_small_clusters(&p, 26);
        assert_eq!(kept.community_count(), 2);
        assert_eq!(kept.len(), 800);
        assert_eq!(removed.len(), 25);
        assert_eq!(removed[0], "n800");
    }

    #[test]
    fn small_cluster_removal_edges() {
        let p = partition_with_sizes(&[30, 40]);
        let (kept, removed) = drop_small_clusters(&p, 26);
        assert_eq!(kept, p);
        assert!(removed.is_empty());

        let (kept, removed) = drop_small_clusters(&partition_with_sizes(&[3, 4]), 26);
        assert!(kept.is_empty());
        assert_eq!(kept.community_count(), 0);
        assert_eq!(removed.len(), 7);
    }

    #[test]
    fn renumbering_after_removal() {
        let p = partition_with_sizes(&[2, 30, 28]);
        let (kept, _) = drop_small_clusters(&p, 26);
        assert_eq!(kept.community_sizes(), vec![30, 28]);
        assert_eq!(kept.community_of("n2"), Some(0));
    }
}

//! Two-phase greedy modularity optimization (local moves, then community
//! aggregation), repeated until a level no longer improves modularity.
//!
//! Node visit order within each level is a seeded permutation, so a given
//! `(graph, seed)` always yields the same partition.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{canonicalize, Partition, SimilarityGraph};
use crate::{Error, Result};

/// Minimum modularity improvement for another aggregation level.
const LEVEL_TOLERANCE: f64 = 1e-9;
/// Minimum gain advantage for a single node move.
const MOVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouvainConfig {
    pub seed: u64,
    pub resolution: f64,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            seed: 0,
            resolution: 1.0,
        }
    }
}

/// Weighted graph at one aggregation level. `self_loop[i]` holds `A_ii`,
/// which counts each internal edge of an aggregated node twice so that
/// row sums equal degrees.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(g: &SimilarityGraph) -> Self {
        let n = g.node_count();
        let mut adj = vec![Vec::new(); n];
        for e in g.edges() {
            if e.weight > 0.0 {
                adj[e.i].push((e.j, e.weight));
                adj[e.j].push((e.i, e.weight));
            }
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        Level::with_adjacency(adj, vec![0.0; n])
    }

    fn with_adjacency(adj: Vec<Vec<(usize, f64)>>, self_loop: Vec<f64>) -> Self {
        let degree = adj
            .iter()
            .zip(&self_loop)
            .map(|(list, &s)| list.iter().map(|&(_, w)| w).sum::<f64>() + s)
            .collect();
        Level {
            adj,
            self_loop,
            degree,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn two_m(&self) -> f64 {
        self.degree.iter().sum()
    }

    fn modularity(&self, comm: &[usize], resolution: f64) -> f64 {
        let two_m = self.two_m();
        let k = comm.iter().max().map_or(0, |&m| m + 1);
        let mut internal = vec![0.0; k];
        let mut total = vec![0.0; k];
        for i in 0..self.len() {
            let c = comm[i];
            total[c] += self.degree[i];
            internal[c] += self.self_loop[i];
            for &(j, w) in &self.adj[i] {
                if comm[j] == c {
                    internal[c] += w;
                }
            }
        }
        internal
            .iter()
            .zip(&total)
            .map(|(&inc, &tot)| inc / two_m - resolution * (tot / two_m).powi(2))
            .sum()
    }

    /// Local-move phase. Returns canonical community labels and whether any
    /// node changed community.
    fn local_moves(&self, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let two_m = self.two_m();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut total = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut link = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ki = self.degree[i];
                if ki == 0.0 {
                    continue;
                }
                let own = comm[i];
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    link[c] += w;
                }
                total[own] -= ki;
                let gain = |c: usize, link: &[f64], total: &[f64]| {
                    link[c] - resolution * total[c] * ki / two_m
                };
                let mut best = own;
                let mut best_gain = gain(own, &link, &total);
                for &c in &touched {
                    let g = gain(c, &link, &total);
                    if g > best_gain + MOVE_TOLERANCE {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += ki;
                comm[i] = best;
                if best != own {
                    moved = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                    seen[c] = false;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        (canonicalize(&comm), any_move)
    }

    fn aggregate(&self, comm: &[usize]) -> Level {
        let k = comm.iter().max().map_or(0, |&m| m + 1);
        let mut self_loop = vec![0.0; k];
        let mut links: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..self.len() {
            let ci = comm[i];
            self_loop[ci] += self.self_loop[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    self_loop[ci] += w;
                } else {
                    links.push((ci, cj, w));
                }
            }
        }
        links.sort_by_key(|&(a, b, _)| (a, b));
        let mut adj = vec![Vec::new(); k];
        for (a, b, w) in links {
            let list: &mut Vec<(usize, f64)> = &mut adj[a];
            match list.last_mut() {
                Some((last, acc)) if *last == b => *acc += w,
                _ => list.push((b, w)),
            }
        }
        Level::with_adjacency(adj, self_loop)
    }
}

pub fn louvain(g: &SimilarityGraph, seed: u64) -> Partition {
    louvain_with(
        g,
        &LouvainConfig {
            seed,
            ..LouvainConfig::default()
        },
    )
}

pub fn louvain_with(g: &SimilarityGraph, config: &LouvainConfig) -> Partition {
    let n = g.node_count();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = Level::from_graph(g);
    if level.two_m() <= 0.0 {
        return Partition {
            node_ids: g.node_ids().to_vec(),
            assignment: membership,
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let singletons: Vec<usize> = (0..level.len()).collect();
    let mut quality = level.modularity(&singletons, config.resolution);
    loop {
        let (comm, moved) = level.local_moves(config.resolution, &mut rng);
        if !moved {
            break;
        }
        let next_quality = level.modularity(&comm, config.resolution);
        if next_quality < quality {
            break;
        }
        for m in &mut membership {
            *m = comm[*m];
        }
        let improved = next_quality - quality > LEVEL_TOLERANCE;
        quality = next_quality;
        if !improved {
            break;
        }
        level = level.aggregate(&comm);
    }
    Partition {
        node_ids: g.node_ids().to_vec(),
        assignment: canonicalize(&membership),
    }
}

pub fn modularity(g: &SimilarityGraph, p: &Partition) -> Result<f64> {
    modularity_with_resolution(g, p, 1.0)
}

/// `Q = Σ_c [ L_c / m − γ (d_c / 2m)² ]` with `L_c` the internal edge weight
/// and `d_c` the degree sum of community `c`.
pub fn modularity_with_resolution(
    g: &SimilarityGraph,
    p: &Partition,
    resolution: f64,
) -> Result<f64> {
    if p.node_ids() != g.node_ids() {
        return Err(Error::domain("partition does not cover the graph's nodes"));
    }
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(Error::domain("modularity undefined for zero total weight"));
    }
    let comm = p.assignment();
    let k = p.community_count();
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for e in g.edges() {
        degree[comm[e.i]] += e.weight;
        degree[comm[e.j]] += e.weight;
        if comm[e.i] == comm[e.j] {
            internal[comm[e.i]] += e.weight;
        }
    }
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| l / m - resolution * (d / (2.0 * m)).powi(2))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::super::{Edge, SimilarityGraph};
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityGraph {
        SimilarityGraph::new(
            (0..n).map(|i| format!("v{i}")).collect(),
            edges
                .iter()
                .map(|&(i, j, weight)| Edge { i, j, weight })
                .collect(),
        )
        .unwrap()
    }

    fn cliques(size: usize, bridge: f64) -> SimilarityGraph {
        let mut edges = Vec::new();
        for offset in [0, size] {
            for i in 0..size {
                for j in i + 1..size {
                    edges.push((offset + i, offset + j, 1.0));
                }
            }
        }
        edges.push((size - 1, size, bridge));
        graph(2 * size, &edges)
    }

    /// Restricted-growth-string enumeration of all set partitions.
    fn all_partitions(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for c in 0..=max + 1 {
                prefix.push(c);
                rec(prefix, max.max(c), n, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n == 0 {
            return vec![vec![]];
        }
        let mut prefix = vec![0];
        rec(&mut prefix, 0, n, &mut out);
        out
    }

    /// Modularity straight from the double-sum definition.
    fn modularity_oracle(n: usize, edges: &[(usize, usize, f64)], labels: &[usize]) -> f64 {
        let mut a = vec![vec![0.0; n]; n];
        for &(i, j, w) in edges {
            a[i][j] += w;
            a[j][i] += w;
        }
        let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
        let two_m: f64 = k.iter().sum();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += a[i][j] - k[i] * k[j] / two_m;
                }
            }
        }
        q / two_m
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=6).map(|n| all_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn separates_bridged_cliques() {
        let g = cliques(8, 0.05);
        let p = louvain(&g, 0);
        assert_eq!(p.community_count(), 2);
        assert!(p.assignment()[..8].iter().all(|&c| c == p.assignment()[0]));
        assert!(p.assignment()[8..].iter().all(|&c| c == p.assignment()[8]));
    }

    #[test]
    fn shrunk_clique_pair_is_optimal() {
        // Two triangles bridged by a weak edge; exhaustive search over the
        // 203 partitions confirms the clique split maximizes Q.
        let g = cliques(3, 0.05);
        let edges: Vec<(usize, usize, f64)> =
            g.edges().iter().map(|e| (e.i, e.j, e.weight)).collect();
        let best = all_partitions(6)
            .into_iter()
            .max_by(|a, b| {
                modularity_oracle(6, &edges, a).total_cmp(&modularity_oracle(6, &edges, b))
            })
            .unwrap();
        assert_eq!(best, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(louvain(&g, 3).assignment(), best.as_slice());
    }

    #[test]
    fn trivial_graphs() {
        let single = graph(1, &[]);
        assert_eq!(louvain(&single, 0).community_count(), 1);
        let empty = graph(5, &[]);
        assert_eq!(louvain(&empty, 0).community_count(), 5);
        assert!(modularity(&empty, &louvain(&empty, 0)).is_err());
    }

    #[test]
    fn modularity_landmarks() {
        let edges = [(0, 1, 1.0), (2, 3, 1.0)];
        let g = graph(4, &edges);
        let ids = g.node_ids().to_vec();
        let one = Partition::new(ids.clone(), &[0, 0, 0, 0]).unwrap();
        assert_abs_diff_eq!(modularity(&g, &one).unwrap(), 0.0, epsilon = 1e-12);
        // Two disconnected unit edges split correctly: each community holds
        // half the weight and half the degree, Q = 2 × (1/2 − 1/4) = 0.5.
        let split = Partition::new(ids, &[0, 0, 1, 1]).unwrap();
        assert_abs_diff_eq!(modularity(&g, &split).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let g = cliques(6, 0.3);
        for seed in 0..5 {
            assert_eq!(louvain(&g, seed), louvain(&g, seed));
        }
    }

    fn random_graph(n: usize, weights: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut edges = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let w = weights[k % weights.len()];
                k += 1;
                if w > 0.35 {
                    edges.push((i, j, w));
                }
            }
        }
        edges
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn matches_oracle_and_ranks_near_top(
            n in 3usize..=8,
            weights in prop::collection::vec(0.0f64..1.0, 28),
            seed in 0u64..1000,
        ) {
            let edges = random_graph(n, &weights);
            prop_assume!(!edges.is_empty());
            let g = graph(n, &edges);
            let p = louvain(&g, seed);
            let q = modularity(&g, &p).unwrap();
            prop_assert!((q - modularity_oracle(n, &edges, p.assignment())).abs() < 1e-12);

            let singletons = Partition::new(g.node_ids().to_vec(), &(0..n).collect::<Vec<_>>()).unwrap();
            prop_assert!(q >= modularity(&g, &singletons).unwrap() - 1e-12);

            let mut all: Vec<f64> = all_partitions(n)
                .iter()
                .map(|labels| modularity_oracle(n, &edges, labels))
                .collect();
            all.sort_by(|a, b| b.total_cmp(a));
            let decile = all[(all.len() - 1) / 10];
            prop_assert!(q >= decile - 1e-12, "q={q} decile={decile} best={}", all[0]);
        }
    }
}

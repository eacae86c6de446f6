use std::fmt::Write as _;

use rayon::prelude::*;

use super::{adjusted_rand_index, louvain_with, EdgeRanking, LouvainConfig, Partition};
use crate::embedding::SimilarityMatrix;
use crate::{Error, Result};

/// ARI values within this distance of the maximum count as tied.
const ARI_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Strictly increasing pruning cutoffs, in percent.
    pub cutoffs: Vec<u32>,
    pub seed: u64,
    pub resolution: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            cutoffs: (0..10).map(|k| k * 10).collect(),
            seed: 0,
            resolution: 1.0,
        }
    }
}

impl SweepConfig {
    /// Louvain seed used at a given cutoff.
    pub fn seed_for(&self, cutoff_pct: u32) -> u64 {
        self.seed.wrapping_add(cutoff_pct as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cutoff_pct: u32,
    pub cluster_count: usize,
    /// ARI against the previous cutoff; absent on the first row.
    pub ari_vs_prev: Option<f64>,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Smallest cutoff whose ARI against its predecessor is maximal.
    pub chosen_cutoff: u32,
}

impl SweepReport {
    pub fn row(&self, cutoff_pct: u32) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.cutoff_pct == cutoff_pct)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("cutoff_pct\tcluster_count\tari_vs_prev\n");
        for r in &self.rows {
            let ari = r.ari_vs_prev.map_or("-".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(out, "{}\t{}\t{}", r.cutoff_pct, r.cluster_count, ari);
        }
        out
    }

    /// Transposed markdown table: one column per cutoff.
    pub fn to_markdown(&self, label: &str) -> String {
        let mut out = String::from("| Cutoff % |");
        for r in &self.rows {
            let _ = write!(out, " {} |", r.cutoff_pct);
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.rows.len()));
        let _ = write!(out, "\n| Number of {label} Clusters |");
        for r in &self.rows {
            let _ = write!(out, " {} |", r.cluster_count);
        }
        let _ = write!(out, "\n| {label} ARI |");
        for r in &self.rows {
            match r.ari_vs_prev {
                Some(v) => {
                    let _ = write!(out, " {v:.2} |");
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
        out
    }
}

/// Prune at every cutoff, cluster each graph, and compare consecutive
/// partitions with the adjusted Rand index.
pub fn stability_sweep(sim: &SimilarityMatrix, config: &SweepConfig) -> Result<SweepReport> {
    if config.cutoffs.is_empty() {
        return Err(Error::domain("sweep needs at least one cutoff"));
    }
    if config.cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("sweep cutoffs must be strictly increasing"));
    }
    let ranking = EdgeRanking::new(sim);
    let partitions = config
        .cutoffs
        .par_iter()
        .map(|&cutoff| {
            let graph = ranking.prune(cutoff)?;
            let louvain = LouvainConfig {
                seed: config.seed_for(cutoff),
                resolution: config.resolution,
            };
            Ok(louvain_with(&graph, &louvain))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<SweepRow> = Vec::with_capacity(partitions.len());
    for (&cutoff_pct, partition) in config.cutoffs.iter().zip(partitions) {
        let ari_vs_prev = match rows.last() {
            Some(prev) => Some(adjusted_rand_index(&prev.partition, &partition)?),
            None => None,
        };
        rows.push(SweepRow {
            cutoff_pct,
            cluster_count: partition.community_count(),
            ari_vs_prev,
            partition,
        });
    }

    let best = rows
        .iter()
        .filter_map(|r| r.ari_vs_prev)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen_cutoff = rows
        .iter()
        .find(|r| r.ari_vs_prev.is_some_and(|a| a >= best - ARI_TIE))
        .unwrap_or(&rows[0])
        .cutoff_pct;
    Ok(SweepReport {
        rows,
        chosen_cutoff,
    })
}

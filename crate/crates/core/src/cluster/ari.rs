use std::collections::HashMap;

use super::{canonicalize, Partition};
use crate::{Error, Result};

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index under the permutation model, from the pair-counting
/// contingency table. Two partitions with no chance-adjustable spread (both
/// all-singletons, or both a single block) score 1.0.
pub fn adjusted_rand_index_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "label vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (a, b) = (canonicalize(a), canonicalize(b));
    let ka = a.iter().max().map_or(0, |&m| m + 1);
    let kb = b.iter().max().map_or(0, |&m| m + 1);
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(&b) {
        *table.entry((x, y)).or_default() += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_rows: f64 = rows.iter().map(|&n| pairs(n)).sum();
    let sum_cols: f64 = cols.iter().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / total;
    let max_index = (sum_rows + sum_cols) / 2.0;
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// ARI between two partitions of the same node set. Node order may differ.
pub fn adjusted_rand_index(p: &Partition, q: &Partition) -> Result<f64> {
    if p.node_ids() == q.node_ids() {
        return adjusted_rand_index_labels(p.assignment(), q.assignment());
    }
    if p.len() != q.len() {
        return Err(Error::domain("partitions cover different node sets"));
    }
    let lookup = q.to_map();
    let aligned = p
        .node_ids()
        .iter()
        .map(|id| {
            lookup
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::domain(format!("node `{id}` missing from second partition")))
        })
        .collect::<Result<Vec<_>>>()?;
    adjusted_rand_index_labels(p.assignment(), &aligned)
}

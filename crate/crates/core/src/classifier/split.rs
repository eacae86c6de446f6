use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::Partition;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::domain(format!("unknown split `{other}`"))),
        }
    }
}

/// Which clustering a split was stratified on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StratifyBy {
    #[serde(alias = "fulltext_cluster")]
    FullText,
    #[serde(alias = "situation_cluster")]
    Situation,
}

impl StratifyBy {
    pub fn name(self) -> &'static str {
        match self {
            StratifyBy::FullText => "fulltext",
            StratifyBy::Situation => "situation",
        }
    }
}

impl fmt::Display for StratifyBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.7,
            val: 0.2,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::domain("split ratios must be non-negative"));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::domain("split ratios must sum to 1"));
        }
        Ok(())
    }

    /// Largest-remainder allocation of `n` items; every share is within one
    /// item of its exact proportion.
    pub fn allocate(&self, n: usize) -> [usize; 3] {
        let exact = [self.train, self.val, self.test].map(|r| r * n as f64);
        let mut counts = exact.map(|x| x.floor() as usize);
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut left = n - counts.iter().sum::<usize>();
        for &k in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[k] += 1;
            left -= 1;
        }
        counts
    }
}

/// Post-level split assignment, in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub stratify_by: StratifyBy,
    entries: Vec<(String, Split)>,
    index: HashMap<String, usize>,
}

impl SplitSpec {
    pub fn from_entries(stratify_by: StratifyBy, entries: Vec<(String, Split)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (id, _)) in entries.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::domain(format!("post `{id}` appears twice in split")));
            }
        }
        Ok(SplitSpec {
            stratify_by,
            entries,
            index,
        })
    }

    pub fn entries(&self) -> &[(String, Split)] {
        &self.entries
    }

    pub fn split_of(&self, post_id: &str) -> Option<Split> {
        self.index.get(post_id).map(|&i| self.entries[i].1)
    }

    pub fn posts_in(&self, split: Split) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(move |(_, s)| *s == split)
            .map(|(id, _)| id.as_str())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("post_id\tsplit\n");
        for (id, split) in &self.entries {
            out.push_str(id);
            out.push('\t');
            out.push_str(split.name());
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(stratify_by: StratifyBy, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') || line == "post_id\tsplit" {
                continue;
            }
            let (id, split) = line.split_once('\t').ok_or_else(|| Error::Table {
                path: "split".into(),
                line: idx + 1,
                message: "expected `post_id<TAB>split`".into(),
            })?;
            entries.push((id.to_string(), split.parse()?));
        }
        SplitSpec::from_entries(stratify_by, entries)
    }
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub spec: SplitSpec,
    pub warnings: Vec<String>,
}

/// Split posts 70/20/10 (by default) within each cluster stratum. Posts the
/// partition does not cover form their own stratum.
pub fn stratified_split<S: AsRef<str>>(
    post_ids: &[S],
    clusters: &Partition,
    stratify_by: StratifyBy,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitOutcome> {
    ratios.validate()?;
    let cluster_of = clusters.to_map();
    let mut strata: BTreeMap<Option<usize>, Vec<&str>> = BTreeMap::new();
    for c in 0..clusters.community_count() {
        strata.insert(Some(c), Vec::new());
    }
    for id in post_ids {
        let id = id.as_ref();
        strata
            .entry(cluster_of.get(id).copied())
            .or_default()
            .push(id);
    }

    let mut warnings = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assigned: HashMap<&str, Split> = HashMap::with_capacity(post_ids.len());
    for (stratum, mut members) in strata {
        if members.is_empty() {
            warnings.push(format!(
                "stratum {} has no posts in the corpus; nothing assigned beyond train",
                stratum.map_or("unclustered".to_string(), |c| c.to_string())
            ));
            continue;
        }
        members.shuffle(&mut rng);
        let [n_train, n_val, _] = ratios.allocate(members.len());
        for (k, id) in members.into_iter().enumerate() {
            let split = if k < n_train {
                Split::Train
            } else if k < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            if assigned.insert(id, split).is_some() {
                return Err(Error::domain(format!("duplicate post id `{id}`")));
            }
        }
    }
    let entries = post_ids
        .iter()
        .map(|id| {
            let id = id.as_ref();
            (id.to_string(), assigned[id])
        })
        .collect();
    Ok(SplitOutcome {
        spec: SplitSpec::from_entries(stratify_by, entries)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clustered(sizes: &[usize]) -> (Vec<String>, Partition) {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in sizes.iter().enumerate() {
            for k in 0..n {
                ids.push(format!("c{c}-{k}"));
                labels.push(c);
            }
        }
        let p = Partition::new(ids.clone(), &labels).unwrap();
        (ids, p)
    }

    #[test]
    fn proportions_per_stratum() {
        let (ids, p) = clustered(&[50, 30, 20]);
        let out = stratified_split(&ids, &p, StratifyBy::FullText, SplitRatios::default(), 1).unwrap();
        for (c, expected) in [(0, 35), (1, 21), (2, 14)] {
            let prefix = format!("c{c}-");
            let n = out
                .spec
                .posts_in(Split::Train)
                .filter(|id| id.starts_with(&prefix))
                .count();
            assert_eq!(n, expected);
        }
        assert_eq!(out.spec.posts_in(Split::Test).count(), 10);
    }

    #[test]
    fn allocation_edges() {
        let r = SplitRatios::default();
        assert_eq!(r.allocate(0), [0, 0, 0]);
        assert_eq!(r.allocate(1), [1, 0, 0]);
        assert_eq!(r.allocate(10), [7, 2, 1]);
        assert_eq!(r.allocate(3), [2, 1, 0]);
    }

    #[test]
    fn deterministic_and_roundtrips() {
        let (ids, p) = clustered(&[13, 7]);
        let a = stratified_split(&ids, &p, StratifyBy::Situation, SplitRatios::default(), 9).unwrap();
        let b = stratified_split(&ids, &p, StratifyBy::Situation, SplitRatios::default(), 9).unwrap();
        assert_eq!(a.spec, b.spec);
        let back = SplitSpec::parse_tsv(StratifyBy::Situation, &a.spec.to_tsv()).unwrap();
        assert_eq!(back, a.spec);
    }

    #[test]
    fn unclustered_posts_form_stratum() {
        let (mut ids, p) = clustered(&[10]);
        ids.extend((0..10).map(|k| format!("loose-{k}")));
        let out = stratified_split(&ids, &p, StratifyBy::FullText, SplitRatios::default(), 0).unwrap();
        let loose_train = out
            .spec
            .posts_in(Split::Train)
            .filter(|id| id.starts_with("loose"))
            .count();
        assert_eq!(loose_train, 7);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn empty_cluster_warns() {
        let (_, p) = clustered(&[3, 3]);
        let ids = vec!["c0-0".to_string(), "c0-1".to_string(), "c0-2".to_string()];
        let out = stratified_split(&ids, &p, StratifyBy::FullText, SplitRatios::default(), 0).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.spec.entries().len(), 3);
    }

    #[test]
    fn bad_ratios_rejected() {
        let (ids, p) = clustered(&[3]);
        let ratios = SplitRatios {
            train: 0.5,
            val: 0.2,
            test: 0.1,
        };
        assert!(stratified_split(&ids, &p, StratifyBy::FullText, ratios, 0).is_err());
    }
}

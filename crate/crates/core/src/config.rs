//! Pipeline configuration: one TOML file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{SplitRatios, StratifyBy, TrainConfig};
use crate::cluster::SweepConfig;
use crate::stats::PermutationConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub situation_embeddings: Option<PathBuf>,
    pub fulltext_embeddings: Option<PathBuf>,
    pub verdict_embeddings: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Also strip the "WIBTA" prefix when extracting situations.
    pub strip_wibta: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub cutoff_start: u32,
    pub cutoff_step: u32,
    pub cutoff_end: u32,
    /// Forced cutoffs; the sweep's persistent choice is used when absent.
    pub situation_cutoff: Option<u32>,
    pub fulltext_cutoff: Option<u32>,
    pub min_cluster_size: usize,
    pub resolution: f64,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            cutoff_start: 0,
            cutoff_step: 10,
            cutoff_end: 90,
            situation_cutoff: None,
            fulltext_cutoff: None,
            min_cluster_size: 26,
            resolution: 1.0,
            seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn cutoffs(&self) -> Result<Vec<u32>> {
        if self.cutoff_step == 0 {
            return Err(Error::Config("cluster.cutoff_step must be positive".into()));
        }
        if self.cutoff_start > self.cutoff_end || self.cutoff_end >= 100 {
            return Err(Error::Config(
                "cluster cutoffs must satisfy cutoff_start <= cutoff_end < 100".into(),
            ));
        }
        Ok((self.cutoff_start..=self.cutoff_end)
            .step_by(self.cutoff_step as usize)
            .collect())
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            cutoffs: self.cutoffs()?,
            seed: self.seed,
            resolution: self.resolution,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    /// Which clustering's split `train` and `evaluate` use.
    pub stratify: StratifyBy,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let r = SplitRatios::default();
        SplitConfig {
            train: r.train,
            val: r.val,
            test: r.test,
            seed: 0,
            stratify: StratifyBy::FullText,
        }
    }
}

impl SplitConfig {
    pub fn ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.train,
            val: self.val,
            test: self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub corpus: CorpusConfig,
    pub cluster: ClusterConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub eval: PermutationConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Applies one `dotted.key=value` override. The value is read as a TOML
/// literal, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().replace('\n', " ")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: PipelineConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().replace('\n', " ")))?;
        config.base_dir = base_dir.to_path_buf();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        PipelineConfig::from_toml_str(&text, overrides, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster.cutoffs()?;
        for c in [self.cluster.situation_cutoff, self.cluster.fulltext_cutoff].into_iter().flatten() {
            if c >= 100 {
                return Err(Error::Config(format!("forced cutoff {c} must be below 100")));
            }
        }
        if !(self.cluster.resolution > 0.0 && self.cluster.resolution.is_finite()) {
            return Err(Error::Config("cluster.resolution must be positive".into()));
        }
        let r = [self.split.train, self.split.val, self.split.test];
        if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split ratios must be non-negative and sum to 1".into()));
        }
        self.train.validate()
    }

    /// Resolves a configured path against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// A configured input path that must exist.
    pub fn input(&self, name: &str, p: &Option<PathBuf>) -> Result<PathBuf> {
        let p = p
            .as_ref()
            .ok_or_else(|| Error::Config(format!("paths.{name} is not set")))?;
        let full = self.resolve(p);
        if !full.exists() {
            return Err(Error::Config(format!("paths.{name} does not exist: {}", full.display())));
        }
        Ok(full)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.paths.output_dir)
    }

    /// Canonical serialization of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`PipelineConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

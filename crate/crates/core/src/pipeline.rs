//! Subcommands behind `conflictctl`. Each one reads the configuration,
//! writes its artifacts under `<output_dir>/<subcommand>/`, and records the
//! sha-256 of every input and output in `manifest.tsv`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::annotation::{
    agreement_report, consolidate, gold_to_tsv, label_distribution, parse_gold_tsv,
    read_annotations, Aspect, GoldLabels,
};
use crate::classifier::{
    build_examples, predict, stratified_split, train_probe, ProbeModel, Split, SplitSpec,
    StratifyBy, TrainingExample,
};
use crate::cluster::{
    build_pruned_graph, drop_small_clusters, louvain_with, stability_sweep, LouvainConfig,
    Partition,
};
use crate::config::PipelineConfig;
use crate::corpus::{
    mine_verdicts, read_corpus, situation_prefixes, MinedVerdicts, Post, Verdict, VerdictLexicon,
};
use crate::embedding::{pairwise_similarity, read_embeddings};
use crate::stats::{dyad_analysis, dyads_to_markdown, dyads_to_tsv, evaluate, DyadMember, Group};
use crate::tsv::{
    escape_field, parse_partition_tsv, partition_to_tsv, read_text, rows, with_hash_header,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Cluster,
    Agree,
    Split,
    Train,
    Evaluate,
    Analyze,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Ingest,
        Command::Cluster,
        Command::Agree,
        Command::Split,
        Command::Train,
        Command::Evaluate,
        Command::Analyze,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Cluster => "cluster",
            Command::Agree => "agree",
            Command::Split => "split",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Analyze => "analyze",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub command: Command,
    pub dir: PathBuf,
    /// Output file names, in write order.
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Stage<'a> {
    config: &'a PipelineConfig,
    command: Command,
    dir: PathBuf,
    hash: String,
    inputs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl<'a> Stage<'a> {
    fn new(config: &'a PipelineConfig, command: Command) -> Self {
        Stage {
            config,
            command,
            dir: config.output_dir().join(command.name()),
            hash: config.hash(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn display(&self, path: &Path) -> String {
        path.strip_prefix(&self.config.base_dir)
            .unwrap_or(path)
            .display()
            .to_string()
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push((self.display(path), sha256_hex(&bytes)));
        Ok(())
    }

    /// Output of an earlier subcommand; missing files name the producer.
    fn artifact(&mut self, producer: Command, name: &str) -> Result<PathBuf> {
        let path = self.config.output_dir().join(producer.name()).join(name);
        if !path.is_file() {
            return Err(Error::MissingArtifact {
                path,
                hint: format!("run `conflictctl {producer}` first"),
            });
        }
        self.input(&path)?;
        Ok(path)
    }

    fn warn(&mut self, message: String) {
        warn!("{}: {message}", self.command);
        self.warnings.push(message);
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.outputs.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let text = with_hash_header(&self.hash, body);
        self.write_bytes(name, text.as_bytes())
    }

    fn finish(mut self) -> Result<RunSummary> {
        let mut warnings = String::new();
        for w in &self.warnings {
            warnings.push_str(&escape_field(w));
            warnings.push('\n');
        }
        self.write("warnings.txt", &warnings)?;
        let mut manifest = String::from("role\tpath\tsha256\n");
        for (path, digest) in &self.inputs {
            manifest.push_str(&format!("input\t{path}\t{digest}\n"));
        }
        for (name, digest) in &self.outputs {
            manifest.push_str(&format!("output\t{name}\t{digest}\n"));
        }
        let text = with_hash_header(&self.hash, &manifest);
        let path = self.dir.join("manifest.tsv");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        info!("{}: wrote {} files to {}", self.command, self.outputs.len() + 1, self.dir.display());
        Ok(RunSummary {
            command: self.command,
            dir: self.dir,
            outputs: self
                .outputs
                .into_iter()
                .map(|(n, _)| n)
                .chain(std::iter::once("manifest.tsv".to_string()))
                .collect(),
            warnings: self.warnings,
        })
    }
}

pub fn run(command: Command, config: &PipelineConfig) -> Result<RunSummary> {
    let mut stage = Stage::new(config, command);
    match command {
        Command::Ingest => ingest(&mut stage)?,
        Command::Cluster => cluster(&mut stage)?,
        Command::Agree => agree(&mut stage)?,
        Command::Split => split(&mut stage)?,
        Command::Train => train(&mut stage)?,
        Command::Evaluate => evaluate_stage(&mut stage)?,
        Command::Analyze => analyze(&mut stage)?,
    }
    stage.finish()
}

fn lexicon(stage: &mut Stage) -> Result<VerdictLexicon> {
    match &stage.config.paths.lexicon {
        Some(_) => {
            let path = stage.config.input("lexicon", &stage.config.paths.lexicon)?;
            stage.input(&path)?;
            VerdictLexicon::from_file(&path)
        }
        None => Ok(VerdictLexicon::default()),
    }
}

struct Corpus {
    posts: Vec<Post>,
    mined: MinedVerdicts,
    lexicon: VerdictLexicon,
}

fn load_corpus(stage: &mut Stage) -> Result<Corpus> {
    let lexicon = lexicon(stage)?;
    let path = stage.config.input("corpus", &stage.config.paths.corpus)?;
    stage.input(&path)?;
    let parsed = read_corpus(&path, &situation_prefixes(stage.config.corpus.strip_wibta))?;
    for e in &parsed.errors {
        stage.warn(format!("corpus line {}: {}", e.line, e.message));
    }
    let mined = mine_verdicts(&parsed.posts, &lexicon);
    Ok(Corpus {
        posts: parsed.posts,
        mined,
        lexicon,
    })
}

fn ingest(stage: &mut Stage) -> Result<()> {
    let corpus = load_corpus(stage)?;
    let s = corpus.mined.stats;
    let mut stats = String::from("statistic\tcount\n");
    for (k, v) in [
        ("posts", s.post_count),
        ("comments", s.comment_count),
        ("verdicts", s.verdict_count),
        ("nta", s.nta_count),
        ("yta", s.yta_count),
        ("ambiguous", s.ambiguous_count),
        ("no_verdict", s.no_verdict_count),
    ] {
        stats.push_str(&format!("{k}\t{v}\n"));
    }
    stage.write("stats.tsv", &stats)?;

    let mut verdicts = String::from("verdict_id\tpost_id\tcomment_id\tverdict\tscrubbed_text\n");
    for v in &corpus.mined.records {
        verdicts.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            escape_field(&v.id()),
            escape_field(&v.post_id),
            escape_field(&v.comment_id),
            v.verdict,
            escape_field(&v.scrubbed_text)
        ));
    }
    stage.write("verdicts.tsv", &verdicts)?;

    let mut situations = String::from("post_id\tsituation\n");
    for p in &corpus.posts {
        situations.push_str(&format!("{}\t{}\n", escape_field(&p.id), escape_field(&p.situation)));
    }
    stage.write("situations.tsv", &situations)
}

fn kinds() -> [(StratifyBy, &'static str); 2] {
    [(StratifyBy::Situation, "Situation"), (StratifyBy::FullText, "Full Text")]
}

fn embeddings_path(config: &PipelineConfig, kind: StratifyBy) -> &Option<PathBuf> {
    match kind {
        StratifyBy::Situation => &config.paths.situation_embeddings,
        StratifyBy::FullText => &config.paths.fulltext_embeddings,
    }
}

fn cluster(stage: &mut Stage) -> Result<()> {
    let config = stage.config;
    let sweep_config = config.cluster.sweep()?;
    let mut summary = String::from(
        "kind\tpersistent_cutoff\tused_cutoff\tclusters\tclusters_kept\tunclustered\n",
    );
    let mut any = false;
    for (kind, label) in kinds() {
        let key = format!("{}_embeddings", kind.name());
        if embeddings_path(config, kind).is_none() {
            continue;
        }
        any = true;
        let path = config.input(&key, embeddings_path(config, kind))?;
        stage.input(&path)?;
        let sim = pairwise_similarity(&read_embeddings(&path)?)?;
        let report = stability_sweep(&sim, &sweep_config)?;
        let forced = match kind {
            StratifyBy::Situation => config.cluster.situation_cutoff,
            StratifyBy::FullText => config.cluster.fulltext_cutoff,
        };
        let used = forced.unwrap_or(report.chosen_cutoff);
        let partition = match report.row(used) {
            Some(row) => row.partition.clone(),
            None => louvain_with(
                &build_pruned_graph(&sim, used)?,
                &LouvainConfig {
                    seed: sweep_config.seed_for(used),
                    resolution: sweep_config.resolution,
                },
            ),
        };
        let (kept, removed) = drop_small_clusters(&partition, config.cluster.min_cluster_size);
        if !removed.is_empty() {
            stage.warn(format!(
                "{kind}: {} node(s) in clusters smaller than {} left unclustered",
                removed.len(),
                config.cluster.min_cluster_size
            ));
        }
        let name = kind.name();
        let mut sweep = format!("# persistent_cutoff={}\n# used_cutoff={used}\n", report.chosen_cutoff);
        sweep.push_str(&report.to_tsv());
        stage.write(&format!("sweep_{name}.tsv"), &sweep)?;
        stage.write(&format!("sweep_{name}.md"), &report.to_markdown(label))?;
        stage.write(&format!("partition_{name}.tsv"), &partition_to_tsv(&kept))?;
        let mut unclustered = String::from("node_id\n");
        for id in &removed {
            unclustered.push_str(id);
            unclustered.push('\n');
        }
        stage.write(&format!("unclustered_{name}.tsv"), &unclustered)?;
        summary.push_str(&format!(
            "{name}\t{}\t{used}\t{}\t{}\t{}\n",
            report.chosen_cutoff,
            partition.community_count(),
            kept.community_count(),
            removed.len()
        ));
    }
    if !any {
        return Err(Error::Config(
            "cluster needs paths.situation_embeddings or paths.fulltext_embeddings".into(),
        ));
    }
    stage.write("clusters.tsv", &summary)
}

fn agree(stage: &mut Stage) -> Result<()> {
    let path = stage.config.input("annotations", &stage.config.paths.annotations)?;
    stage.input(&path)?;
    let records = read_annotations(&path)?;
    let failed = records.iter().filter(|r| !r.passed_checks()).count();
    if failed > 0 {
        stage.warn(format!("{failed} record(s) failed an attention check and were dropped"));
    }
    match agreement_report(&records) {
        Ok(report) => {
            for w in &report.warnings {
                stage.warn(w.clone());
            }
            stage.write("agreement.tsv", &report.to_tsv())?;
            stage.write("agreement.md", &report.to_markdown())?;
        }
        Err(e) => stage.warn(format!("agreement skipped: {e}")),
    }
    let consolidation = consolidate(&records);
    for w in &consolidation.warnings {
        stage.warn(w.clone());
    }
    stage.write("gold.tsv", &gold_to_tsv(&consolidation.gold))?;
    match label_distribution(consolidation.gold.iter().map(|g| &g.labels)) {
        Ok(dist) => {
            stage.write("distribution.tsv", &dist.to_tsv())?;
            stage.write("distribution.md", &dist.to_markdown())?;
        }
        Err(e) => stage.warn(format!("distribution skipped: {e}")),
    }
    Ok(())
}

fn load_partition(stage: &mut Stage, kind: StratifyBy) -> Result<Partition> {
    let path = stage.artifact(Command::Cluster, &format!("partition_{}.tsv", kind.name()))?;
    parse_partition_tsv(&path, &read_text(&path)?)
}

fn split(stage: &mut Stage) -> Result<()> {
    let corpus = load_corpus(stage)?;
    let post_ids: Vec<&str> = corpus.posts.iter().map(|p| p.id.as_str()).collect();
    let mut any = false;
    for (kind, _) in kinds() {
        let name = format!("partition_{}.tsv", kind.name());
        if !stage.config.output_dir().join("cluster").join(&name).is_file() {
            continue;
        }
        any = true;
        let partition = load_partition(stage, kind)?;
        let outcome = stratified_split(
            &post_ids,
            &partition,
            kind,
            stage.config.split.ratios(),
            stage.config.split.seed,
        )?;
        for w in outcome.warnings {
            stage.warn(format!("{kind}: {w}"));
        }
        let body = format!("# stratify_by={kind}\n{}", outcome.spec.to_tsv());
        stage.write(&format!("split_{}.tsv", kind.name()), &body)?;
    }
    if !any {
        return Err(Error::MissingArtifact {
            path: stage.config.output_dir().join("cluster"),
            hint: "no partition files; run `conflictctl cluster` first".into(),
        });
    }
    Ok(())
}

fn load_split(stage: &mut Stage) -> Result<SplitSpec> {
    let kind = stage.config.split.stratify;
    let path = stage.artifact(Command::Split, &format!("split_{}.tsv", kind.name()))?;
    SplitSpec::parse_tsv(kind, &read_text(&path)?)
}

fn examples(stage: &mut Stage, corpus: &Corpus) -> Result<Vec<TrainingExample>> {
    let path = stage
        .config
        .input("verdict_embeddings", &stage.config.paths.verdict_embeddings)?;
    stage.input(&path)?;
    let embeddings = read_embeddings(&path)?;
    build_examples(&corpus.posts, &corpus.mined.records, &embeddings, &corpus.lexicon)
}

fn in_split<'e>(
    examples: &'e [TrainingExample],
    spec: &SplitSpec,
    split: Split,
) -> Vec<&'e TrainingExample> {
    examples
        .iter()
        .filter(|e| spec.split_of(&e.post_id) == Some(split))
        .collect()
}

fn train(stage: &mut Stage) -> Result<()> {
    let corpus = load_corpus(stage)?;
    let spec = load_split(stage)?;
    let examples = examples(stage, &corpus)?;
    let unassigned = examples.iter().filter(|e| spec.split_of(&e.post_id).is_none()).count();
    if unassigned > 0 {
        stage.warn(format!("{unassigned} verdict(s) belong to posts missing from the split"));
    }
    let train: Vec<TrainingExample> = in_split(&examples, &spec, Split::Train).into_iter().cloned().collect();
    let val: Vec<TrainingExample> = in_split(&examples, &spec, Split::Val).into_iter().cloned().collect();
    if val.is_empty() {
        stage.warn("validation split is empty; selecting the epoch on the training split".into());
    }
    let outcome = train_probe(&train, &val, &stage.config.train)?;
    stage.write_bytes("model.prb1", &outcome.model.to_bytes())?;
    let body = format!(
        "# stratify_by={}\n# train_examples={}\n# val_examples={}\n{}",
        spec.stratify_by,
        train.len(),
        val.len(),
        outcome.epochs_tsv()
    );
    stage.write("epochs.tsv", &body)
}

const PREDICTIONS_HEADER: &str = "verdict_id\tpost_id\tgold\tp_yta\tpred";

fn load_gold(stage: &mut Stage, required: bool) -> Result<Option<Vec<GoldLabels>>> {
    let exists = stage.config.output_dir().join("agree").join("gold.tsv").is_file();
    if !exists && !required {
        stage.warn("no gold aspect labels; run `conflictctl agree` for per-aspect groups".into());
        return Ok(None);
    }
    let path = stage.artifact(Command::Agree, "gold.tsv")?;
    Ok(Some(parse_gold_tsv(&read_text(&path)?)?))
}

fn aspect_groups(post_ids: &[&str], gold: &[GoldLabels]) -> Vec<Group> {
    let by_post: HashMap<&str, &GoldLabels> = gold.iter().map(|g| (g.post_id.as_str(), g)).collect();
    let mut groups = Vec::new();
    for aspect in Aspect::ALL {
        for value in aspect.merged_labels() {
            let members = post_ids
                .iter()
                .enumerate()
                .filter(|(_, p)| by_post.get(*p).and_then(|g| g.label(aspect)) == Some(value))
                .map(|(i, _)| i)
                .collect();
            groups.push(Group {
                key: format!("{}={}", aspect.name(), value.name()),
                members,
            });
        }
    }
    groups
}

fn evaluate_stage(stage: &mut Stage) -> Result<()> {
    let model_path = stage.artifact(Command::Train, "model.prb1")?;
    let model = ProbeModel::load(&model_path)?;
    let corpus = load_corpus(stage)?;
    let spec = load_split(stage)?;
    let examples = examples(stage, &corpus)?;
    let test = in_split(&examples, &spec, Split::Test);
    let partition = load_partition(stage, spec.stratify_by)?;
    let gold = load_gold(stage, false)?;

    let mut preds = Vec::with_capacity(test.len());
    let mut golds = Vec::with_capacity(test.len());
    let mut table = format!("# stratify_by={}\n{PREDICTIONS_HEADER}\n", spec.stratify_by);
    for e in &test {
        let p = predict(&model, &e.embedding)?;
        let pred = p >= 0.5;
        preds.push(pred);
        golds.push(e.label == 1);
        table.push_str(&format!(
            "{}\t{}\t{}\t{p:.6}\t{}\n",
            escape_field(&e.verdict_id),
            escape_field(&e.post_id),
            Verdict::from_label(e.label),
            Verdict::from_label(u8::from(pred))
        ));
    }
    stage.write("predictions.tsv", &table)?;

    let post_ids: Vec<&str> = test.iter().map(|e| e.post_id.as_str()).collect();
    let cluster_of = partition.to_map();
    let mut clusters: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for c in 0..partition.community_count() {
        clusters.insert(Some(c), Vec::new());
    }
    for (i, p) in post_ids.iter().enumerate() {
        clusters.entry(cluster_of.get(p).copied()).or_default().push(i);
    }
    let mut groups: Vec<Group> = clusters
        .into_iter()
        .map(|(c, members)| Group {
            key: c.map_or("cluster=unclustered".to_string(), |c| format!("cluster={c}")),
            members,
        })
        .collect();
    if let Some(gold) = &gold {
        groups.extend(aspect_groups(&post_ids, gold));
    }
    let evaluation = evaluate(&preds, &golds, Some(&post_ids), &groups)?;
    for w in &evaluation.warnings {
        stage.warn(w.clone());
    }
    let title = format!("Test split stratified by {} clusters", spec.stratify_by);
    stage.write("metrics.tsv", &evaluation.to_tsv())?;
    stage.write("metrics.md", &evaluation.to_markdown(&title))
}

struct Prediction {
    post_id: String,
    gold_yta: bool,
    pred_yta: bool,
}

fn parse_predictions(path: &Path, text: &str) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (line, fields) in rows(text, PREDICTIONS_HEADER) {
        let bad = |message: String| Error::Table {
            path: path.to_path_buf(),
            line,
            message,
        };
        let [_, post, gold, _, pred] = fields[..] else {
            return Err(bad("expected 5 fields".into()));
        };
        let gold: Verdict = gold.parse().map_err(|e: Error| bad(e.to_string()))?;
        let pred: Verdict = pred.parse().map_err(|e: Error| bad(e.to_string()))?;
        out.push(Prediction {
            post_id: crate::tsv::unescape_field(post),
            gold_yta: gold.is_yta(),
            pred_yta: pred.is_yta(),
        });
    }
    Ok(out)
}

fn analyze(stage: &mut Stage) -> Result<()> {
    let path = stage.artifact(Command::Evaluate, "predictions.tsv")?;
    let predictions = parse_predictions(&path, &read_text(&path)?)?;
    let gold = load_gold(stage, true)?.expect("required gold labels");
    let by_post: HashMap<&str, &GoldLabels> = gold.iter().map(|g| (g.post_id.as_str(), g)).collect();

    let mut reports = Vec::new();
    for aspect in Aspect::ALL {
        let members: Vec<DyadMember> = predictions
            .iter()
            .filter_map(|p| {
                let value = by_post.get(p.post_id.as_str())?.label(aspect)?;
                Some(DyadMember {
                    value,
                    gold_yta: p.gold_yta,
                    correct: p.gold_yta == p.pred_yta,
                })
            })
            .collect();
        if members.is_empty() {
            stage.warn(format!("{}: no evaluated verdicts with a gold value", aspect.name()));
            continue;
        }
        let report = dyad_analysis(aspect, &members, &stage.config.eval)?;
        for w in &report.warnings {
            stage.warn(w.clone());
        }
        reports.push(report);
    }
    stage.write("dyads.tsv", &dyads_to_tsv(&reports))?;
    stage.write("dyads.md", &dyads_to_markdown(&reports))?;

    let preds: Vec<bool> = predictions.iter().map(|p| p.pred_yta).collect();
    let golds: Vec<bool> = predictions.iter().map(|p| p.gold_yta).collect();
    let post_ids: Vec<&str> = predictions.iter().map(|p| p.post_id.as_str()).collect();
    let evaluation = evaluate(&preds, &golds, Some(&post_ids), &aspect_groups(&post_ids, &gold))?;
    stage.write("dyad_metrics.tsv", &evaluation.to_tsv())?;
    stage.write("dyad_metrics.md", &evaluation.to_markdown("Accuracy and F1 per aspect value"))
}

//! Six-aspect conflict annotations: label merging, annotator agreement,
//! label distributions and gold-label consolidation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::{Error, Result};

pub const ASPECT_COUNT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aspect {
    Disagreement,
    Emotion,
    Interference,
    Duration,
    Manifestation,
    NumPeople,
}

impl Aspect {
    pub const ALL: [Aspect; ASPECT_COUNT] = [
        Aspect::Disagreement,
        Aspect::Emotion,
        Aspect::Interference,
        Aspect::Duration,
        Aspect::Manifestation,
        Aspect::NumPeople,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Aspect::Disagreement => "disagreement",
            Aspect::Emotion => "emotion",
            Aspect::Interference => "interference",
            Aspect::Duration => "duration",
            Aspect::Manifestation => "manifestation",
            Aspect::NumPeople => "num_people",
        }
    }

    pub fn raw_labels(self) -> &'static [Label] {
        use Label::*;
        match self {
            Aspect::Disagreement | Aspect::Emotion => &[Mild, Strong, Intense],
            Aspect::Interference => &[None, Somewhat, Strongly],
            Aspect::Duration => &[Once, Longer],
            Aspect::Manifestation => &[Manifest, Perceived],
            Aspect::NumPeople => &[One, Multiple],
        }
    }

    /// The two merged values, in dyad order. The first value is encoded as
    /// `false` in binary vectors.
    pub fn merged_labels(self) -> [Label; 2] {
        use Label::*;
        match self {
            Aspect::Disagreement | Aspect::Emotion | Aspect::Interference => [Mild, Strong],
            Aspect::Duration => [Once, Longer],
            Aspect::Manifestation => [Perceived, Manifest],
            Aspect::NumPeople => [One, Multiple],
        }
    }

    pub fn is_binary(self) -> bool {
        self.raw_labels().len() == 2
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every label spelling used by any aspect, raw or merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Mild,
    Strong,
    Intense,
    None,
    Somewhat,
    Strongly,
    Once,
    Longer,
    Manifest,
    Perceived,
    One,
    Multiple,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Mild => "Mild",
            Label::Strong => "Strong",
            Label::Intense => "Intense",
            Label::None => "None",
            Label::Somewhat => "Somewhat",
            Label::Strongly => "Strongly",
            Label::Once => "Once",
            Label::Longer => "Longer",
            Label::Manifest => "Manifest",
            Label::Perceived => "Perceived",
            Label::One => "One",
            Label::Multiple => "Multiple",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use Label::*;
        Ok(match s {
            "Mild" => Mild,
            "Strong" => Strong,
            "Intense" => Intense,
            "None" => None,
            "Somewhat" => Somewhat,
            "Strongly" => Strongly,
            "Once" => Once,
            "Longer" => Longer,
            "Manifest" => Manifest,
            "Perceived" => Perceived,
            "One" => One,
            "Multiple" => Multiple,
            other => return Err(Error::domain(format!("unknown label `{other}`"))),
        })
    }
}

/// Collapse a label to its binary merged value. Already-merged labels map
/// to themselves.
pub fn merge_label(aspect: Aspect, label: Label) -> Result<Label> {
    use Label::*;
    let merged = match (aspect, label) {
        (Aspect::Disagreement | Aspect::Emotion, Mild) => Mild,
        (Aspect::Disagreement | Aspect::Emotion, Strong | Intense) => Strong,
        (Aspect::Interference, None | Somewhat | Mild) => Mild,
        (Aspect::Interference, Strongly | Strong) => Strong,
        (Aspect::Duration, Once | Longer)
        | (Aspect::Manifestation, Manifest | Perceived)
        | (Aspect::NumPeople, One | Multiple) => label,
        _ => {
            return Err(Error::domain(format!(
                "label {label} is not valid for aspect {aspect}"
            )))
        }
    };
    Ok(merged)
}

/// Binary encoding of a merged label: `true` for the second dyad value.
pub fn merged_bit(aspect: Aspect, merged: Label) -> bool {
    merged == aspect.merged_labels()[1]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub post_id: String,
    pub annotator_id: String,
    /// Raw labels indexed by [`Aspect::index`].
    pub labels: [Label; ASPECT_COUNT],
    pub attention_check_1_pass: bool,
    pub attention_check_2_pass: bool,
}

impl AnnotationRecord {
    pub fn passed_checks(&self) -> bool {
        self.attention_check_1_pass && self.attention_check_2_pass
    }

    pub fn label(&self, aspect: Aspect) -> Label {
        self.labels[aspect.index()]
    }

    pub fn merged(&self) -> [Label; ASPECT_COUNT] {
        let mut out = self.labels;
        for aspect in Aspect::ALL {
            // Labels are validated at construction.
            out[aspect.index()] = merge_label(aspect, self.label(aspect)).expect("validated label");
        }
        out
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    post_id: String,
    annotator_id: String,
    disagreement: String,
    emotion: String,
    interference: String,
    duration: String,
    manifestation: String,
    num_people: String,
    attn1: String,
    attn2: String,
}

fn parse_check(value: &str, line: usize) -> Result<bool> {
    match value {
        "pass" => Ok(true),
        "fail" => Ok(false),
        other => Err(Error::Annotation {
            line,
            message: format!("attention field must be pass|fail, got `{other}`"),
        }),
    }
}

/// Parse the annotation CSV. Any invalid row is an error naming its line.
pub fn parse_annotations<R: Read>(reader: R) -> Result<Vec<AnnotationRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut records = Vec::new();
    for row in rdr.deserialize::<CsvRow>() {
        let row = row?;
        // Header is line 1.
        let line = records.len() + 2;
        let raw = [
            &row.disagreement,
            &row.emotion,
            &row.interference,
            &row.duration,
            &row.manifestation,
            &row.num_people,
        ];
        let mut labels = [Label::Mild; ASPECT_COUNT];
        for (aspect, text) in Aspect::ALL.into_iter().zip(raw) {
            let label: Label = text.parse().map_err(|_| Error::Annotation {
                line,
                message: format!("unknown label `{text}` for {aspect}"),
            })?;
            if !aspect.raw_labels().contains(&label) {
                return Err(Error::Annotation {
                    line,
                    message: format!("label {label} is not valid for {aspect}"),
                });
            }
            labels[aspect.index()] = label;
        }
        if row.post_id.is_empty() || row.annotator_id.is_empty() {
            return Err(Error::Annotation {
                line,
                message: "empty post_id or annotator_id".into(),
            });
        }
        records.push(AnnotationRecord {
            post_id: row.post_id,
            annotator_id: row.annotator_id,
            labels,
            attention_check_1_pass: parse_check(&row.attn1, line)?,
            attention_check_2_pass: parse_check(&row.attn2, line)?,
        });
    }
    Ok(records)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(file)
}

/// Matthews correlation from the 2×2 confusion matrix of `a` vs `b`.
/// Returns 0 when any marginal is zero.
pub fn matthews_correlation(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "vector length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::domain("MCC needs at least one pair"));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        match (x, y) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    Ok(mcc_from_counts(tp, tn, fp, fn_))
}

pub fn mcc_from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> f64 {
    let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / denom.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspectAgreement {
    pub aspect: Aspect,
    /// Raw-label MCC; one-vs-rest macro average for three-way aspects.
    pub pre_merge: f64,
    pub post_merge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub aspects: Vec<AspectAgreement>,
    pub post_count: usize,
    pub warnings: Vec<String>,
}

impl AgreementReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("aspect\tpre_merge_mcc\tpost_merge_mcc\n");
        for a in &self.aspects {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\n",
                a.aspect, a.pre_merge, a.post_merge
            ));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Conflict Aspect | MCC |\n|---|---|\n");
        for a in &self.aspects {
            if a.aspect.is_binary() {
                out.push_str(&format!("| {} | {:.2} |\n", a.aspect, a.post_merge));
            } else {
                out.push_str(&format!(
                    "| {} | {:.2} → {:.2} |\n",
                    a.aspect, a.pre_merge, a.post_merge
                ));
            }
        }
        out
    }
}

/// Records that passed both attention checks, grouped by post id.
fn valid_by_post(records: &[AnnotationRecord]) -> BTreeMap<&str, Vec<&AnnotationRecord>> {
    let mut groups: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.passed_checks()) {
        groups.entry(r.post_id.as_str()).or_default().push(r);
    }
    groups
}

pub fn agreement_report(records: &[AnnotationRecord]) -> Result<AgreementReport> {
    let mut warnings = Vec::new();
    let mut pairs: Vec<(&AnnotationRecord, &AnnotationRecord)> = Vec::new();
    for (post, mut group) in valid_by_post(records) {
        if group.len() != 2 {
            warnings.push(format!(
                "post {post}: {} valid annotations, expected 2; excluded from agreement",
                group.len()
            ));
            continue;
        }
        group.sort_by(|a, b| a.annotator_id.cmp(&b.annotator_id));
        pairs.push((group[0], group[1]));
    }
    if pairs.is_empty() {
        return Err(Error::domain("no doubly annotated posts"));
    }

    let mut aspects = Vec::with_capacity(ASPECT_COUNT);
    for aspect in Aspect::ALL {
        let merged_a: Vec<bool> = pairs
            .iter()
            .map(|(a, _)| merged_bit(aspect, a.merged()[aspect.index()]))
            .collect();
        let merged_b: Vec<bool> = pairs
            .iter()
            .map(|(_, b)| merged_bit(aspect, b.merged()[aspect.index()]))
            .collect();
        let post_merge = matthews_correlation(&merged_a, &merged_b)?;

        let pre_merge = if aspect.is_binary() {
            post_merge
        } else {
            let mut scores = Vec::new();
            for &label in aspect.raw_labels() {
                let a: Vec<bool> = pairs.iter().map(|(a, _)| a.label(aspect) == label).collect();
                let b: Vec<bool> = pairs.iter().map(|(_, b)| b.label(aspect) == label).collect();
                if a.iter().chain(&b).any(|&x| x) {
                    scores.push(matthews_correlation(&a, &b)?);
                }
            }
            scores.iter().sum::<f64>() / scores.len() as f64
        };
        aspects.push(AspectAgreement {
            aspect,
            pre_merge,
            post_merge,
        });
    }
    Ok(AgreementReport {
        aspects,
        post_count: pairs.len(),
        warnings,
    })
}

/// Per-aspect label counts.
pub type LabelCounts = [BTreeMap<Label, usize>; ASPECT_COUNT];

pub fn raw_label_counts(records: &[AnnotationRecord]) -> LabelCounts {
    let mut counts: LabelCounts = Default::default();
    for r in records.iter().filter(|r| r.passed_checks()) {
        for aspect in Aspect::ALL {
            *counts[aspect.index()].entry(r.label(aspect)).or_default() += 1;
        }
    }
    counts
}

/// Merge raw counts label by label.
pub fn merge_counts(raw: &LabelCounts) -> Result<LabelCounts> {
    let mut merged: LabelCounts = Default::default();
    for aspect in Aspect::ALL {
        for (&label, &n) in &raw[aspect.index()] {
            *merged[aspect.index()]
                .entry(merge_label(aspect, label)?)
                .or_default() += n;
        }
    }
    Ok(merged)
}

/// Counts of merged labels; `None` entries (ties) are skipped.
pub fn merged_label_counts<'a, I>(labels: I) -> LabelCounts
where
    I: IntoIterator<Item = &'a [Option<Label>; ASPECT_COUNT]>,
{
    let mut counts: LabelCounts = Default::default();
    for set in labels {
        for aspect in Aspect::ALL {
            if let Some(label) = set[aspect.index()] {
                *counts[aspect.index()].entry(label).or_default() += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspectDistribution {
    pub aspect: Aspect,
    pub total: usize,
    /// Percentages of the two merged values, in dyad order.
    pub percent: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    pub aspects: Vec<AspectDistribution>,
}

impl LabelDistribution {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("aspect\tlabel\tpercent\tcount_total\n");
        for a in &self.aspects {
            for (label, pct) in a.aspect.merged_labels().iter().zip(a.percent) {
                out.push_str(&format!("{}\t{}\t{:.1}\t{}\n", a.aspect, label, pct, a.total));
            }
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut head = String::from("|");
        let mut values = String::from("|");
        for a in &self.aspects {
            for (label, pct) in a.aspect.merged_labels().iter().zip(a.percent) {
                head.push_str(&format!(" {} {} |", a.aspect, label));
                values.push_str(&format!(" {pct:.1} |"));
            }
        }
        let sep = format!("|{}\n", "---|".repeat(self.aspects.len() * 2));
        format!("{head}\n{sep}{values}\n")
    }
}

/// Percentages of merged labels per aspect. Aspects with no labels are
/// omitted.
pub fn label_distribution<'a, I>(labels: I) -> Result<LabelDistribution>
where
    I: IntoIterator<Item = &'a [Option<Label>; ASPECT_COUNT]>,
{
    let counts = merged_label_counts(labels);
    let mut aspects = Vec::new();
    for aspect in Aspect::ALL {
        let c = &counts[aspect.index()];
        let total: usize = c.values().sum();
        if total == 0 {
            continue;
        }
        let values = aspect.merged_labels();
        if let Some(bad) = c.keys().find(|l| !values.contains(l)) {
            return Err(Error::domain(format!("{bad} is not a merged {aspect} label")));
        }
        let pct = |l: Label| 100.0 * c.get(&l).copied().unwrap_or(0) as f64 / total as f64;
        aspects.push(AspectDistribution {
            aspect,
            total,
            percent: [pct(values[0]), pct(values[1])],
        });
    }
    if aspects.is_empty() {
        return Err(Error::domain("label distribution needs at least one label"));
    }
    Ok(LabelDistribution { aspects })
}

/// Consolidated merged labels for one post. `None` marks an exact vote tie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldLabels {
    pub post_id: String,
    pub labels: [Option<Label>; ASPECT_COUNT],
    pub annotator_count: usize,
}

impl GoldLabels {
    pub fn label(&self, aspect: Aspect) -> Option<Label> {
        self.labels[aspect.index()]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Consolidation {
    pub gold: Vec<GoldLabels>,
    pub warnings: Vec<String>,
}

/// Majority vote over merged labels per aspect. Posts whose records all
/// failed attention checks are excluded.
pub fn consolidate(records: &[AnnotationRecord]) -> Consolidation {
    let mut out = Consolidation::default();
    let valid = valid_by_post(records);
    let mut all_posts: Vec<&str> = records.iter().map(|r| r.post_id.as_str()).collect();
    all_posts.sort_unstable();
    all_posts.dedup();
    for post in all_posts {
        let Some(group) = valid.get(post) else {
            out.warnings
                .push(format!("post {post}: no record passed attention checks; excluded"));
            continue;
        };
        let mut labels = [None; ASPECT_COUNT];
        for aspect in Aspect::ALL {
            let [first, second] = aspect.merged_labels();
            let votes_second = group
                .iter()
                .filter(|r| r.merged()[aspect.index()] == second)
                .count();
            let votes_first = group.len() - votes_second;
            labels[aspect.index()] = match votes_first.cmp(&votes_second) {
                std::cmp::Ordering::Greater => Some(first),
                std::cmp::Ordering::Less => Some(second),
                std::cmp::Ordering::Equal => None,
            };
        }
        out.gold.push(GoldLabels {
            post_id: post.to_string(),
            labels,
            annotator_count: group.len(),
        });
    }
    out
}

pub fn gold_to_tsv(gold: &[GoldLabels]) -> String {
    let mut out = String::from("post_id");
    for aspect in Aspect::ALL {
        out.push('\t');
        out.push_str(aspect.name());
    }
    out.push_str("\tannotators\n");
    for g in gold {
        out.push_str(&g.post_id);
        for label in g.labels {
            out.push('\t');
            out.push_str(label.map_or("tie", Label::name));
        }
        out.push_str(&format!("\t{}\n", g.annotator_count));
    }
    out
}

/// Parse a table written by [`gold_to_tsv`].
pub fn parse_gold_tsv(text: &str) -> Result<Vec<GoldLabels>> {
    let mut gold = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') || line.starts_with("post_id\t") {
            continue;
        }
        let bad = |message: String| Error::Table {
            path: "gold labels".into(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != ASPECT_COUNT + 2 {
            return Err(bad(format!("expected {} fields", ASPECT_COUNT + 2)));
        }
        let mut labels = [None; ASPECT_COUNT];
        for aspect in Aspect::ALL {
            let field = fields[1 + aspect.index()];
            if field != "tie" {
                let label: Label = field.parse().map_err(|e: Error| bad(e.to_string()))?;
                if !aspect.merged_labels().contains(&label) {
                    return Err(bad(format!("{label} is not a merged {aspect} label")));
                }
                labels[aspect.index()] = Some(label);
            }
        }
        gold.push(GoldLabels {
            post_id: fields[0].to_string(),
            labels,
            annotator_count: fields[ASPECT_COUNT + 1]
                .parse()
                .map_err(|_| bad("bad annotator count".into()))?,
        });
    }
    Ok(gold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const HEADER: &str =
        "post_id,annotator_id,disagreement,emotion,interference,duration,manifestation,num_people,attn1,attn2\n";

    fn record(post: &str, who: &str, labels: [Label; 6], pass: bool) -> AnnotationRecord {
        AnnotationRecord {
            post_id: post.into(),
            annotator_id: who.into(),
            labels,
            attention_check_1_pass: pass,
            attention_check_2_pass: true,
        }
    }

    use Label::*;
    const BASE: [Label; 6] = [Mild, Strong, None, Once, Manifest, One];
    const OTHER: [Label; 6] = [Intense, Mild, Strongly, Longer, Perceived, Multiple];

    #[test]
    fn merging_rules() {
        assert_eq!(merge_label(Aspect::Disagreement, Intense).unwrap(), Strong);
        assert_eq!(merge_label(Aspect::Emotion, Strong).unwrap(), Strong);
        assert_eq!(merge_label(Aspect::Interference, None).unwrap(), Mild);
        assert_eq!(merge_label(Aspect::Interference, Somewhat).unwrap(), Mild);
        assert_eq!(merge_label(Aspect::Interference, Strongly).unwrap(), Strong);
        assert_eq!(merge_label(Aspect::Duration, Once).unwrap(), Once);
        assert!(merge_label(Aspect::Duration, Mild).is_err());
        assert!(merge_label(Aspect::NumPeople, Manifest).is_err());
    }

    #[test]
    fn merging_is_idempotent() {
        for aspect in Aspect::ALL {
            for &raw in aspect.raw_labels() {
                let once = merge_label(aspect, raw).unwrap();
                assert_eq!(merge_label(aspect, once).unwrap(), once);
            }
        }
    }

    #[test]
    fn mcc_landmarks() {
        let a = [true, false, true, true, false];
        let not_a: Vec<bool> = a.iter().map(|x| !x).collect();
        assert_abs_diff_eq!(matthews_correlation(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(matthews_correlation(&a, &not_a).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(matthews_correlation(&[true, true], &[true, false]).unwrap(), 0.0);
        assert!(matthews_correlation(&[true], &[true, false]).is_err());
        assert!(matthews_correlation(&[], &[]).is_err());
    }

    #[test]
    fn mcc_hand_confusion() {
        // TP=45, TN=25, FP=15, FN=15:
        // (45·25 − 15·15) / sqrt(60·60·40·40) = 900 / 2400.
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [(true, true, 45), (false, false, 25), (false, true, 15), (true, false, 15)] {
            a.extend(std::iter::repeat_n(x, n));
            b.extend(std::iter::repeat_n(y, n));
        }
        assert_abs_diff_eq!(matthews_correlation(&a, &b).unwrap(), 0.375, epsilon = 1e-12);
    }

    #[test]
    fn parse_csv() {
        let text = format!(
            "{HEADER}p1,a1,Intense,Mild,Somewhat,Once,Manifest,One,pass,pass\np1,a2,Mild,Strong,Strongly,Longer,Perceived,Multiple,pass,fail\n"
        );
        let records = parse_annotations(text.as_bytes()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].label(Aspect::Disagreement), Intense);
        assert!(records[0].passed_checks());
        assert!(!records[1].passed_checks());

        let bad = format!("{HEADER}p1,a1,Strongly,Mild,Somewhat,Once,Manifest,One,pass,pass\n");
        match parse_annotations(bad.as_bytes()) {
            Err(Error::Annotation { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let bad_attn = format!("{HEADER}p1,a1,Mild,Mild,Somewhat,Once,Manifest,One,yes,pass\n");
        assert!(parse_annotations(bad_attn.as_bytes()).is_err());
    }

    #[test]
    fn identical_annotators_agree_fully() {
        let mut records = Vec::new();
        for (i, labels) in [BASE, OTHER, BASE, OTHER, [Strong, Intense, Somewhat, Once, Perceived, One]]
            .into_iter()
            .enumerate()
        {
            records.push(record(&format!("p{i}"), "a", labels, true));
            records.push(record(&format!("p{i}"), "b", labels, true));
        }
        let report = agreement_report(&records).unwrap();
        assert_eq!(report.post_count, 5);
        for a in &report.aspects {
            assert_abs_diff_eq!(a.pre_merge, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.post_merge, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn agreement_excludes_incomplete_posts() {
        let records = vec![
            record("p1", "a", BASE, true),
            record("p1", "b", OTHER, true),
            record("p2", "a", OTHER, true),
            record("p2", "b", BASE, true),
            record("p3", "a", BASE, true),
            record("p4", "a", BASE, true),
            record("p4", "b", BASE, false),
        ];
        let report = agreement_report(&records).unwrap();
        assert_eq!(report.post_count, 2);
        assert_eq!(report.warnings.len(), 2);
        // Every merged aspect disagrees on both posts.
        for a in &report.aspects {
            assert_abs_diff_eq!(a.post_merge, -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pre_merge_macro_one_vs_rest() {
        // Disagreement raw labels: (Mild, Mild), (Strong, Intense),
        // (Intense, Intense), (Strong, Strong).
        let pairs = [(Mild, Mild), (Strong, Intense), (Intense, Intense), (Strong, Strong)];
        let mut records = Vec::new();
        for (i, (x, y)) in pairs.into_iter().enumerate() {
            let mut la = BASE;
            la[0] = x;
            let mut lb = BASE;
            lb[0] = y;
            records.push(record(&format!("p{i}"), "a", la, true));
            records.push(record(&format!("p{i}"), "b", lb, true));
        }
        let report = agreement_report(&records).unwrap();
        let d = &report.aspects[0];
        // Mild: perfect (1.0). Strong: a=[0,1,0,1], b=[0,0,0,1] → tp1 tn2 fp0 fn1
        // → 2/sqrt(1·2·2·3). Intense: a=[0,0,1,0], b=[0,1,1,0] → tp1 tn2 fp1 fn0
        // → 2/sqrt(2·1·3·2).
        let strong = 2.0 / (12.0f64).sqrt();
        assert_abs_diff_eq!(d.pre_merge, (1.0 + 2.0 * strong) / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.post_merge, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn consolidation_votes() {
        let records = vec![
            record("solo", "a", BASE, true),
            record("agree", "a", BASE, true),
            record("agree", "b", BASE, true),
            record("split", "a", BASE, true),
            record("split", "b", OTHER, true),
            record("failed", "a", BASE, false),
        ];
        let c = consolidate(&records);
        assert_eq!(c.warnings.len(), 1);
        let by_id: BTreeMap<_, _> = c.gold.iter().map(|g| (g.post_id.as_str(), g)).collect();
        assert_eq!(by_id.len(), 3);
        let merged_base: Vec<Option<Label>> = record("x", "a", BASE, true)
            .merged()
            .iter()
            .map(|&l| Some(l))
            .collect();
        assert_eq!(by_id["solo"].labels.to_vec(), merged_base);
        assert_eq!(by_id["agree"].labels.to_vec(), merged_base);
        assert!(by_id["split"].labels.iter().all(Option::is_none));
    }

    #[test]
    fn two_voter_outcomes() {
        // All four vote outcomes for two voters on a binary aspect.
        for (x, y, expected) in [
            (Mild, Mild, Some(Mild)),
            (Strong, Strong, Some(Strong)),
            (Mild, Strong, Option::None),
            (Strong, Mild, Option::None),
        ] {
            let mut la = BASE;
            la[0] = x;
            let mut lb = BASE;
            lb[0] = y;
            let c = consolidate(&[record("p", "a", la, true), record("p", "b", lb, true)]);
            assert_eq!(c.gold[0].label(Aspect::Disagreement), expected);
        }
    }

    #[test]
    fn distribution_and_gold_tsv() {
        let single = [[Some(Mild), Some(Strong), Some(Mild), Some(Once), Some(Manifest), Some(One)]];
        let d = label_distribution(single.iter()).unwrap();
        assert_eq!(d.aspects[0].percent, [100.0, 0.0]);
        assert_eq!(d.aspects[4].percent, [0.0, 100.0]);

        let balanced = [
            [Some(Mild), Some(Mild), Some(Mild), Some(Once), Some(Perceived), Some(One)],
            [Some(Strong), Some(Strong), Some(Strong), Some(Longer), Some(Manifest), Some(Multiple)],
        ];
        let d = label_distribution(balanced.iter()).unwrap();
        assert!(d.aspects.iter().all(|a| a.percent == [50.0, 50.0]));
        assert!(label_distribution(std::iter::empty()).is_err());

        let gold = vec![GoldLabels {
            post_id: "p1".into(),
            labels: [Some(Mild), Option::None, Some(Strong), Some(Once), Some(Manifest), Some(One)],
            annotator_count: 2,
        }];
        assert_eq!(parse_gold_tsv(&gold_to_tsv(&gold)).unwrap(), gold);
    }

    fn arb_record() -> impl Strategy<Value = AnnotationRecord> {
        let pick = |aspect: Aspect| prop::sample::select(aspect.raw_labels().to_vec());
        (
            pick(Aspect::Disagreement),
            pick(Aspect::Emotion),
            pick(Aspect::Interference),
            pick(Aspect::Duration),
            pick(Aspect::Manifestation),
            pick(Aspect::NumPeople),
            any::<bool>(),
            0u8..20,
        )
            .prop_map(|(a, b, c, d, e, f, pass, post)| {
                record(&format!("p{post}"), "x", [a, b, c, d, e, f], pass)
            })
    }

    proptest! {
        #[test]
        fn mcc_symmetry_and_flip(pairs in prop::collection::vec(any::<(bool, bool)>(), 1..40)) {
            let a: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let ab = matthews_correlation(&a, &b).unwrap();
            prop_assert!((ab - matthews_correlation(&b, &a).unwrap()).abs() < 1e-12);
            let fa: Vec<bool> = a.iter().map(|x| !x).collect();
            let fb: Vec<bool> = b.iter().map(|x| !x).collect();
            prop_assert!((ab - matthews_correlation(&fa, &fb).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }

        #[test]
        fn merging_commutes_with_counting(records in prop::collection::vec(arb_record(), 0..30)) {
            let merged: Vec<[Option<Label>; 6]> = records
                .iter()
                .filter(|r| r.passed_checks())
                .map(|r| r.merged().map(Some))
                .collect();
            let via_raw = merge_counts(&raw_label_counts(&records)).unwrap();
            prop_assert_eq!(via_raw, merged_label_counts(merged.iter()));
        }
    }
}

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Binary confusion counts with YTA as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

impl ConfusionCounts {
    /// Counts over aligned prediction/gold slices. Extra elements of the
    /// longer slice are ignored.
    pub fn from_labels(preds: &[bool], golds: &[bool]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&p, &g) in preds.iter().zip(golds) {
            c.add(p, g);
        }
        c
    }

    pub fn add(&mut self, pred: bool, gold: bool) {
        match (pred, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    /// F1 of the YTA class.
    pub fn positive_f1(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }

    /// F1 of the NTA class.
    pub fn negative_f1(&self) -> f64 {
        f1(self.tn, self.fn_, self.fp)
    }

    /// Unweighted mean of the two per-class F1 scores. A class with no
    /// support and no predictions contributes 0.
    pub fn macro_f1(&self) -> f64 {
        (self.positive_f1() + self.negative_f1()) / 2.0
    }

    /// F1 from pooled per-class counts. With one label per example this is
    /// the accuracy.
    pub fn micro_f1(&self) -> f64 {
        let tp = self.tp + self.tn;
        let errors = self.fp + self.fn_;
        f1(tp, errors, errors)
    }
}

/// Macro F1 over the labels that occur in a set, as scikit-learn computes it
/// with the default label inference.
fn present_label_macro_f1(c: &ConfusionCounts) -> f64 {
    let mut scores = Vec::with_capacity(2);
    if c.tp + c.fp + c.fn_ > 0 {
        scores.push(c.positive_f1());
    }
    if c.tn + c.fp + c.fn_ > 0 {
        scores.push(c.negative_f1());
    }
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Per-post macro F1 averaged over posts.
pub fn post_macro_f1(preds: &[bool], golds: &[bool], post_ids: &[&str]) -> f64 {
    let mut per_post: BTreeMap<&str, ConfusionCounts> = BTreeMap::new();
    for ((&p, &g), &post) in preds.iter().zip(golds).zip(post_ids) {
        per_post.entry(post).or_default().add(p, g);
    }
    if per_post.is_empty() {
        return 0.0;
    }
    per_post.values().map(present_label_macro_f1).sum::<f64>() / per_post.len() as f64
}

/// A named subset of evaluated examples, by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub key: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub group: String,
    pub n: u64,
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub positive_f1: f64,
    /// Macro F1 computed per post and averaged over posts.
    pub post_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub reports: Vec<MetricsReport>,
    pub warnings: Vec<String>,
}

fn report(group: &str, preds: &[bool], golds: &[bool], posts: Option<&[&str]>) -> MetricsReport {
    let counts = ConfusionCounts::from_labels(preds, golds);
    MetricsReport {
        group: group.to_string(),
        n: counts.total(),
        counts,
        accuracy: counts.accuracy(),
        micro_f1: counts.micro_f1(),
        macro_f1: counts.macro_f1(),
        positive_f1: counts.positive_f1(),
        post_macro_f1: posts.map(|p| post_macro_f1(preds, golds, p)),
    }
}

/// Metrics for all examples (group `All`) followed by each non-empty group.
/// `post_ids`, when given, enables the per-post macro F1 column.
pub fn evaluate(
    preds: &[bool],
    golds: &[bool],
    post_ids: Option<&[&str]>,
    groups: &[Group],
) -> Result<Evaluation> {
    if preds.len() != golds.len() {
        return Err(Error::domain(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    if let Some(ids) = post_ids {
        if ids.len() != preds.len() {
            return Err(Error::domain("post id list does not match predictions"));
        }
    }
    let mut out = Evaluation::default();
    if preds.is_empty() {
        out.warnings.push("no examples to evaluate".into());
        return Ok(out);
    }
    out.reports.push(report("All", preds, golds, post_ids));
    for g in groups {
        if g.members.is_empty() {
            out.warnings.push(format!("group `{}` is empty; omitted", g.key));
            continue;
        }
        if let Some(&bad) = g.members.iter().find(|&&i| i >= preds.len()) {
            return Err(Error::domain(format!("group `{}` references example {bad}", g.key)));
        }
        let p: Vec<bool> = g.members.iter().map(|&i| preds[i]).collect();
        let y: Vec<bool> = g.members.iter().map(|&i| golds[i]).collect();
        let ids: Option<Vec<&str>> = post_ids.map(|ids| g.members.iter().map(|&i| ids[i]).collect());
        out.reports.push(report(&g.key, &p, &y, ids.as_deref()));
    }
    Ok(out)
}

pub fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), pct)
}

impl Evaluation {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "group\tn\tacc\tmicro_f1\tmacro_f1\tyta_f1\tpost_macro_f1\ttp\tfp\tfn\ttn\n",
        );
        for r in &self.reports {
            let c = r.counts;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.group,
                r.n,
                pct(r.accuracy),
                pct(r.micro_f1),
                pct(r.macro_f1),
                pct(r.positive_f1),
                opt_pct(r.post_macro_f1),
                c.tp,
                c.fp,
                c.fn_,
                c.tn
            ));
        }
        out
    }

    pub fn to_markdown(&self, title: &str) -> String {
        let rows: Vec<Vec<String>> = self
            .reports
            .iter()
            .map(|r| {
                vec![
                    r.group.clone(),
                    r.n.to_string(),
                    pct(r.accuracy),
                    pct(r.micro_f1),
                    pct(r.macro_f1),
                    pct(r.positive_f1),
                    opt_pct(r.post_macro_f1),
                ]
            })
            .collect();
        let mut out = format!("### {title}\n\n");
        out.push_str(&markdown_table(
            &["Group", "N", "Acc", "Micro F1", "Macro F1", "YTA F1", "Post macro F1"],
            &rows,
        ));
        out
    }
}

/// Column-aligned markdown table.
pub fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::from("|");
        for (cell, &w) in cells.iter().zip(&widths) {
            s.push_str(&format!(" {cell:<w$} |"));
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    out.push('|');
    for &w in &widths {
        out.push_str(&format!("{}|", "-".repeat(w + 2)));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

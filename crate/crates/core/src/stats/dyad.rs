use super::fisher::{fisher_exact, ContingencyTable2x2, FisherResult};
use super::metrics::{markdown_table, pct};
use super::permutation::{permutation_test, PermutationConfig, PermutationResult};
use crate::annotation::{Aspect, Label};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerdictCounts {
    pub yta: u64,
    pub nta: u64,
}

impl VerdictCounts {
    /// `#YTA / #NTA`, undefined without NTA verdicts.
    pub fn ratio(&self) -> Option<f64> {
        (self.nta > 0).then(|| self.yta as f64 / self.nta as f64)
    }
}

/// `|r1 − r2| × 100` for the YTA/NTA ratios of two groups; `None` when either
/// ratio is undefined.
pub fn verdict_ratio_difference(g1: VerdictCounts, g2: VerdictCounts) -> Option<f64> {
    Some((g1.ratio()? - g2.ratio()?).abs() * 100.0)
}

/// One verdict in a dyad comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadMember {
    /// Merged aspect value of the verdict's post.
    pub value: Label,
    pub gold_yta: bool,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadReport {
    pub aspect: Aspect,
    pub values: [Label; 2],
    pub n: [usize; 2],
    pub accuracy: [Option<f64>; 2],
    pub verdicts: [VerdictCounts; 2],
    pub ratio_diff_pct: Option<f64>,
    pub fisher: Option<FisherResult>,
    /// Tests accuracy of `values[easier]` > accuracy of the other value.
    pub permutation: Option<PermutationResult>,
    pub easier: Option<usize>,
    pub warnings: Vec<String>,
}

/// Classifier difficulty and verdict-ratio comparison between the two merged
/// values of one aspect.
pub fn dyad_analysis(
    aspect: Aspect,
    members: &[DyadMember],
    permutation: &PermutationConfig,
) -> Result<DyadReport> {
    let values = aspect.merged_labels();
    let mut correct: [Vec<bool>; 2] = [Vec::new(), Vec::new()];
    let mut verdicts = [VerdictCounts::default(); 2];
    for m in members {
        let side = values.iter().position(|&v| v == m.value).ok_or_else(|| {
            Error::domain(format!("{} is not a merged value of {}", m.value.name(), aspect.name()))
        })?;
        correct[side].push(m.correct);
        if m.gold_yta {
            verdicts[side].yta += 1;
        } else {
            verdicts[side].nta += 1;
        }
    }
    let mut warnings = Vec::new();
    let accuracy = [0, 1].map(|s| {
        let c = &correct[s];
        (!c.is_empty()).then(|| c.iter().filter(|&&x| x).count() as f64 / c.len() as f64)
    });

    let (easier, permutation) = match accuracy {
        [Some(a0), Some(a1)] => {
            let e = usize::from(a1 > a0);
            let r = permutation_test(&correct[e], &correct[1 - e], permutation)?;
            (Some(e), Some(r))
        }
        _ => {
            warnings.push(format!(
                "{}: a value has no verdicts; permutation test skipped",
                aspect.name()
            ));
            (None, None)
        }
    };

    let table = ContingencyTable2x2::new(verdicts[0].nta, verdicts[1].nta, verdicts[0].yta, verdicts[1].yta);
    let fisher = if table.total() == 0 {
        None
    } else {
        let f = fisher_exact(&table)?;
        if f.degenerate {
            warnings.push(format!("{}: degenerate contingency margins; Fisher p set to 1", aspect.name()));
        }
        Some(f)
    };
    let ratio_diff_pct = verdict_ratio_difference(verdicts[0], verdicts[1]);
    if ratio_diff_pct.is_none() {
        warnings.push(format!("{}: a value has no NTA verdicts; ratio undefined", aspect.name()));
    }
    Ok(DyadReport {
        aspect,
        values,
        n: [correct[0].len(), correct[1].len()],
        accuracy,
        verdicts,
        ratio_diff_pct,
        fisher,
        permutation,
        easier,
        warnings,
    })
}

fn p_cell(p: Option<f64>) -> String {
    p.map_or_else(|| "-".into(), |p| format!("{p:.4}"))
}

fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map_or_else(|| "undefined".into(), f)
}

pub fn dyads_to_tsv(reports: &[DyadReport]) -> String {
    let mut out = String::from(
        "aspect\tvalue_1\tvalue_2\tn_1\tn_2\tacc_1\tacc_2\tpermutation_p\tyta_1\tnta_1\tyta_2\tnta_2\tratio_1\tratio_2\tratio_diff_pct\tfisher_p\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.aspect.name(),
            r.values[0].name(),
            r.values[1].name(),
            r.n[0],
            r.n[1],
            opt(r.accuracy[0], pct),
            opt(r.accuracy[1], pct),
            p_cell(r.permutation.map(|p| p.p_value)),
            r.verdicts[0].yta,
            r.verdicts[0].nta,
            r.verdicts[1].yta,
            r.verdicts[1].nta,
            opt(r.verdicts[0].ratio(), |x| format!("{x:.4}")),
            opt(r.verdicts[1].ratio(), |x| format!("{x:.4}")),
            opt(r.ratio_diff_pct, |x| format!("{x:.1}")),
            p_cell(r.fisher.map(|f| f.p_value)),
        ));
    }
    out
}

pub fn dyads_to_markdown(reports: &[DyadReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                format!("{}: {} vs {}", r.aspect.name(), r.values[0].name(), r.values[1].name()),
                format!("{} / {}", opt(r.accuracy[0], pct), opt(r.accuracy[1], pct)),
                p_cell(r.permutation.map(|p| p.p_value)),
                opt(r.ratio_diff_pct, |x| format!("{x:.1}%")),
                p_cell(r.fisher.map(|f| f.p_value)),
            ]
        })
        .collect();
    markdown_table(
        &["Dyad", "Acc", "Permutation p", "YTA/NTA diff", "Fisher p"],
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ratio_differences() {
        let g = |yta, nta| VerdictCounts { yta, nta };
        assert_abs_diff_eq!(verdict_ratio_difference(g(10, 20), g(3, 30)).unwrap(), 40.0, epsilon = 1e-12);
        assert_eq!(verdict_ratio_difference(g(4, 8), g(4, 8)), Some(0.0));
        assert_abs_diff_eq!(verdict_ratio_difference(g(50, 100), g(39, 100)).unwrap(), 11.0, epsilon = 1e-9);
        assert_eq!(verdict_ratio_difference(g(1, 0), g(1, 1)), None);
    }

    #[test]
    fn dyad_report() {
        let mut members = Vec::new();
        for k in 0..6 {
            members.push(DyadMember { value: Label::Mild, gold_yta: k < 3, correct: k % 3 != 0 });
            members.push(DyadMember { value: Label::Strong, gold_yta: k < 2, correct: true });
        }
        let r = dyad_analysis(Aspect::Disagreement, &members, &PermutationConfig::default()).unwrap();
        assert_eq!(r.n, [6, 6]);
        assert_eq!(r.easier, Some(1));
        assert_eq!(r.verdicts[0], VerdictCounts { yta: 3, nta: 3 });
        assert_abs_diff_eq!(r.ratio_diff_pct.unwrap(), 50.0, epsilon = 1e-12);
        let p = r.permutation.unwrap();
        assert!(p.exact && p.observed_diff > 0.0);
        assert!(r.fisher.unwrap().p_value <= 1.0);
        assert_eq!(dyads_to_tsv(&[r]).lines().count(), 2);
    }

    #[test]
    fn one_sided_dyad_and_bad_value() {
        let members = [DyadMember { value: Label::Once, gold_yta: true, correct: true }];
        let r = dyad_analysis(Aspect::Duration, &members, &PermutationConfig::default()).unwrap();
        assert!(r.permutation.is_none());
        assert!(r.ratio_diff_pct.is_none());
        assert!(r.fisher.unwrap().degenerate);
        let bad = [DyadMember { value: Label::Intense, gold_yta: true, correct: true }];
        assert!(dyad_analysis(Aspect::Emotion, &bad, &PermutationConfig::default()).is_err());
    }
}

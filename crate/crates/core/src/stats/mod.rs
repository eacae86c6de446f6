//! Evaluation metrics and significance tests.

mod dyad;
mod fisher;
mod metrics;
mod permutation;

pub use dyad::{
    dyad_analysis, dyads_to_markdown, dyads_to_tsv, verdict_ratio_difference, DyadMember,
    DyadReport, VerdictCounts,
};
pub use fisher::{
    fisher_exact, hypergeometric_log_tables, ContingencyTable2x2, FisherResult, FISHER_SLACK,
};
pub use metrics::{
    evaluate, markdown_table, pct, post_macro_f1, ConfusionCounts, Evaluation, Group,
    MetricsReport,
};
pub use permutation::{
    binomial, permutation_test, PermutationConfig, PermutationMode, PermutationResult,
    EXACT_LIMIT,
};

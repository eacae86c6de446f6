use crate::{Error, Result};

/// Relative tolerance when comparing table probabilities to the observed one.
pub const FISHER_SLACK: f64 = 1e-12;

/// `[[a, b], [c, d]]`: rows are gold NTA / YTA, columns the two values of an
/// aspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable2x2 {
    pub counts: [[u64; 2]; 2],
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        ContingencyTable2x2 {
            counts: [[a, b], [c, d]],
        }
    }

    pub fn row_sums(&self) -> [u64; 2] {
        self.counts.map(|r| r[0] + r[1])
    }

    pub fn col_sums(&self) -> [u64; 2] {
        [
            self.counts[0][0] + self.counts[1][0],
            self.counts[0][1] + self.counts[1][1],
        ]
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherResult {
    pub p_value: f64,
    pub ln_p: f64,
    /// A row or column is empty; the test carries no information.
    pub degenerate: bool,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Natural-log probabilities of every table sharing `t`'s margins, indexed by
/// the top-left cell starting at `lo`. Returns `(lo, log_probabilities)`.
pub fn hypergeometric_log_tables(t: &ContingencyTable2x2) -> (u64, Vec<f64>) {
    let [r1, r2] = t.row_sums();
    let [c1, _] = t.col_sums();
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let n = t.total();
    let mode = (((r1 + 1) as u128 * (c1 + 1) as u128) / (n + 2) as u128) as u64;
    let mode = mode.clamp(lo, hi);
    let mut lw = vec![0.0; (hi - lo + 1) as usize];
    for x in mode..hi {
        let ratio = ((r1 - x) as f64 * (c1 - x) as f64) / ((x + 1) as f64 * (r2 + x + 1 - c1) as f64);
        lw[(x + 1 - lo) as usize] = lw[(x - lo) as usize] + ratio.ln();
    }
    for x in (lo + 1..=mode).rev() {
        let ratio = (x as f64 * (r2 + x - c1) as f64) / ((r1 - x + 1) as f64 * (c1 - x + 1) as f64);
        lw[(x - 1 - lo) as usize] = lw[(x - lo) as usize] + ratio.ln();
    }
    let norm = log_sum_exp(lw.iter().copied());
    lw.iter_mut().for_each(|v| *v -= norm);
    (lo, lw)
}

/// Two-sided Fisher exact test: the total probability of all same-margin
/// tables no more likely than the observed one. Values too small for an f64
/// are reported as the smallest positive normal value; `ln_p` keeps the
/// exact magnitude.
pub fn fisher_exact(t: &ContingencyTable2x2) -> Result<FisherResult> {
    if t.total() == 0 {
        return Err(Error::domain("contingency table is all zeros"));
    }
    if t.row_sums().contains(&0) || t.col_sums().contains(&0) {
        return Ok(FisherResult {
            p_value: 1.0,
            ln_p: 0.0,
            degenerate: true,
        });
    }
    let (lo, lw) = hypergeometric_log_tables(t);
    let observed = lw[(t.counts[0][0] - lo) as usize];
    let limit = observed + FISHER_SLACK.ln_1p();
    let ln_p = log_sum_exp(lw.iter().copied().filter(|&v| v <= limit)).min(0.0);
    Ok(FisherResult {
        p_value: ln_p.exp().max(f64::MIN_POSITIVE),
        ln_p,
        degenerate: false,
    })
}

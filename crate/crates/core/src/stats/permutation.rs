use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exact enumeration is used when the number of distinct assignments is at
/// most this.
pub const EXACT_LIMIT: u128 = 200_000;
const CHUNK: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMode {
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PermutationConfig {
    pub resamples: u64,
    pub seed: u64,
    pub mode: PermutationMode,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            resamples: 100_000,
            seed: 0,
            mode: PermutationMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationResult {
    pub p_value: f64,
    /// `mean(a) − mean(b)`.
    pub observed_diff: f64,
    pub exact: bool,
    /// Assignments enumerated (exact) or resamples drawn (Monte-Carlo).
    pub draws: u128,
    /// Assignments or resamples with a difference at least the observed one.
    pub extreme: u128,
}

/// `C(n, k)`, or `None` on overflow or when it exceeds `cap`.
pub fn binomial(n: u64, k: u64, cap: Option<u128>) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
        if cap.is_some_and(|cap| c > cap) {
            return None;
        }
    }
    Some(c)
}

/// One-sided unpaired permutation test of `mean(a) > mean(b)` on 0/1
/// outcomes. Ties with the observed difference count as extreme.
pub fn permutation_test(a: &[bool], b: &[bool], config: &PermutationConfig) -> Result<PermutationResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("permutation test needs two non-empty groups"));
    }
    let n_a = a.len() as u64;
    let n_b = b.len() as u64;
    let n = n_a + n_b;
    let k_obs = a.iter().filter(|&&x| x).count() as u64;
    let ones = k_obs + b.iter().filter(|&&x| x).count() as u64;
    let observed_diff = k_obs as f64 / n_a as f64 - (ones - k_obs) as f64 / n_b as f64;

    let exact = match config.mode {
        PermutationMode::Exact => true,
        PermutationMode::MonteCarlo => false,
        PermutationMode::Auto => binomial(n, n_a, Some(EXACT_LIMIT)).is_some(),
    };
    if exact {
        // The difference is increasing in the number of ones drawn into a,
        // so the extreme set is every assignment with at least k_obs ones.
        let overflow = || Error::domain("too many assignments for exact enumeration");
        let total = binomial(n, n_a, None).ok_or_else(overflow)?;
        let mut extreme: u128 = 0;
        for k in k_obs..=ones.min(n_a) {
            let ways = binomial(ones, k, None)
                .and_then(|x| binomial(n - ones, n_a - k, None).and_then(|y| x.checked_mul(y)))
                .ok_or_else(overflow)?;
            extreme += ways;
        }
        return Ok(PermutationResult {
            p_value: extreme as f64 / total as f64,
            observed_diff,
            exact: true,
            draws: total,
            extreme,
        });
    }

    if config.resamples == 0 {
        return Err(Error::domain("Monte-Carlo permutation test needs resamples > 0"));
    }
    let mut pooled: Vec<bool> = a.iter().chain(b).copied().collect();
    pooled.sort_unstable();
    // Draw the smaller group; its complement is the other one.
    let draw_a = n_a <= n_b;
    let draw = if draw_a { n_a } else { n_b } as usize;
    let chunks = config.resamples.div_ceil(CHUNK);
    let extreme: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(chunk);
            let mut pool = pooled.clone();
            let todo = CHUNK.min(config.resamples - chunk * CHUNK);
            let mut hits = 0u64;
            for _ in 0..todo {
                let (drawn, _) = pool.partial_shuffle(&mut rng, draw);
                let k = drawn.iter().filter(|&&x| x).count() as u64;
                let k_a = if draw_a { k } else { ones - k };
                hits += u64::from(k_a >= k_obs);
            }
            hits
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(PermutationResult {
        p_value: (1 + extreme) as f64 / (1 + config.resamples) as f64,
        observed_diff,
        exact: false,
        draws: config.resamples as u128,
        extreme: extreme as u128,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact() -> PermutationConfig {
        PermutationConfig {
            mode: PermutationMode::Exact,
            ..PermutationConfig::default()
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(20, 10, None), Some(184_756));
        assert_eq!(binomial(5, 7, None), Some(0));
        assert_eq!(binomial(30, 15, Some(EXACT_LIMIT)), None);
        assert_eq!(binomial(0, 0, None), Some(1));
    }

    #[test]
    fn separated_groups_hit_minimum() {
        let r = permutation_test(&[true; 10], &[false; 10], &PermutationConfig::default()).unwrap();
        assert!(r.exact);
        assert_eq!(r.extreme, 1);
        assert_eq!(r.draws, 184_756);
        assert_eq!(r.p_value, 1.0 / 184_756.0);
        assert_eq!(r.observed_diff, 1.0);
    }

    #[test]
    fn identical_groups() {
        let a = [true, false, true, true, false];
        let r = permutation_test(&a, &a, &exact()).unwrap();
        assert!(r.p_value >= 0.5);
        let mc = PermutationConfig {
            mode: PermutationMode::MonteCarlo,
            resamples: 5_000,
            seed: 3,
        };
        assert!(permutation_test(&a, &a, &mc).unwrap().p_value >= 0.5);
    }

    #[test]
    fn exact_ignores_seed() {
        let a = [true, true, false, true];
        let b = [false, true, false];
        let r1 = permutation_test(&a, &b, &PermutationConfig { seed: 1, ..exact() }).unwrap();
        let r2 = permutation_test(&a, &b, &PermutationConfig { seed: 2, ..exact() }).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = [true, true, false, true, true, true, false];
        let b = [false, true, false, false, true];
        let cfg = PermutationConfig {
            mode: PermutationMode::MonteCarlo,
            resamples: 25_000,
            seed: 9,
        };
        let r1 = permutation_test(&a, &b, &cfg).unwrap();
        let r2 = permutation_test(&b, &a, &cfg).unwrap();
        assert_eq!(r1, permutation_test(&a, &b, &cfg).unwrap());
        assert!(r1.p_value < r2.p_value);
    }

    #[test]
    fn empty_group_rejected() {
        assert!(permutation_test(&[], &[true], &PermutationConfig::default()).is_err());
    }
}

//! Goodness-of-fit helpers for checking samples against a distribution.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against probabilities. Cells with
/// zero expected probability are skipped (and any count in them gives `p = 0`).
pub fn chi_square_test(counts: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0usize;
    let mut impossible = false;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            impossible |= c > 0;
            continue;
        }
        let expected = p * total as f64;
        statistic += (c as f64 - expected).powi(2) / expected;
        cells += 1;
    }
    let dof = cells.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .expect("positive degrees of freedom")
            .sf(statistic)
    };
    ChiSquareTest {
        statistic,
        degrees_of_freedom: dof,
        p_value,
    }
}

/// Total-variation distance between empirical frequencies and `probs`.
pub fn total_variation(counts: &[u64], probs: &[f64]) -> f64 {
    let total = counts.iter().sum::<u64>().max(1) as f64;
    0.5 * counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (c as f64 / total - p).abs())
        .sum::<f64>()
}

pub fn histogram(values: impl IntoIterator<Item = usize>, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for v in values {
        counts[v] += 1;
    }
    counts
}

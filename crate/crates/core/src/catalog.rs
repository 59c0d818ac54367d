//! Ready-made chains and representations used by the bundled examples.

use crate::chain::{TransitionKernel, Truncation};
use crate::rds::{explicit_rds, RandomMapDistribution, RdsRepresentation};

/// Exponent of the heavy-tailed return law `ρ(n) ∝ n^(-5/2)`.
pub const HEAVY_TAIL_EXPONENT: f64 = 2.5;

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Four states `a, b, c, d` on a clockwise cycle; each state stays put or
/// moves one step clockwise with probability ½.
pub fn four_state_kernel() -> TransitionKernel {
    TransitionKernel::from_rows(
        labels(&["a", "b", "c", "d"]),
        (0..4).map(|x| vec![(x, 0.5), ((x + 1) % 4, 0.5)]).collect(),
    )
    .expect("valid kernel")
}

/// The two maps that split the four-state cycle into its diagonals:
/// `f₁ = (a→b, b→b, c→d, d→d)` and `f₂ = (a→a, b→c, c→c, d→a)`, each with
/// probability ½.
pub fn diagonal_maps() -> RandomMapDistribution {
    RandomMapDistribution::new(vec![vec![1, 1, 3, 3], vec![0, 2, 2, 0]], vec![0.5, 0.5])
        .expect("valid map family")
}

pub fn four_state_diagonal_rds() -> RdsRepresentation {
    explicit_rds(diagonal_maps(), four_state_kernel()).expect("maps represent the cycle")
}

pub fn four_state_independent_rds() -> RdsRepresentation {
    RdsRepresentation::independent(four_state_kernel())
}

/// Two states, every transition probability ½.
pub fn two_state_half_kernel() -> TransitionKernel {
    TransitionKernel::from_rows(
        labels(&["a", "b"]),
        vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]],
    )
    .expect("valid kernel")
}

/// Representation of the two-state ½-chain in which the pair `(a, b)`
/// coalesces with probability exactly `epsilon` per step: identity and swap
/// with probability `(1−ε)/2` each, the two constant maps with `ε/2` each.
pub fn epsilon_rds(epsilon: f64) -> RdsRepresentation {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    let keep = (1.0 - epsilon) / 2.0;
    let merge = epsilon / 2.0;
    let maps = RandomMapDistribution::new(
        vec![vec![0, 1], vec![1, 0], vec![0, 0], vec![1, 1]],
        vec![keep, keep, merge, merge],
    )
    .expect("valid map family");
    explicit_rds(maps, two_state_half_kernel()).expect("maps represent the chain")
}

/// Deterministic cycle `s0 → s1 → … → s{k−1} → s0`.
pub fn deterministic_cycle(k: usize) -> TransitionKernel {
    assert!(k >= 1);
    TransitionKernel::from_rows(
        (0..k).map(|i| format!("s{i}")).collect(),
        (0..k).map(|x| vec![((x + 1) % k, 1.0)]).collect(),
    )
    .expect("valid kernel")
}

/// Reflected random walk on `{0, …, level}` with up-probability ¼.
///
/// The step above `level` is folded into a self-loop, so the boundary row
/// carries ¼ of redirected mass.
pub fn truncated_random_walk(level: usize) -> TransitionKernel {
    assert!(level >= 1);
    let rows = (0..=level)
        .map(|x| {
            let down = x.saturating_sub(1);
            let up = (x + 1).min(level);
            if down == up {
                vec![(down, 1.0)]
            } else {
                vec![(down, 0.75), (up, 0.25)]
            }
        })
        .collect();
    TransitionKernel::from_rows((0..=level).map(|x| x.to_string()).collect(), rows)
        .expect("valid kernel")
        .with_truncation(Truncation {
            level,
            redirected_mass: 0.25,
        })
}

/// All points move up together (probability ¼) or down together (¾),
/// clamped to `{0, …, level}`.
pub fn truncated_walk_shift_rds(level: usize) -> RdsRepresentation {
    let up = (0..=level).map(|x| (x + 1).min(level)).collect();
    let down = (0..=level).map(|x| x.saturating_sub(1)).collect();
    let maps = RandomMapDistribution::new(vec![up, down], vec![0.25, 0.75]).expect("valid family");
    explicit_rds(maps, truncated_random_walk(level)).expect("maps represent the walk")
}

/// `Σ_{m ≥ n} m^(-s)` via direct summation plus an Euler–Maclaurin tail.
pub(crate) fn hurwitz_tail(n: usize, s: f64) -> f64 {
    const DIRECT: usize = 64;
    let direct: f64 = (n..n + DIRECT).map(|m| (m as f64).powf(-s)).sum();
    let a = (n + DIRECT) as f64;
    direct + a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0
}

/// Probability of jumping back to 1 from `n` when return times follow
/// `ρ(n) ∝ n^(-5/2)`: `ρ(n) / ρ([n, ∞))`.
pub fn heavy_tail_reset_prob(n: usize) -> f64 {
    (n as f64).powf(-HEAVY_TAIL_EXPONENT) / hurwitz_tail(n, HEAVY_TAIL_EXPONENT)
}

/// Renewal chain on `{1, …, level}`: from `n` jump to 1 with probability
/// `p_n`, otherwise to `n+1`. The step past `level` becomes a self-loop.
pub fn heavy_tail_kernel(level: usize) -> TransitionKernel {
    assert!(level >= 2);
    let mut rows = Vec::with_capacity(level);
    let mut redirected = 0.0;
    for i in 0..level {
        let p = heavy_tail_reset_prob(i + 1);
        let next = if i + 1 == level {
            redirected = 1.0 - p;
            i
        } else {
            i + 1
        };
        rows.push(vec![(0, p), (next, 1.0 - p)]);
    }
    TransitionKernel::from_rows((1..=level).map(|n| n.to_string()).collect(), rows)
        .expect("valid kernel")
        .with_truncation(Truncation {
            level,
            redirected_mass: redirected,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hurwitz_tail_matches_long_sum() {
        // Oracle: brute-force partial sum to 10^6 plus integral remainder.
        let s = HEAVY_TAIL_EXPONENT;
        let m = 1_000_000usize;
        let brute: f64 = (3..m).map(|k| (k as f64).powf(-s)).sum::<f64>() + (m as f64).powf(1.0 - s) / (s - 1.0);
        assert!((hurwitz_tail(3, s) - brute).abs() < 1e-12);
        // ζ(5/2)
        assert!((hurwitz_tail(1, s) - 1.341_487_257_250_917).abs() < 1e-13);
    }

    #[test]
    fn reset_probs_are_in_unit_interval() {
        for n in 1..200 {
            let p = heavy_tail_reset_prob(n);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn truncation_records_redirected_mass() {
        assert_eq!(truncated_random_walk(5).truncation().unwrap().redirected_mass, 0.25);
        let k = heavy_tail_kernel(10);
        let t = k.truncation().unwrap();
        assert!((t.redirected_mass - k.prob(9, 9)).abs() < 1e-15);
    }
}

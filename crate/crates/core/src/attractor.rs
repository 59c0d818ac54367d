//! Random attractors by backward composition.
//!
//! `K_n = φ^n_{θ_{−n}ω}(X)` shrinks as `n` grows. On a finite space the
//! limit is reached as soon as `K_n` is pairwise insulated: such a set has
//! at most `κ̂` points while the attractor inside it has exactly `κ̂`, so the
//! two coincide. That is the stopping rule used here; a plateau in `|K_n|`
//! alone is not enough, since the cardinality can stall before the limit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{stationary_distribution, ChainError};
use crate::noise::{format_seed, Scenario};
use crate::rds::RdsRepresentation;
use crate::two_point::InsulationStructure;

pub const DEFAULT_MAX_BACK: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttractorError {
    #[error("pullback did not converge within {max_back} steps (last cardinality {last_cardinality})")]
    NoConvergence { max_back: u64, last_cardinality: usize },
    #[error("attractor cardinality varies across scenarios: {histogram:?}")]
    MixedCardinality { histogram: BTreeMap<usize, u64> },
    #[error("representation does not synchronize (maximum insulated set has {kappa_hat} states)")]
    NotSynchronizing { kappa_hat: usize },
    #[error("coupling from the past exceeded the horizon cap {max_horizon}")]
    HorizonOverflow { max_horizon: u64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// `A(θ_anchor ω)` and the number of backward steps it took.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorSet {
    /// Sorted state indices.
    pub states: Vec<usize>,
    pub steps: u64,
}

/// `A(ω)`, anchored at time 0.
pub fn pullback_attractor(
    rds: &RdsRepresentation,
    scenario: &Scenario,
    structure: &InsulationStructure,
    max_back: u64,
) -> Result<AttractorSet, AttractorError> {
    pullback_attractor_at(rds, scenario, structure, 0, max_back)
}

/// `A(θ_anchor ω)`: composes `φ_{anchor−1} ∘ … ∘ φ_{anchor−n}` until its image
/// is pairwise insulated.
pub fn pullback_attractor_at(
    rds: &RdsRepresentation,
    scenario: &Scenario,
    structure: &InsulationStructure,
    anchor: i64,
    max_back: u64,
) -> Result<AttractorSet, AttractorError> {
    let n = rds.len();
    // composite[x] = φ^k_{θ_{anchor−k}ω}(x)
    let mut composite: Vec<usize> = (0..n).collect();
    let mut in_image = vec![true; n];
    let mut image: Vec<usize> = (0..n).collect();
    for k in 1..=max_back {
        let t = anchor
            .checked_sub_unsigned(k)
            .expect("time index overflowed i64");
        let earliest = rds.map_at(scenario, t);
        composite = earliest.iter().map(|&y| composite[y]).collect();
        let mut next_in_image = vec![false; n];
        for &y in &composite {
            assert!(in_image[y], "pullback images must be nested");
            next_in_image[y] = true;
        }
        in_image = next_in_image;
        image = (0..n).filter(|&y| in_image[y]).collect();
        if structure.is_insulated_set(&image) {
            return Ok(AttractorSet {
                states: image,
                steps: k,
            });
        }
    }
    Err(AttractorError::NoConvergence {
        max_back,
        last_cardinality: image.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorTrace {
    pub seed: String,
    pub steps: u64,
    pub states: Vec<usize>,
}

/// Aggregate of pullback attractors over independent scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorReport {
    pub kappa: usize,
    pub kappa_hat: usize,
    pub n_scenarios: u64,
    pub cardinality_histogram: BTreeMap<usize, u64>,
    /// Empirical `P(x ∈ A(ω))` per state.
    pub membership: Vec<f64>,
    /// `κπ(x)` per state.
    pub expected: Vec<f64>,
    pub max_steps: u64,
    pub mean_steps: f64,
    #[serde(skip)]
    pub traces: Vec<AttractorTrace>,
}

/// Runs [`pullback_attractor`] on scenarios `derive(master, 0..n_scenarios)`.
pub fn estimate_kappa(
    rds: &RdsRepresentation,
    structure: &InsulationStructure,
    master: u128,
    n_scenarios: u64,
    max_back: u64,
) -> Result<AttractorReport, AttractorError> {
    let pi = stationary_distribution(rds.kernel())?;
    let traces = (0..n_scenarios)
        .into_par_iter()
        .map(|i| {
            let scenario = Scenario::derive(master, i);
            pullback_attractor(rds, &scenario, structure, max_back).map(|a| AttractorTrace {
                seed: format_seed(scenario.seed()),
                steps: a.steps,
                states: a.states,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut histogram = BTreeMap::new();
    let mut counts = vec![0u64; rds.len()];
    for t in &traces {
        *histogram.entry(t.states.len()).or_insert(0) += 1;
        for &x in &t.states {
            counts[x] += 1;
        }
    }
    if histogram.len() > 1 {
        return Err(AttractorError::MixedCardinality { histogram });
    }
    let kappa = histogram.keys().next().copied().unwrap_or(structure.kappa_hat);
    let total = n_scenarios.max(1) as f64;
    Ok(AttractorReport {
        kappa,
        kappa_hat: structure.kappa_hat,
        n_scenarios,
        cardinality_histogram: histogram,
        membership: counts.iter().map(|&c| c as f64 / total).collect(),
        expected: pi.mass.iter().map(|m| kappa as f64 * m).collect(),
        max_steps: traces.iter().map(|t| t.steps).max().unwrap_or(0),
        mean_steps: traces.iter().map(|t| t.steps as f64).sum::<f64>() / total,
        traces,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceReport {
    pub checks: u64,
    /// Times `k` at which `φ_{θ_k ω}(A(θ_k ω)) ≠ A(θ_{k+1} ω)`.
    pub failures: Vec<i64>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `φ_{θ_k ω}(A(θ_k ω)) = A(θ_{k+1} ω)` for `k = 0..n_checks`.
pub fn verify_invariance(
    rds: &RdsRepresentation,
    scenario: &Scenario,
    structure: &InsulationStructure,
    n_checks: u64,
    max_back: u64,
) -> Result<InvarianceReport, AttractorError> {
    let mut failures = Vec::new();
    let mut current = pullback_attractor_at(rds, scenario, structure, 0, max_back)?;
    for k in 0..n_checks as i64 {
        let next = pullback_attractor_at(rds, scenario, structure, k + 1, max_back)?;
        let mut moved = rds.step(scenario, k, &current.states);
        moved.sort_unstable();
        moved.dedup();
        if moved != next.states {
            failures.push(k);
        }
        current = next;
    }
    Ok(InvarianceReport {
        checks: n_checks,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CftpSample {
    pub state: usize,
    /// Backward horizon at which all of `X` had coalesced.
    pub horizon: u64,
}

/// Coupling from the past: doubles the horizon `T = 1, 2, 4, …` and runs
/// every state from time `−T` to 0 on the same noise until they coalesce.
pub fn cftp_sample(
    rds: &RdsRepresentation,
    scenario: &Scenario,
    structure: &InsulationStructure,
    max_horizon: u64,
) -> Result<CftpSample, AttractorError> {
    if structure.kappa_hat != 1 {
        return Err(AttractorError::NotSynchronizing {
            kappa_hat: structure.kappa_hat,
        });
    }
    let n = rds.len();
    let mut horizon = 1u64;
    while horizon <= max_horizon {
        let start = i64::try_from(horizon)
            .ok()
            .and_then(|h| h.checked_neg())
            .ok_or(AttractorError::HorizonOverflow { max_horizon })?;
        let end = rds.evolve(scenario, start, horizon, &(0..n).collect::<Vec<_>>());
        if end.iter().all(|&y| y == end[0]) {
            return Ok(CftpSample {
                state: end[0],
                horizon,
            });
        }
        horizon = horizon
            .checked_mul(2)
            .ok_or(AttractorError::HorizonOverflow { max_horizon })?;
    }
    Err(AttractorError::HorizonOverflow { max_horizon })
}

/// `count` perfect samples on scenarios `derive(master, 0..count)`.
pub fn cftp_samples(
    rds: &RdsRepresentation,
    structure: &InsulationStructure,
    master: u128,
    count: u64,
    max_horizon: u64,
) -> Result<Vec<CftpSample>, AttractorError> {
    (0..count)
        .into_par_iter()
        .map(|i| cftp_sample(rds, &Scenario::derive(master, i), structure, max_horizon))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rds::independent_rds;
    use crate::two_point::analyze;

    fn find_scenario(rds: &RdsRepresentation, time: i64, map: usize) -> Scenario {
        (0..)
            .map(|i| Scenario::derive(99, i))
            .find(|s| rds.selected_map(s, time) == Some(map))
            .unwrap()
    }

    #[test]
    fn diagonal_attractor_follows_last_map() {
        let rds = catalog::four_state_diagonal_rds();
        let (_, s) = analyze(&rds).unwrap();
        let with_f2 = find_scenario(&rds, -1, 1);
        let a = pullback_attractor(&rds, &with_f2, &s, 10).unwrap();
        assert_eq!(a, AttractorSet { states: vec![0, 2], steps: 1 });
        let with_f1 = find_scenario(&rds, -1, 0);
        assert_eq!(pullback_attractor(&rds, &with_f1, &s, 10).unwrap().states, vec![1, 3]);
    }

    #[test]
    fn single_state() {
        let rds = independent_rds(catalog::deterministic_cycle(1));
        let (_, s) = analyze(&rds).unwrap();
        let a = pullback_attractor(&rds, &Scenario::new(0), &s, 10).unwrap();
        assert_eq!(a, AttractorSet { states: vec![0], steps: 1 });
        assert!(verify_invariance(&rds, &Scenario::new(0), &s, 5, 10).unwrap().passed());
        assert_eq!(cftp_sample(&rds, &Scenario::new(0), &s, 8).unwrap(), CftpSample { state: 0, horizon: 1 });
    }

    #[test]
    fn no_convergence_reports_cardinality() {
        let rds = catalog::four_state_independent_rds();
        let (_, s) = analyze(&rds).unwrap();
        // One backward step cannot merge all four states of this chain.
        match pullback_attractor(&rds, &Scenario::new(5), &s, 1) {
            Err(AttractorError::NoConvergence { max_back: 1, last_cardinality }) => {
                assert!(last_cardinality >= 2)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kappa_estimates() {
        let rds = catalog::four_state_independent_rds();
        let (_, s) = analyze(&rds).unwrap();
        let r = estimate_kappa(&rds, &s, 1, 2000, DEFAULT_MAX_BACK).unwrap();
        assert_eq!(r.kappa, 1);
        assert!((r.membership.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let rds = independent_rds(catalog::deterministic_cycle(3));
        let (_, s) = analyze(&rds).unwrap();
        let r = estimate_kappa(&rds, &s, 1, 100, DEFAULT_MAX_BACK).unwrap();
        assert_eq!(r.kappa, 3);
        assert_eq!(r.cardinality_histogram, BTreeMap::from([(3, 100)]));
    }

    #[test]
    fn invariance_holds() {
        let rds = catalog::four_state_diagonal_rds();
        let (_, s) = analyze(&rds).unwrap();
        assert!(verify_invariance(&rds, &Scenario::new(4), &s, 50, 100).unwrap().passed());
    }

    #[test]
    fn independent_singleton_moves_along_trajectory() {
        let rds = catalog::four_state_independent_rds();
        let (_, s) = analyze(&rds).unwrap();
        let scenario = Scenario::new(12);
        let a0 = pullback_attractor(&rds, &scenario, &s, DEFAULT_MAX_BACK).unwrap();
        assert!(verify_invariance(&rds, &scenario, &s, 50, DEFAULT_MAX_BACK).unwrap().passed());
        for k in 1..50u64 {
            let ak = pullback_attractor_at(&rds, &scenario, &s, k as i64, DEFAULT_MAX_BACK).unwrap();
            assert_eq!(ak.states, rds.evolve(&scenario, 0, k, &a0.states));
        }
    }

    #[test]
    fn cftp_refuses_non_synchronizing() {
        let rds = catalog::four_state_diagonal_rds();
        let (_, s) = analyze(&rds).unwrap();
        assert_eq!(
            cftp_sample(&rds, &Scenario::new(0), &s, 1024),
            Err(AttractorError::NotSynchronizing { kappa_hat: 2 })
        );
    }

    #[test]
    fn cftp_agrees_with_pullback() {
        // Once coalesced, the time-0 value no longer depends on the horizon.
        let rds = catalog::four_state_independent_rds();
        let (_, s) = analyze(&rds).unwrap();
        for i in 0..200 {
            let scenario = Scenario::derive(8, i);
            let c = cftp_sample(&rds, &scenario, &s, 1 << 20).unwrap();
            let a = pullback_attractor(&rds, &scenario, &s, DEFAULT_MAX_BACK).unwrap();
            assert_eq!(a.states, vec![c.state]);
            assert!(a.steps <= c.horizon);
        }
    }

    #[test]
    fn cftp_horizon_overflow() {
        let rds = catalog::four_state_independent_rds();
        let (_, s) = analyze(&rds).unwrap();
        let overflowed = (0..100)
            .map(|i| cftp_sample(&rds, &Scenario::derive(2, i), &s, 1))
            .filter(|r| matches!(r, Err(AttractorError::HorizonOverflow { .. })))
            .count();
        assert!(overflowed > 0);
    }
}

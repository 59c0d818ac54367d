//! Random-dynamical-system representations of a kernel and the cocycle
//! `φ^n_ω` acting on tuples of states.
//!
//! Two kinds are supported. An *explicit* representation draws one map
//! from a finite family per time step (noise slot 0). The *independent*
//! representation moves every state on its own using the draw in slot
//! `1 + x`; since draws are positional, two trajectories that sit on the
//! same state at the same time receive the same draw and stay merged.

use std::collections::HashMap;

use thiserror::Error;

use crate::chain::{ChainError, TransitionKernel};
use crate::noise::Scenario;
use crate::spec::RdsSpec;

/// Allowed deviation between a family's marginals and the kernel.
pub const MARGINAL_TOLERANCE: f64 = 1e-10;
const PROB_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RdsError {
    #[error("map family is empty")]
    EmptyFamily,
    #[error("map {map} has {found} entries, expected {expected}")]
    MapLength { map: usize, expected: usize, found: usize },
    #[error("map {map} sends a state outside the state space")]
    MapOutOfRange { map: usize },
    #[error("map {map} has invalid probability {prob}")]
    InvalidProbability { map: usize, prob: f64 },
    #[error("map probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },
    #[error("map {map} does not define an image for state `{state}`")]
    IncompleteMap { map: usize, state: String },
    #[error("unknown state `{0}` in map family")]
    UnknownState(String),
    #[error(
        "maps give P({from} -> {to}) = {found}, kernel has {expected} (deviation {deviation:e})"
    )]
    MarginalMismatch {
        from: String,
        to: String,
        expected: f64,
        found: f64,
        deviation: f64,
    },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Finite distribution over total maps `X → X`, maps stored as index arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMapDistribution {
    maps: Vec<Vec<usize>>,
    probs: Vec<f64>,
}

impl RandomMapDistribution {
    pub fn new(maps: Vec<Vec<usize>>, probs: Vec<f64>) -> Result<Self, RdsError> {
        if maps.is_empty() || maps.len() != probs.len() {
            return Err(RdsError::EmptyFamily);
        }
        let n = maps[0].len();
        for (i, m) in maps.iter().enumerate() {
            if m.len() != n {
                return Err(RdsError::MapLength {
                    map: i,
                    expected: n,
                    found: m.len(),
                });
            }
            if m.iter().any(|&y| y >= n) {
                return Err(RdsError::MapOutOfRange { map: i });
            }
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(p.is_finite() && p > 0.0 && p <= 1.0) {
                return Err(RdsError::InvalidProbability { map: i, prob: p });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(RdsError::ProbabilitySum { sum });
        }
        Ok(RandomMapDistribution { maps, probs })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn state_count(&self) -> usize {
        self.maps[0].len()
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF selection over the maps in their listed order.
    pub fn select(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    /// One-step marginals `Σ_{i: fᵢ(x) = y} pᵢ` as sparse rows.
    fn marginal_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.state_count();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (map, &p) in self.maps.iter().zip(&self.probs) {
            for (x, &y) in map.iter().enumerate() {
                match rows[x].iter_mut().find(|(t, _)| *t == y) {
                    Some(entry) => entry.1 += p,
                    None => rows[x].push((y, p)),
                }
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(y, _)| y);
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RdsKind {
    Explicit(RandomMapDistribution),
    Independent,
}

/// An RDS representing a transition kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RdsRepresentation {
    kind: RdsKind,
    kernel: TransitionKernel,
}

/// Validates that `maps` reproduces `kernel` one step at a time.
pub fn explicit_rds(
    maps: RandomMapDistribution,
    kernel: TransitionKernel,
) -> Result<RdsRepresentation, RdsError> {
    explicit_rds_with_tolerance(maps, kernel, MARGINAL_TOLERANCE)
}

pub fn explicit_rds_with_tolerance(
    maps: RandomMapDistribution,
    kernel: TransitionKernel,
    marginal_tolerance: f64,
) -> Result<RdsRepresentation, RdsError> {
    if maps.state_count() != kernel.len() {
        return Err(RdsError::MapLength {
            map: 0,
            expected: kernel.len(),
            found: maps.state_count(),
        });
    }
    let rows = maps.marginal_rows();
    let mut worst: Option<(usize, usize, f64, f64)> = None;
    let mut worst_dev = 0.0;
    for x in 0..kernel.len() {
        let mut check = |y: usize| {
            let found = rows[x].iter().find(|e| e.0 == y).map_or(0.0, |e| e.1);
            let expected = kernel.prob(x, y);
            let dev = (found - expected).abs();
            if dev > worst_dev {
                worst_dev = dev;
                worst = Some((x, y, expected, found));
            }
        };
        rows[x].iter().for_each(|&(y, _)| check(y));
        kernel.row(x).iter().for_each(|&(y, _)| check(y));
    }
    if worst_dev > marginal_tolerance {
        let (x, y, expected, found) = worst.expect("deviation recorded");
        return Err(RdsError::MarginalMismatch {
            from: kernel.label(x).to_string(),
            to: kernel.label(y).to_string(),
            expected,
            found,
            deviation: worst_dev,
        });
    }
    Ok(RdsRepresentation {
        kind: RdsKind::Explicit(maps),
        kernel,
    })
}

/// The representation in which distinct states move independently.
pub fn independent_rds(kernel: TransitionKernel) -> RdsRepresentation {
    RdsRepresentation::independent(kernel)
}

impl RdsRepresentation {
    pub fn independent(kernel: TransitionKernel) -> Self {
        RdsRepresentation {
            kind: RdsKind::Independent,
            kernel,
        }
    }

    /// Builds the representation described by `spec` (independent when absent).
    pub fn from_spec(spec: Option<&RdsSpec>, kernel: TransitionKernel) -> Result<Self, RdsError> {
        Self::from_spec_with_tolerance(spec, kernel, MARGINAL_TOLERANCE)
    }

    pub fn from_spec_with_tolerance(
        spec: Option<&RdsSpec>,
        kernel: TransitionKernel,
        marginal_tolerance: f64,
    ) -> Result<Self, RdsError> {
        let maps = match spec {
            None | Some(RdsSpec::Independent) => return Ok(Self::independent(kernel)),
            Some(RdsSpec::Explicit { maps }) => maps,
        };
        let index: HashMap<&str, usize> = kernel
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let lookup = |label: &str| {
            index
                .get(label)
                .copied()
                .ok_or_else(|| RdsError::UnknownState(label.to_string()))
        };
        let mut arrays = Vec::with_capacity(maps.len());
        let mut probs = Vec::with_capacity(maps.len());
        for (i, m) in maps.iter().enumerate() {
            for key in m.map.keys() {
                lookup(key)?;
            }
            let array = kernel
                .states()
                .iter()
                .map(|s| match m.map.get(s) {
                    Some(target) => lookup(target),
                    None => Err(RdsError::IncompleteMap {
                        map: i,
                        state: s.clone(),
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            arrays.push(array);
            probs.push(m.prob);
        }
        explicit_rds_with_tolerance(RandomMapDistribution::new(arrays, probs)?, kernel, marginal_tolerance)
    }

    pub fn kind(&self) -> &RdsKind {
        &self.kind
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.kind, RdsKind::Independent)
    }

    /// Index of the map drawn at `time`, for explicit representations.
    pub fn selected_map(&self, scenario: &Scenario, time: i64) -> Option<usize> {
        match &self.kind {
            RdsKind::Explicit(family) => Some(family.select(scenario.uniform(time, 0))),
            RdsKind::Independent => None,
        }
    }

    /// `φ_{θ_time ω}(x)`.
    pub fn image(&self, scenario: &Scenario, time: i64, x: usize) -> usize {
        match &self.kind {
            RdsKind::Explicit(family) => {
                family.maps[family.select(scenario.uniform(time, 0))][x]
            }
            RdsKind::Independent => self
                .kernel
                .sample_next(x, scenario.uniform(time, 1 + x as u64)),
        }
    }

    /// The whole map `φ_{θ_time ω}` as an index array.
    pub fn map_at(&self, scenario: &Scenario, time: i64) -> Vec<usize> {
        match &self.kind {
            RdsKind::Explicit(family) => {
                family.maps[family.select(scenario.uniform(time, 0))].clone()
            }
            RdsKind::Independent => (0..self.len())
                .map(|x| self.image(scenario, time, x))
                .collect(),
        }
    }

    /// Applies `φ_{θ_time ω}` to every coordinate of `points` in place.
    pub fn step_in_place(&self, scenario: &Scenario, time: i64, points: &mut [usize]) {
        match &self.kind {
            RdsKind::Explicit(family) => {
                if points.is_empty() {
                    return;
                }
                let map = &family.maps[family.select(scenario.uniform(time, 0))];
                for p in points.iter_mut() {
                    *p = map[*p];
                }
            }
            RdsKind::Independent => {
                for p in points.iter_mut() {
                    *p = self.image(scenario, time, *p);
                }
            }
        }
    }

    /// `φ_{θ_time ω}` applied to a tuple.
    pub fn step(&self, scenario: &Scenario, time: i64, points: &[usize]) -> Vec<usize> {
        let mut out = points.to_vec();
        self.step_in_place(scenario, time, &mut out);
        out
    }

    /// `φ^n_{θ_start ω}` applied to a tuple: steps at `start, …, start+n−1`.
    pub fn evolve(&self, scenario: &Scenario, start: i64, n: u64, points: &[usize]) -> Vec<usize> {
        let mut out = points.to_vec();
        for i in 0..n {
            let t = start
                .checked_add_unsigned(i)
                .expect("time index overflowed i64");
            self.step_in_place(scenario, t, &mut out);
        }
        out
    }

    /// Exact one-step marginal kernel.
    pub fn induced_kernel(&self) -> TransitionKernel {
        match &self.kind {
            RdsKind::Independent => self.kernel.clone(),
            RdsKind::Explicit(family) => {
                TransitionKernel::from_rows(self.kernel.states().to_vec(), family.marginal_rows())
                    .expect("validated marginals match a valid kernel")
            }
        }
    }

    /// Number of distinct maps drawn with positive probability, when it fits in a `u128`.
    pub fn effective_map_count(&self) -> Option<u128> {
        match &self.kind {
            RdsKind::Explicit(family) => {
                let mut distinct = family.maps.clone();
                distinct.sort();
                distinct.dedup();
                Some(distinct.len() as u128)
            }
            RdsKind::Independent => (0..self.len()).try_fold(1u128, |acc, x| {
                acc.checked_mul(self.kernel.row(x).len() as u128)
            }),
        }
    }

    /// The representation as an explicit family, if it has at most `limit`
    /// maps. For the independent kind this enumerates the product of the
    /// rows; identical maps of an explicit family are merged.
    pub fn effective_maps(&self, limit: usize) -> Option<RandomMapDistribution> {
        let count = self.effective_map_count()?;
        if count > limit as u128 {
            return None;
        }
        match &self.kind {
            RdsKind::Explicit(family) => {
                let mut merged: Vec<(Vec<usize>, f64)> = Vec::new();
                for (m, &p) in family.maps.iter().zip(&family.probs) {
                    match merged.iter_mut().find(|(q, _)| q == m) {
                        Some(e) => e.1 += p,
                        None => merged.push((m.clone(), p)),
                    }
                }
                let (maps, probs) = merged.into_iter().unzip();
                Some(RandomMapDistribution { maps, probs })
            }
            RdsKind::Independent => {
                let mut maps = vec![Vec::with_capacity(self.len())];
                let mut probs = vec![1.0];
                for x in 0..self.len() {
                    let mut next_maps = Vec::new();
                    let mut next_probs = Vec::new();
                    for (m, &p) in maps.iter().zip(&probs) {
                        for &(y, q) in self.kernel.row(x) {
                            let mut extended = m.clone();
                            extended.push(y);
                            next_maps.push(extended);
                            next_probs.push(p * q);
                        }
                    }
                    maps = next_maps;
                    probs = next_probs;
                }
                Some(RandomMapDistribution { maps, probs })
            }
        }
    }
}

//! Exact analysis of finite Markov chains.
//!
//! Everything here works on a validated [`TransitionKernel`]: a sparse,
//! row-stochastic matrix over labelled states. Linear systems are solved
//! densely (LU with partial pivoting); desk-scale chains have at most a
//! few hundred states.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::Scenario;
use crate::spec::ChainSpec;

/// Allowed deviation of a row sum from one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Allowed `πP − π` residual.
pub const STATIONARY_RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Relative tolerance of the `E_π[τ_y]` second-moment identity.
pub const DEGREE_TWO_IDENTITY_TOLERANCE: f64 = 1e-8;
/// Allowed deviation of `E_y[τ_y] π(y)` from one.
pub const RETURN_TIME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("chain has no states")]
    EmptyStateSpace,
    #[error("state label `{0}` listed more than once")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("transition {from} -> {to} listed more than once")]
    DuplicateEdge { from: String, to: String },
    #[error("transition {from} -> {to} has invalid probability {prob}")]
    InvalidProbability { from: String, to: String, prob: f64 },
    #[error("row of state `{state}` sums to {sum}, expected 1")]
    RowSumError { state: String, sum: f64 },
    #[error("chain is not irreducible ({classes} closed classes, {transient} transient states)")]
    NotIrreducible { classes: usize, transient: usize },
    #[error("hitting-time system for target `{target}` is numerically singular")]
    SingularSystem { target: String },
}

/// Record of mass redirected when a countable chain is cut at a finite level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub level: usize,
    /// Probability per step moved from the cut edge onto the boundary self-loop.
    pub redirected_mass: f64,
}

/// Sparse row-stochastic transition matrix `P` over labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    states: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
    truncation: Option<Truncation>,
}

impl TransitionKernel {
    /// Builds and validates a kernel from per-state rows of `(target, prob)`.
    ///
    /// Zero entries are dropped; rows are kept in the given order, which is
    /// the order inverse-CDF sampling consumes them in.
    pub fn from_rows(
        states: Vec<String>,
        rows: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self, ChainError> {
        Self::from_rows_with_tolerance(states, rows, ROW_SUM_TOLERANCE)
    }

    /// [`from_rows`](Self::from_rows) with a custom row-sum tolerance.
    pub fn from_rows_with_tolerance(
        states: Vec<String>,
        rows: Vec<Vec<(usize, f64)>>,
        row_sum_tolerance: f64,
    ) -> Result<Self, ChainError> {
        if states.is_empty() {
            return Err(ChainError::EmptyStateSpace);
        }
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s.as_str()) {
                return Err(ChainError::DuplicateState(s.clone()));
            }
        }
        assert_eq!(states.len(), rows.len(), "one row per state");
        let n = states.len();
        let mut clean = Vec::with_capacity(n);
        for (x, row) in rows.into_iter().enumerate() {
            let mut targets = BTreeSet::new();
            let mut kept = Vec::with_capacity(row.len());
            for (y, p) in row {
                let label = states
                    .get(y)
                    .ok_or_else(|| ChainError::UnknownState(format!("#{y}")))?;
                if !targets.insert(y) {
                    return Err(ChainError::DuplicateEdge {
                        from: states[x].clone(),
                        to: label.clone(),
                    });
                }
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(ChainError::InvalidProbability {
                        from: states[x].clone(),
                        to: label.clone(),
                        prob: p,
                    });
                }
                if p > 0.0 {
                    kept.push((y, p));
                }
            }
            let sum: f64 = kept.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > row_sum_tolerance {
                return Err(ChainError::RowSumError {
                    state: states[x].clone(),
                    sum,
                });
            }
            clean.push(kept);
        }
        Ok(TransitionKernel {
            states,
            rows: clean,
            truncation: None,
        })
    }

    pub(crate) fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = Some(truncation);
        self
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn label(&self, x: usize) -> &str {
        &self.states[x]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `P(x, y)`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x]
            .iter()
            .find(|&&(t, _)| t == y)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Largest entrywise `|P(x,y) − P'(x,y)|`; infinite when the state lists differ.
    pub fn max_abs_difference(&self, other: &TransitionKernel) -> f64 {
        if self.states != other.states {
            return f64::INFINITY;
        }
        (0..self.len())
            .flat_map(|x| {
                self.rows[x]
                    .iter()
                    .chain(&other.rows[x])
                    .map(move |&(y, _)| (self.prob(x, y) - other.prob(x, y)).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                m[(x, y)] = p;
            }
        }
        m
    }

    /// Largest `|Σ_y P(x,y) − 1|` over all rows.
    pub fn max_row_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse-CDF selection of the successor of `x` for a uniform `u`.
    pub fn sample_next(&self, x: usize, u: f64) -> usize {
        let row = &self.rows[x];
        let mut acc = 0.0;
        for &(y, p) in row {
            acc += p;
            if u < acc {
                return y;
            }
        }
        row.last().expect("rows are non-empty").0
    }
}

/// Validates a raw chain description.
pub fn validate_kernel(spec: &ChainSpec) -> Result<TransitionKernel, ChainError> {
    validate_kernel_with_tolerance(spec, ROW_SUM_TOLERANCE)
}

pub fn validate_kernel_with_tolerance(
    spec: &ChainSpec,
    row_sum_tolerance: f64,
) -> Result<TransitionKernel, ChainError> {
    let mut index = HashMap::new();
    for (i, s) in spec.states.iter().enumerate() {
        if index.insert(s.as_str(), i).is_some() {
            return Err(ChainError::DuplicateState(s.clone()));
        }
    }
    let lookup = |label: &str| {
        index
            .get(label)
            .copied()
            .ok_or_else(|| ChainError::UnknownState(label.to_string()))
    };
    let mut rows = vec![Vec::new(); spec.states.len()];
    for t in &spec.transitions {
        let from = lookup(&t.from)?;
        let to = lookup(&t.to)?;
        rows[from].push((to, t.prob));
    }
    TransitionKernel::from_rows_with_tolerance(spec.states.clone(), rows, row_sum_tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrreducibilityClasses {
    /// Closed strongly connected components, each sorted, ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
}

impl IrreducibilityClasses {
    pub fn is_irreducible(&self) -> bool {
        self.classes.len() == 1 && self.transient.is_empty()
    }
}

pub fn irreducibility_classes(kernel: &TransitionKernel) -> IrreducibilityClasses {
    let n = kernel.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, kernel.edge_count());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for x in 0..n {
        for &(y, _) in kernel.row(x) {
            graph.add_edge(nodes[x], nodes[y], ());
        }
    }
    let mut component = vec![0usize; n];
    let sccs = tarjan_scc(&graph);
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            component[v.index()] = c;
        }
    }
    let mut closed = vec![true; sccs.len()];
    for x in 0..n {
        for &(y, _) in kernel.row(x) {
            if component[x] != component[y] {
                closed[component[x]] = false;
            }
        }
    }
    let mut classes = Vec::new();
    let mut transient = Vec::new();
    for (c, scc) in sccs.iter().enumerate() {
        let mut members: Vec<usize> = scc.iter().map(|v| v.index()).collect();
        members.sort_unstable();
        if closed[c] {
            classes.push(members);
        } else {
            transient.extend(members);
        }
    }
    classes.sort_by_key(|c| c[0]);
    transient.sort_unstable();
    IrreducibilityClasses { classes, transient }
}

fn require_irreducible(kernel: &TransitionKernel) -> Result<(), ChainError> {
    let ic = irreducibility_classes(kernel);
    if ic.is_irreducible() {
        Ok(())
    } else {
        Err(ChainError::NotIrreducible {
            classes: ic.classes.len(),
            transient: ic.transient.len(),
        })
    }
}

/// Unique stationary distribution of an irreducible kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryDistribution {
    pub mass: Vec<f64>,
    /// `max_y |(πP)(y) − π(y)|`.
    pub residual: f64,
}

impl StationaryDistribution {
    /// Inverse-CDF draw from `π`.
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (x, &m) in self.mass.iter().enumerate() {
            acc += m;
            if u < acc {
                return x;
            }
        }
        self.mass.len() - 1
    }
}

/// Solves `πP = π`, `Σπ = 1` directly, with the last balance equation
/// replaced by the normalization.
pub fn stationary_distribution(
    kernel: &TransitionKernel,
) -> Result<StationaryDistribution, ChainError> {
    require_irreducible(kernel)?;
    let n = kernel.len();
    let p = kernel.to_dense();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(ChainError::SingularSystem {
        target: "stationary".into(),
    })?;
    let mass: Vec<f64> = pi.iter().copied().collect();
    let residual = stationary_residual(kernel, &mass);
    Ok(StationaryDistribution { mass, residual })
}

/// `max_y |Σ_x π(x)P(x,y) − π(y)|`.
pub fn stationary_residual(kernel: &TransitionKernel, mass: &[f64]) -> f64 {
    let mut image = vec![0.0; kernel.len()];
    for (x, &m) in mass.iter().enumerate() {
        for &(y, p) in kernel.row(x) {
            image[y] += m * p;
        }
    }
    image
        .iter()
        .zip(mass)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Periodicity {
    pub period: usize,
    /// `W_0, …, W_{p−1}`; every transition goes from `W_i` to `W_{i+1 mod p}`.
    pub classes: Vec<Vec<usize>>,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period and cyclic classes via BFS levels from state 0.
pub fn period(kernel: &TransitionKernel) -> Result<Periodicity, ChainError> {
    require_irreducible(kernel)?;
    let n = kernel.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in kernel.row(u) {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0;
    for u in 0..n {
        for &(v, _) in kernel.row(u) {
            g = gcd(g, (level[u] + 1).abs_diff(level[v]));
        }
    }
    let p = g.max(1);
    let mut classes = vec![Vec::new(); p];
    for (x, &l) in level.iter().enumerate() {
        classes[l % p].push(x);
    }
    Ok(Periodicity { period: p, classes })
}

/// Checks that every positive transition maps `W_i` into `W_{i+1 mod p}`.
pub fn period_is_consistent(kernel: &TransitionKernel, periodicity: &Periodicity) -> bool {
    let p = periodicity.period;
    let mut class_of = vec![usize::MAX; kernel.len()];
    for (i, members) in periodicity.classes.iter().enumerate() {
        for &x in members {
            class_of[x] = i;
        }
    }
    (0..kernel.len()).all(|x| {
        class_of[x] != usize::MAX
            && kernel
                .row(x)
                .iter()
                .all(|&(y, _)| class_of[y] == (class_of[x] + 1) % p)
    })
}

/// First and second moments of `τ_y = min{n ≥ 1 : X_n = y}` from every start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingMoments {
    pub target: usize,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

/// Solves `h = 1 + P₋ᵧh` and `s = 1 + 2P₋ᵧh + P₋ᵧs`, where `P₋ᵧ` is `P` with
/// the column of the target zeroed. The entry at the target itself is the
/// return-time moment.
pub fn hitting_time_moments(
    kernel: &TransitionKernel,
    target: usize,
) -> Result<HittingMoments, ChainError> {
    require_irreducible(kernel)?;
    let n = kernel.len();
    let singular = || ChainError::SingularSystem {
        target: kernel.label(target).to_string(),
    };
    let mut restricted = DMatrix::zeros(n, n);
    for x in 0..n {
        for &(z, p) in kernel.row(x) {
            if z != target {
                restricted[(x, z)] = p;
            }
        }
    }
    let system = DMatrix::identity(n, n) - &restricted;
    let lu = system.lu();
    let ones = DVector::from_element(n, 1.0);
    let h = lu.solve(&ones).ok_or_else(singular)?;
    let rhs = &ones + (&restricted * &h) * 2.0;
    let s = lu.solve(&rhs).ok_or_else(singular)?;
    let ok = |v: &DVector<f64>| v.iter().all(|x| x.is_finite() && *x >= 1.0 - 1e-9);
    if !ok(&h) || !ok(&s) {
        return Err(singular());
    }
    Ok(HittingMoments {
        target,
        first_moment: h.iter().copied().collect(),
        second_moment: s.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDegreeTwo {
    pub target: usize,
    /// `Σ_x π(x) E_x[τ_y]`.
    pub expected_from_pi: f64,
    /// `½ π(y) (E_y[τ_y²] + E_y[τ_y])`.
    pub identity_value: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeTwoReport {
    /// All `E_π[τ_y]` finite.
    pub ergodic_degree_2: bool,
    /// The two routes to `E_π[τ_y]` agree for every target.
    pub identity_holds: bool,
    pub targets: Vec<TargetDegreeTwo>,
}

pub fn is_ergodic_degree_2(kernel: &TransitionKernel) -> Result<DegreeTwoReport, ChainError> {
    let pi = stationary_distribution(kernel)?;
    let mut targets = Vec::with_capacity(kernel.len());
    for y in 0..kernel.len() {
        let m = hitting_time_moments(kernel, y)?;
        let expected_from_pi: f64 = pi
            .mass
            .iter()
            .zip(&m.first_moment)
            .map(|(p, h)| p * h)
            .sum();
        let identity_value = 0.5 * pi.mass[y] * (m.second_moment[y] + m.first_moment[y]);
        let relative_gap = (expected_from_pi - identity_value).abs() / expected_from_pi.abs();
        targets.push(TargetDegreeTwo {
            target: y,
            expected_from_pi,
            identity_value,
            relative_gap,
        });
    }
    Ok(DegreeTwoReport {
        ergodic_degree_2: targets.iter().all(|t| t.expected_from_pi.is_finite()),
        identity_holds: targets
            .iter()
            .all(|t| t.relative_gap <= DEGREE_TWO_IDENTITY_TOLERANCE),
        targets,
    })
}

/// Simulates `τ_y` from `x` along one scenario (slot 0, one draw per step).
/// Returns `None` if the target is not reached within `horizon` steps.
pub fn sample_hitting_time(
    kernel: &TransitionKernel,
    scenario: &Scenario,
    x: usize,
    y: usize,
    horizon: u64,
) -> Option<u64> {
    let mut state = x;
    for n in 0..horizon {
        state = kernel.sample_next(state, scenario.uniform(n as i64, 0));
        if state == y {
            return Some(n + 1);
        }
    }
    None
}

//! Exact synchronization structure of a finite representation.
//!
//! The 2-point kernel `Q` moves a pair of states under shared noise. Two
//! states are insulated (`x ∥ y`) when no diagonal pair is reachable from
//! `(x, y)` in the support digraph of `Q`, which is the finite-space form of
//! "they coalesce with probability zero". The size `κ̂` of a largest set of
//! pairwise insulated states is the attractor cardinality.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::StationaryDistribution;
use crate::clique::maximum_clique;
use crate::noise::Scenario;
use crate::rds::{RdsKind, RdsRepresentation};

/// Default cap on `|X|²` for building `Q`.
pub const DEFAULT_PAIR_CAP: usize = 1_000_000;
/// Default cap on `|X|` for the maximum-clique search.
pub const DEFAULT_CLIQUE_CAP: usize = 64;
/// Largest state space on which partition feasibility is decided exactly.
pub const PARTITION_EXACT_LIMIT: usize = 24;
/// Mass tolerance for partition blocks and class masses.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoPointError {
    #[error("state space too large: {pairs} pairs exceeds cap {cap}")]
    StateSpaceTooLarge { pairs: usize, cap: usize },
    #[error("maximum-clique search limited to {cap} insulated states, got {states}")]
    CliqueTooLarge { states: usize, cap: usize },
    #[error("{} pairs unresolved after {horizon} steps", unresolved.len())]
    HorizonExceeded {
        horizon: u64,
        unresolved: Vec<(usize, usize)>,
    },
}

/// Transition kernel of the pair chain, pairs indexed as `x · |X| + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointKernel {
    states: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

fn accumulate(row: &mut Vec<(usize, f64)>, target: usize, p: f64) {
    match row.iter_mut().find(|(t, _)| *t == target) {
        Some(e) => e.1 += p,
        None => row.push((target, p)),
    }
}

pub fn two_point_kernel(rds: &RdsRepresentation) -> Result<TwoPointKernel, TwoPointError> {
    two_point_kernel_with_cap(rds, DEFAULT_PAIR_CAP)
}

pub fn two_point_kernel_with_cap(
    rds: &RdsRepresentation,
    cap: usize,
) -> Result<TwoPointKernel, TwoPointError> {
    let n = rds.len();
    let pairs = n.saturating_mul(n);
    if pairs > cap {
        return Err(TwoPointError::StateSpaceTooLarge { pairs, cap });
    }
    let mut rows = vec![Vec::new(); pairs];
    match rds.kind() {
        RdsKind::Explicit(family) => {
            for (map, &p) in family.maps().iter().zip(family.probs()) {
                for x in 0..n {
                    for y in 0..n {
                        accumulate(&mut rows[x * n + y], map[x] * n + map[y], p);
                    }
                }
            }
        }
        RdsKind::Independent => {
            let kernel = rds.kernel();
            for x in 0..n {
                for y in 0..n {
                    let row = &mut rows[x * n + y];
                    if x == y {
                        for &(z, p) in kernel.row(x) {
                            row.push((z * n + z, p));
                        }
                    } else {
                        for &(u, p) in kernel.row(x) {
                            for &(v, q) in kernel.row(y) {
                                row.push((u * n + v, p * q));
                            }
                        }
                    }
                }
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|e| e.0);
    }
    Ok(TwoPointKernel { states: n, rows })
}

impl TwoPointKernel {
    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn pair_index(&self, x: usize, y: usize) -> usize {
        x * self.states + y
    }

    pub fn pair(&self, index: usize) -> (usize, usize) {
        (index / self.states, index % self.states)
    }

    pub fn row(&self, x: usize, y: usize) -> &[(usize, f64)] {
        &self.rows[self.pair_index(x, y)]
    }

    /// `Q((x,y), (u,v))`.
    pub fn prob(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        let t = self.pair_index(to.0, to.1);
        self.row(from.0, from.1)
            .iter()
            .find(|e| e.0 == t)
            .map_or(0.0, |e| e.1)
    }

    pub fn max_row_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of either coordinate marginal from `P`.
    pub fn max_marginal_deviation(&self, rds: &RdsRepresentation) -> f64 {
        let n = self.states;
        let kernel = rds.kernel();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let mut first = vec![0.0; n];
                let mut second = vec![0.0; n];
                for &(t, p) in self.row(x, y) {
                    let (u, v) = self.pair(t);
                    first[u] += p;
                    second[v] += p;
                }
                for z in 0..n {
                    worst = worst
                        .max((first[z] - kernel.prob(x, z)).abs())
                        .max((second[z] - kernel.prob(y, z)).abs());
                }
            }
        }
        worst
    }

    /// Graphviz rendering of the support digraph.
    pub fn to_dot(&self, labels: &[String]) -> String {
        let mut out = String::from("digraph Q {\n");
        for from in 0..self.rows.len() {
            let (x, y) = self.pair(from);
            for &(to, p) in &self.rows[from] {
                let (u, v) = self.pair(to);
                let _ = writeln!(
                    out,
                    "  \"{},{}\" -> \"{},{}\" [label=\"{p}\"];",
                    labels[x], labels[y], labels[u], labels[v]
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

/// The insulation relation `∥` with a maximum insulated set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsulationStructure {
    /// `relation[x][y]` iff `x ∥ y`.
    pub relation: Vec<Vec<bool>>,
    pub kappa_hat: usize,
    /// Lexicographically smallest maximum insulated set.
    pub witness: Vec<usize>,
    /// `Δ = {(x, y) : x = y or x ∥ y}`, as ordered pairs.
    pub delta: Vec<(usize, usize)>,
}

impl InsulationStructure {
    pub fn state_count(&self) -> usize {
        self.relation.len()
    }

    pub fn insulated(&self, x: usize, y: usize) -> bool {
        self.relation[x][y]
    }

    pub fn in_delta(&self, x: usize, y: usize) -> bool {
        x == y || self.relation[x][y]
    }

    /// Unordered insulated pairs `x < y`.
    pub fn insulated_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.state_count();
        (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .filter(|&(x, y)| self.relation[x][y])
            .collect()
    }

    /// Distinct members, pairwise insulated.
    pub fn is_insulated_set(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &x)| {
            set[i + 1..].iter().all(|&y| x != y && self.relation[x][y])
        })
    }

    /// First positive `Q`-transition leaving `Δ`, if any.
    pub fn delta_exit(&self, q: &TwoPointKernel) -> Option<((usize, usize), (usize, usize))> {
        self.delta.iter().find_map(|&(x, y)| {
            q.row(x, y)
                .iter()
                .map(|&(t, _)| q.pair(t))
                .find(|&(u, v)| !self.in_delta(u, v))
                .map(|to| ((x, y), to))
        })
    }
}

/// Computes `∥` by backward reachability from the diagonal.
pub fn insulation_relation(q: &TwoPointKernel) -> Result<InsulationStructure, TwoPointError> {
    insulation_relation_with_cap(q, DEFAULT_CLIQUE_CAP)
}

pub fn insulation_relation_with_cap(
    q: &TwoPointKernel,
    clique_cap: usize,
) -> Result<InsulationStructure, TwoPointError> {
    let n = q.state_count();
    let pairs = n * n;
    let mut reverse = vec![Vec::new(); pairs];
    for from in 0..pairs {
        for &(to, _) in &q.rows[from] {
            reverse[to].push(from);
        }
    }
    let mut reaches_diagonal = vec![false; pairs];
    let mut queue = VecDeque::new();
    for x in 0..n {
        let d = q.pair_index(x, x);
        reaches_diagonal[d] = true;
        queue.push_back(d);
    }
    while let Some(t) = queue.pop_front() {
        for &s in &reverse[t] {
            if !reaches_diagonal[s] {
                reaches_diagonal[s] = true;
                queue.push_back(s);
            }
        }
    }
    let relation: Vec<Vec<bool>> = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| !reaches_diagonal[q.pair_index(x, y)] && !reaches_diagonal[q.pair_index(y, x)])
                .collect()
        })
        .collect();
    let (kappa_hat, witness) = maximum_insulated_sets(&relation, clique_cap)?;
    let delta = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| x == y || relation[x][y])
        .collect();
    Ok(InsulationStructure {
        relation,
        kappa_hat,
        witness,
        delta,
    })
}

/// `κ̂` and the lexicographically smallest maximum insulated set. The cap
/// bounds the number of states that are insulated from at least one other
/// state; the rest can only form singletons.
pub fn maximum_insulated_sets(
    relation: &[Vec<bool>],
    cap: usize,
) -> Result<(usize, Vec<usize>), TwoPointError> {
    if relation.is_empty() {
        return Ok((0, Vec::new()));
    }
    let active: Vec<usize> = (0..relation.len())
        .filter(|&x| relation[x].iter().any(|&b| b))
        .collect();
    if active.is_empty() {
        return Ok((1, vec![0]));
    }
    if active.len() > cap {
        return Err(TwoPointError::CliqueTooLarge {
            states: active.len(),
            cap,
        });
    }
    let sub: Vec<Vec<bool>> = active
        .iter()
        .map(|&x| active.iter().map(|&y| relation[x][y]).collect())
        .collect();
    let witness: Vec<usize> = maximum_clique(&sub).into_iter().map(|i| active[i]).collect();
    Ok((witness.len(), witness))
}

/// Builds `Q` and the insulation structure of a representation.
pub fn analyze(rds: &RdsRepresentation) -> Result<(TwoPointKernel, InsulationStructure), TwoPointError> {
    let q = two_point_kernel(rds)?;
    let structure = insulation_relation(&q)?;
    Ok((q, structure))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PartitionFeasibility {
    Feasible { blocks: Vec<Vec<usize>> },
    Infeasible { certificate: String },
    Undecided { reason: String },
}

impl PartitionFeasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, PartitionFeasibility::Feasible { .. })
    }
}

/// Can the state space be split into `k` blocks of `π`-mass `1/k` each?
///
/// Exact subset search (bitmask reachability, each new block seeded by the
/// smallest unplaced state) for up to [`PARTITION_EXACT_LIMIT`] states.
pub fn kappa_partition_feasible(pi: &StationaryDistribution, k: usize) -> PartitionFeasibility {
    let mass = &pi.mass;
    let n = mass.len();
    if k == 0 || k > n {
        return PartitionFeasibility::Infeasible {
            certificate: format!("cannot split {n} states into {k} non-empty blocks"),
        };
    }
    if k == 1 {
        return PartitionFeasibility::Feasible {
            blocks: vec![(0..n).collect()],
        };
    }
    let target = 1.0 / k as f64;
    if let Some(x) = (0..n).find(|&x| mass[x] > target + MASS_TOLERANCE) {
        return PartitionFeasibility::Infeasible {
            certificate: format!("state {x} alone has mass {} > 1/{k}", mass[x]),
        };
    }
    if n > PARTITION_EXACT_LIMIT {
        return PartitionFeasibility::Undecided {
            reason: format!("exact search limited to {PARTITION_EXACT_LIMIT} states, got {n}"),
        };
    }
    let slack = MASS_TOLERANCE * (n as f64 + 1.0);
    let sum_of = |mask: usize| -> f64 { (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| mass[i]).sum() };
    const UNSEEN: u8 = u8::MAX;
    const ROOT: u8 = u8::MAX - 1;
    let full = (1usize << n) - 1;
    let mut parent = vec![UNSEEN; 1 << n];
    parent[0] = ROOT;
    // Masks only grow, so increasing numeric order visits parents first.
    for mask in 0..full {
        if parent[mask] == UNSEEN {
            continue;
        }
        let sum = sum_of(mask);
        let closed = ((sum + slack) / target).floor();
        let open = (sum - closed * target).max(0.0);
        let fresh = open <= slack;
        for e in 0..n {
            if mask >> e & 1 == 1 {
                continue;
            }
            let next = mask | 1 << e;
            if open + mass[e] <= target + slack && parent[next] == UNSEEN {
                parent[next] = e as u8;
            }
            if fresh {
                // A new block always starts with the smallest unplaced state.
                break;
            }
        }
    }
    if parent[full] == UNSEEN {
        return PartitionFeasibility::Infeasible {
            certificate: format!("exhaustive search found no split into {k} blocks of mass 1/{k}"),
        };
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    while mask != 0 {
        let e = parent[mask] as usize;
        order.push(e);
        mask &= !(1 << e);
    }
    order.reverse();
    let mut blocks = Vec::with_capacity(k);
    let mut current = Vec::new();
    let mut acc = 0.0;
    for e in order {
        current.push(e);
        acc += mass[e];
        if (acc - target).abs() <= slack {
            current.sort_unstable();
            blocks.push(std::mem::take(&mut current));
            acc = 0.0;
        }
    }
    if !current.is_empty() || blocks.len() != k {
        return PartitionFeasibility::Infeasible {
            certificate: format!("exhaustive search found no split into {k} blocks of mass 1/{k}"),
        };
    }
    blocks.sort();
    PartitionFeasibility::Feasible { blocks }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynchronizingClasses {
    /// Classes sorted internally and by smallest member.
    pub classes: Vec<Vec<usize>>,
    pub masses: Vec<f64>,
    /// Forward steps needed to resolve every pair.
    pub steps: u64,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut x = x;
        while self.0[x] != root {
            let next = self.0[x];
            self.0[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn default_sync_horizon(states: usize) -> u64 {
    100 * (states as u64).pow(2)
}

/// Partitions the state space into `ω`-synchronizing classes: every pair is
/// evolved from time 0 until it coalesces or becomes insulated.
pub fn synchronizing_classes(
    rds: &RdsRepresentation,
    scenario: &Scenario,
    structure: &InsulationStructure,
    pi: &StationaryDistribution,
    horizon: u64,
) -> Result<SynchronizingClasses, TwoPointError> {
    let n = rds.len();
    let mut points: Vec<usize> = (0..n).collect();
    let mut unresolved: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .collect();
    let mut uf = UnionFind((0..n).collect());
    let mut steps = 0;
    loop {
        unresolved.retain(|&(x, y)| {
            let (u, v) = (points[x], points[y]);
            if u == v {
                uf.union(x, y);
                false
            } else {
                !structure.insulated(u, v)
            }
        });
        if unresolved.is_empty() {
            break;
        }
        if steps == horizon {
            return Err(TwoPointError::HorizonExceeded { horizon, unresolved });
        }
        rds.step_in_place(scenario, steps as i64, &mut points);
        steps += 1;
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        let r = uf.find(x);
        by_root[r].push(x);
    }
    let classes: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
    let masses = classes
        .iter()
        .map(|c| c.iter().map(|&x| pi.mass[x]).sum())
        .collect();
    Ok(SynchronizingClasses {
        classes,
        masses,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::chain::stationary_distribution;
    use crate::rds::independent_rds;

    #[test]
    fn epsilon_coupling_probability() {
        let q = two_point_kernel(&catalog::epsilon_rds(0.2)).unwrap();
        assert!((q.prob((0, 1), (0, 0)) - 0.1).abs() < 1e-15);
        assert!((q.prob((0, 1), (1, 1)) - 0.1).abs() < 1e-15);
        assert!((q.prob((0, 1), (1, 0)) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn independent_two_state_matches_enumerated_maps() {
        let rds = independent_rds(catalog::two_state_half_kernel());
        let q = two_point_kernel(&rds).unwrap();
        assert_eq!(q.prob((0, 1), (0, 0)), 0.25);
        // Oracle: Q of the explicit family of all 4 effective maps.
        let explicit = crate::rds::explicit_rds(rds.effective_maps(16).unwrap(), catalog::two_state_half_kernel()).unwrap();
        let q_explicit = two_point_kernel(&explicit).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let (from, to) = (q.pair(a), q.pair(b));
                assert!((q.prob(from, to) - q_explicit.prob(from, to)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_rows_stay_diagonal() {
        for rds in [catalog::four_state_diagonal_rds(), catalog::four_state_independent_rds(), catalog::epsilon_rds(0.5)] {
            let q = two_point_kernel(&rds).unwrap();
            assert!(q.max_row_deviation() < 1e-12);
            assert!(q.max_marginal_deviation(&rds) < 1e-12);
            for x in 0..rds.len() {
                for &(t, _) in q.row(x, x) {
                    let (u, v) = q.pair(t);
                    assert_eq!(u, v);
                }
            }
        }
    }

    #[test]
    fn pair_cap() {
        let err = two_point_kernel_with_cap(&catalog::four_state_independent_rds(), 15).unwrap_err();
        assert_eq!(err, TwoPointError::StateSpaceTooLarge { pairs: 16, cap: 15 });
    }

    #[test]
    fn diagonal_rds_insulation() {
        let (q, s) = analyze(&catalog::four_state_diagonal_rds()).unwrap();
        assert_eq!(s.insulated_pairs(), vec![(0, 2), (1, 3)]);
        assert_eq!(s.kappa_hat, 2);
        assert_eq!(s.witness, vec![0, 2]);
        assert_eq!(s.delta.len(), 8);
        assert_eq!(s.delta_exit(&q), None);
    }

    #[test]
    fn independent_rds_has_no_insulation() {
        let (_, s) = analyze(&catalog::four_state_independent_rds()).unwrap();
        assert!(s.insulated_pairs().is_empty());
        assert_eq!(s.kappa_hat, 1);
        assert_eq!(s.witness, vec![0]);
    }

    #[test]
    fn periodic_classes_are_insulated() {
        let (_, s) = analyze(&independent_rds(catalog::deterministic_cycle(2))).unwrap();
        assert_eq!(s.insulated_pairs(), vec![(0, 1)]);
        let (_, s) = analyze(&independent_rds(catalog::deterministic_cycle(3))).unwrap();
        assert_eq!(s.kappa_hat, 3);
    }

    #[test]
    fn clique_cap() {
        let mut relation = vec![vec![true; 6]; 6];
        for (x, row) in relation.iter_mut().enumerate() {
            row[x] = false;
            row[5] = false;
        }
        relation[5] = vec![false; 6];
        assert_eq!(
            maximum_insulated_sets(&relation, 4),
            Err(TwoPointError::CliqueTooLarge { states: 5, cap: 4 })
        );
        assert_eq!(maximum_insulated_sets(&relation, 5), Ok((5, vec![0, 1, 2, 3, 4])));
        let empty = vec![vec![false; 100]; 100];
        assert_eq!(maximum_insulated_sets(&empty, 4), Ok((1, vec![0])));
    }

    fn dist(mass: &[f64]) -> StationaryDistribution {
        StationaryDistribution { mass: mass.to_vec(), residual: 0.0 }
    }

    #[test]
    fn partition_feasibility() {
        let uniform = dist(&[0.25; 4]);
        match kappa_partition_feasible(&uniform, 2) {
            PartitionFeasibility::Feasible { blocks } => {
                assert_eq!(blocks.len(), 2);
                for b in blocks {
                    assert_eq!(b.len(), 2);
                }
            }
            other => panic!("{other:?}"),
        }
        assert!(!kappa_partition_feasible(&dist(&[0.5, 0.3, 0.2]), 3).is_feasible());
        assert_eq!(
            kappa_partition_feasible(&dist(&[0.5, 0.3, 0.2]), 1),
            PartitionFeasibility::Feasible { blocks: vec![vec![0, 1, 2]] }
        );
        // Needs a non-trivial grouping: {0.1, 0.4}, {0.2, 0.3}.
        let tricky = dist(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(
            kappa_partition_feasible(&tricky, 2),
            PartitionFeasibility::Feasible { blocks: vec![vec![0, 3], vec![1, 2]] }
        );
        // Every mass ≤ ½ but no subset sums to ½.
        assert!(matches!(
            kappa_partition_feasible(&dist(&[0.3, 0.3, 0.3, 0.1 - 1e-6, 1e-6]), 2),
            PartitionFeasibility::Infeasible { .. }
        ));
        let many = dist(&vec![1.0 / 30.0; 30]);
        assert!(matches!(kappa_partition_feasible(&many, 3), PartitionFeasibility::Undecided { .. }));
    }

    /// Brute-force oracle: try every assignment of states to k labelled blocks.
    fn brute_feasible(mass: &[f64], k: usize) -> bool {
        let n = mass.len();
        let total = k.pow(n as u32);
        (0..total).any(|mut code| {
            let mut sums = vec![0.0; k];
            for &m in mass {
                sums[code % k] += m;
                code /= k;
            }
            sums.iter().all(|s| (s - 1.0 / k as f64).abs() <= 1e-9)
        })
    }

    #[test]
    fn partition_agrees_with_brute_force() {
        let cases: Vec<Vec<f64>> = vec![
            vec![1.0 / 6.0; 6],
            vec![0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
            vec![0.4, 0.1, 0.2, 0.15, 0.15],
            vec![0.25, 0.25, 0.2, 0.3],
            vec![0.1, 0.15, 0.25, 0.2, 0.3],
        ];
        for mass in cases {
            for k in 1..=mass.len().min(4) {
                let got = kappa_partition_feasible(&dist(&mass), k).is_feasible();
                assert_eq!(got, brute_feasible(&mass, k), "{mass:?} k={k}");
            }
        }
    }

    fn find_scenario(rds: &RdsRepresentation, time: i64, map: usize) -> Scenario {
        (0..).map(|i| Scenario::derive(77, i)).find(|s| rds.selected_map(s, time) == Some(map)).unwrap()
    }

    #[test]
    fn synchronizing_classes_diagonal() {
        let rds = catalog::four_state_diagonal_rds();
        let (_, s) = analyze(&rds).unwrap();
        let pi = stationary_distribution(rds.kernel()).unwrap();
        let scenario = find_scenario(&rds, 0, 0);
        let classes = synchronizing_classes(&rds, &scenario, &s, &pi, 100).unwrap();
        assert_eq!(classes.classes, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(classes.masses, vec![0.5, 0.5]);
        assert_eq!(classes.steps, 1);
    }

    #[test]
    fn synchronizing_classes_independent() {
        let rds = catalog::four_state_independent_rds();
        let (_, s) = analyze(&rds).unwrap();
        let pi = stationary_distribution(rds.kernel()).unwrap();
        for i in 0..50 {
            let c = synchronizing_classes(&rds, &Scenario::derive(3, i), &s, &pi, default_sync_horizon(4)).unwrap();
            assert_eq!(c.classes, vec![vec![0, 1, 2, 3]]);
            assert!((c.masses[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn horizon_exceeded_reports_pairs() {
        let rds = catalog::four_state_independent_rds();
        let (_, s) = analyze(&rds).unwrap();
        let pi = stationary_distribution(rds.kernel()).unwrap();
        match synchronizing_classes(&rds, &Scenario::new(1), &s, &pi, 0) {
            Err(TwoPointError::HorizonExceeded { unresolved, .. }) => assert_eq!(unresolved.len(), 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dot_dump_lists_edges() {
        let rds = catalog::epsilon_rds(0.5);
        let q = two_point_kernel(&rds).unwrap();
        let dot = q.to_dot(rds.kernel().states());
        assert!(dot.starts_with("digraph Q {"));
        assert!(dot.contains("\"a,b\" -> \"a,a\""));
    }
}

//! The invariant suite behind `rds-sync verify`.
//!
//! Each check counts how many individual assertions it made and how many
//! failed. Exact checks use the fixed tolerances of their modules;
//! statistical checks use 4 standard errors (5 for the attraction-time
//! bound, which combines several estimates).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attractor::{
    pullback_attractor, pullback_attractor_at, verify_invariance, AttractorError,
};
use crate::chain::{
    hitting_time_moments, is_ergodic_degree_2, period, period_is_consistent,
    stationary_distribution, DEGREE_TWO_IDENTITY_TOLERANCE, RETURN_TIME_TOLERANCE,
    ROW_SUM_TOLERANCE, STATIONARY_RESIDUAL_TOLERANCE,
};
use crate::hitting::{attractor_hit_time, sync_time, TimeOutcome};
use crate::noise::Scenario;
use crate::rds::{RdsRepresentation, MARGINAL_TOLERANCE};
use crate::two_point::{
    analyze, default_sync_horizon, kappa_partition_feasible, synchronizing_classes,
    PartitionFeasibility, MASS_TOLERANCE,
};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub master_seed: u128,
    /// Seeds for the cocycle, invariance and permanence checks.
    pub seeds: u64,
    /// Largest `n + m` in the cocycle check and `n` in the insulation check.
    pub max_steps: u64,
    /// Consecutive steps per seed for `φ_ω(A(ω)) = A(θω)`.
    pub invariance_steps: u64,
    /// Scenarios for attractor cardinality, membership and class laws.
    pub scenarios: u64,
    /// Scenarios for the one-step marginal law.
    pub marginal_scenarios: u64,
    /// Scenarios per start state for the forward-attraction and time-bound checks.
    pub time_scenarios: u64,
    pub horizon: u64,
    pub max_back: u64,
    pub tolerances: Tolerances,
}

/// Exact-check tolerances; the defaults are the module constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub row_sum: f64,
    pub stationary_residual: f64,
    pub return_time: f64,
    pub degree_two: f64,
    pub marginal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            row_sum: ROW_SUM_TOLERANCE,
            stationary_residual: STATIONARY_RESIDUAL_TOLERANCE,
            return_time: RETURN_TIME_TOLERANCE,
            degree_two: DEGREE_TWO_IDENTITY_TOLERANCE,
            marginal: MARGINAL_TOLERANCE,
        }
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            master_seed: 0x5eed,
            seeds: 100,
            max_steps: 20,
            invariance_steps: 50,
            scenarios: 1_000,
            marginal_scenarios: 100_000,
            time_scenarios: 1_000,
            horizon: 10_000,
            max_back: crate::attractor::DEFAULT_MAX_BACK,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckResult {
    pub name: String,
    pub checks: u64,
    pub failures: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Default)]
struct Tally {
    checks: u64,
    failures: u64,
    first_failure: Option<String>,
}

impl Tally {
    fn assert(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.failures += other.failures;
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
        self
    }

    fn finish(self, name: &str) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            checks: self.checks,
            failures: self.failures,
            first_failure: self.first_failure,
        }
    }
}

fn par_tally(count: u64, f: impl Fn(u64, &mut Tally) + Sync) -> Tally {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            f(i, &mut t);
            t
        })
        .reduce(Tally::default, Tally::merge)
}

fn sorted_distinct(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Runs every invariant on one representation. Errors mean the input is
/// outside the suite's domain (reducible chain, oversized state space) or a
/// pullback did not converge; check failures are reported, not raised.
pub fn verify_all(rds: &RdsRepresentation, config: &VerifyConfig) -> Result<VerifyReport, Error> {
    let kernel = rds.kernel();
    let n = rds.len();
    let tol = &config.tolerances;
    let all: Vec<usize> = (0..n).collect();
    let scenario = |stream: u128, i: u64| Scenario::derive(config.master_seed ^ (stream << 96), i);
    let mut results = Vec::new();

    // Chain.
    let mut t = Tally::default();
    for x in 0..n {
        let sum: f64 = kernel.row(x).iter().map(|e| e.1).sum();
        t.assert((sum - 1.0).abs() <= tol.row_sum, || {
            format!("row {} sums to {sum}", kernel.label(x))
        });
    }
    results.push(t.finish("row_stochasticity"));

    let pi = stationary_distribution(kernel)?;
    let mut t = Tally::default();
    t.assert(pi.residual < tol.stationary_residual, || {
        format!("residual {:e}", pi.residual)
    });
    let total: f64 = pi.mass.iter().sum();
    t.assert((total - 1.0).abs() <= 1e-12, || format!("mass sums to {total}"));
    t.assert(pi.mass.iter().all(|&m| m > 0.0), || "non-positive mass".into());
    results.push(t.finish("stationary_residual"));

    let mut t = Tally::default();
    for y in 0..n {
        let h = hitting_time_moments(kernel, y)?;
        let product = h.first_moment[y] * pi.mass[y];
        t.assert((product - 1.0).abs() <= tol.return_time, || {
            format!("E[τ]π = {product} at {}", kernel.label(y))
        });
    }
    results.push(t.finish("return_time_identity"));

    let degree_two = is_ergodic_degree_2(kernel)?;
    let mut t = Tally::default();
    for target in &degree_two.targets {
        t.assert(target.relative_gap <= tol.degree_two, || {
            format!("relative gap {:e} at {}", target.relative_gap, kernel.label(target.target))
        });
    }
    results.push(t.finish("second_moment_identity"));

    let periodicity = period(kernel)?;
    let mut t = Tally::default();
    t.assert(period_is_consistent(kernel, &periodicity), || {
        "a transition leaves the cyclic class order".into()
    });
    results.push(t.finish("period_consistency"));

    // Representation.
    let mut t = Tally::default();
    let diff = rds.induced_kernel().max_abs_difference(kernel);
    t.assert(diff <= tol.marginal, || format!("induced kernel off by {diff:e}"));
    results.push(t.finish("induced_kernel_exact"));

    let t = par_tally(config.seeds, |i, t| {
        let s = scenario(1, i);
        let start = (s.draw(0, 0).word() % 1000) as i64 - 500;
        for total in 0..=config.max_steps {
            for m in 0..=total {
                let k = total - m;
                let direct = rds.evolve(&s, start, k + m, &all);
                let first = rds.evolve(&s, start, m, &all);
                let composed = rds.evolve(&s, start + m as i64, k, &first);
                for x in 0..n {
                    t.assert(direct[x] == composed[x], || {
                        format!("seed {i}, start {start}, n={k}, m={m}, state {x}")
                    });
                }
            }
        }
    });
    results.push(t.finish("cocycle_law"));

    let counts: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut c = vec![0u64; n];
            for i in 0..config.marginal_scenarios {
                c[rds.image(&scenario(2, i), 0, x)] += 1;
            }
            c
        })
        .collect();
    let mut t = Tally::default();
    let draws = config.marginal_scenarios as f64;
    for x in 0..n {
        for y in 0..n {
            let p = kernel.prob(x, y);
            let freq = counts[x][y] as f64 / draws;
            let bound = 4.0 * (p * (1.0 - p) / draws).sqrt();
            t.assert((freq - p).abs() <= bound, || {
                format!("P({}, {}) = {p}, observed {freq}", kernel.label(x), kernel.label(y))
            });
        }
    }
    results.push(t.finish("marginal_law"));

    let t = par_tally(config.seeds, |i, t| {
        let s = scenario(3, i);
        let mut points = all.clone();
        let mut merged = vec![vec![false; n]; n];
        for step in 0..config.max_steps {
            rds.step_in_place(&s, step as i64, &mut points);
            for x in 0..n {
                for y in x + 1..n {
                    let now = points[x] == points[y];
                    t.assert(now || !merged[x][y], || {
                        format!("seed {i}: {x} and {y} separated at step {step}")
                    });
                    merged[x][y] |= now;
                }
            }
        }
    });
    results.push(t.finish("coalescence_permanence"));

    // Two-point structure.
    let (q, structure) = analyze(rds)?;
    let mut t = Tally::default();
    t.assert(q.max_row_deviation() <= tol.row_sum * n as f64, || {
        format!("Q row deviation {:e}", q.max_row_deviation())
    });
    let marginal = q.max_marginal_deviation(rds);
    t.assert(marginal <= tol.marginal, || format!("Q marginal deviation {marginal:e}"));
    for x in 0..n {
        for &(target, _) in q.row(x, x) {
            let (u, v) = q.pair(target);
            t.assert(u == v, || format!("diagonal pair ({x},{x}) leaves the diagonal"));
        }
    }
    results.push(t.finish("two_point_kernel"));

    let mut t = Tally::default();
    for x in 0..n {
        t.assert(!structure.insulated(x, x), || format!("{x} insulated from itself"));
        for y in 0..n {
            t.assert(structure.insulated(x, y) == structure.insulated(y, x), || {
                format!("relation asymmetric at ({x},{y})")
            });
        }
    }
    results.push(t.finish("insulation_symmetric_irreflexive"));

    let mut t = Tally::default();
    for &(x, y) in &structure.delta {
        for &(target, _) in q.row(x, y) {
            let (u, v) = q.pair(target);
            t.assert(structure.in_delta(u, v), || format!("({x},{y}) -> ({u},{v}) leaves Δ"));
        }
    }
    results.push(t.finish("delta_absorbing"));

    let mut insulated_sets = vec![structure.witness.clone()];
    insulated_sets.extend(structure.insulated_pairs().into_iter().map(|(x, y)| vec![x, y]));
    let t = par_tally(config.seeds, |i, t| {
        let s = scenario(4, i);
        for set in &insulated_sets {
            for steps in 0..=config.max_steps {
                let image = rds.evolve(&s, 0, steps, set);
                t.assert(structure.is_insulated_set(&image), || {
                    format!("seed {i}: {set:?} maps to {image:?} after {steps} steps")
                });
            }
        }
    });
    results.push(t.finish("insulation_invariance"));

    let mut t = Tally::default();
    let feasible = kappa_partition_feasible(&pi, structure.kappa_hat);
    t.assert(!matches!(feasible, PartitionFeasibility::Infeasible { .. }), || {
        format!("no partition into {} blocks of equal mass", structure.kappa_hat)
    });
    results.push(t.finish("kappa_partition"));

    // Attractor.
    let invariance: Vec<Result<Tally, AttractorError>> = (0..config.seeds)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            let report = verify_invariance(rds, &scenario(5, i), &structure, config.invariance_steps, config.max_back)?;
            for k in 0..report.checks as i64 {
                t.assert(!report.failures.contains(&k), || format!("seed {i}, time {k}"));
            }
            Ok(t)
        })
        .collect();
    let mut t = Tally::default();
    for r in invariance {
        t = t.merge(r?);
    }
    results.push(t.finish("attractor_invariance"));

    let attractors = (0..config.scenarios)
        .into_par_iter()
        .map(|i| pullback_attractor(rds, &scenario(6, i), &structure, config.max_back))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Tally::default();
    let mut membership = vec![0u64; n];
    for (i, a) in attractors.iter().enumerate() {
        t.assert(a.states.len() == structure.kappa_hat, || {
            format!("scenario {i}: |A| = {} but κ̂ = {}", a.states.len(), structure.kappa_hat)
        });
        t.assert(structure.is_insulated_set(&a.states), || {
            format!("scenario {i}: attractor {:?} not insulated", a.states)
        });
        for &x in &a.states {
            membership[x] += 1;
        }
    }
    results.push(t.finish("attractor_cardinality"));

    let mut t = Tally::default();
    let m = config.scenarios as f64;
    for x in 0..n {
        let p = (structure.kappa_hat as f64 * pi.mass[x]).min(1.0);
        let freq = membership[x] as f64 / m;
        let bound = 4.0 * (p * (1.0 - p) / m).sqrt() + 1e-12;
        t.assert((freq - p).abs() <= bound, || {
            format!("P({} ∈ A) = {freq}, expected {p}", kernel.label(x))
        });
    }
    results.push(t.finish("membership_law"));

    let class_results: Vec<Result<Tally, Error>> = (0..config.scenarios)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            let classes = synchronizing_classes(rds, &scenario(7, i), &structure, &pi, default_sync_horizon(n))?;
            t.assert(classes.classes.len() == structure.kappa_hat, || {
                format!("scenario {i}: {} classes", classes.classes.len())
            });
            let target = 1.0 / structure.kappa_hat as f64;
            for mass in &classes.masses {
                t.assert((mass - target).abs() <= MASS_TOLERANCE, || {
                    format!("scenario {i}: class mass {mass}")
                });
            }
            Ok(t)
        })
        .collect();
    let mut t = Tally::default();
    for r in class_results {
        t = t.merge(r?);
    }
    results.push(t.finish("synchronizing_classes"));

    // Times.
    let per_state: Vec<Result<(Tally, Tally, Tally), AttractorError>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut forward = Tally::default();
            let mut identity = Tally::default();
            let mut bound = Tally::default();
            let mut hit_sum = 0.0;
            let mut hit_sq = 0.0;
            let mut sync_sum = vec![0.0; n];
            let mut sync_sq = vec![0.0; n];
            for i in 0..config.time_scenarios {
                let s = scenario(8, i);
                let hit = attractor_hit_time(rds, &s, x, &structure, config.horizon, config.max_back)?;
                forward.assert(hit != TimeOutcome::Censored, || {
                    format!("state {x}, scenario {i}: not attracted within {}", config.horizon)
                });
                let a = pullback_attractor(rds, &s, &structure, config.max_back)?;
                let via_pairs = a
                    .states
                    .iter()
                    .map(|&y| sync_time(rds, &s, x, y, config.horizon, Some(&structure)).resolved())
                    .collect::<Option<Vec<_>>>()
                    .map(|v| v.into_iter().max().unwrap_or(0));
                if let (Some(h), Some(p)) = (hit.resolved(), via_pairs) {
                    identity.assert(h == p, || format!("state {x}, scenario {i}: T_A = {h}, max T_Δ = {p}"));
                }
                let h = hit.resolved().unwrap_or(config.horizon) as f64;
                hit_sum += h;
                hit_sq += h * h;
                for y in 0..n {
                    let v = sync_time(rds, &s, x, y, config.horizon, Some(&structure))
                        .resolved()
                        .unwrap_or(config.horizon) as f64;
                    sync_sum[y] += v;
                    sync_sq[y] += v * v;
                }
            }
            let m = config.time_scenarios as f64;
            let var = |sum: f64, sq: f64| ((sq - sum * sum / m) / (m - 1.0).max(1.0)).max(0.0) / m;
            let hit_mean = hit_sum / m;
            let mut rhs = 0.0;
            let mut combined_var = var(hit_sum, hit_sq);
            for y in 0..n {
                let w = structure.kappa_hat as f64 * pi.mass[y];
                rhs += w * sync_sum[y] / m;
                combined_var += w * w * var(sync_sum[y], sync_sq[y]);
            }
            let slack = 5.0 * combined_var.sqrt();
            bound.assert(hit_mean <= rhs + slack + 1e-12, || {
                format!("state {x}: E[T_A] ≈ {hit_mean} > {rhs} + {slack}")
            });
            Ok((forward, identity, bound))
        })
        .collect();
    let (mut forward, mut identity, mut bound) = (Tally::default(), Tally::default(), Tally::default());
    for r in per_state {
        let (f, i, b) = r?;
        forward = forward.merge(f);
        identity = identity.merge(i);
        bound = bound.merge(b);
    }
    results.push(forward.finish("forward_attraction"));
    results.push(identity.finish("hit_time_identity"));
    results.push(bound.finish("attraction_time_bound"));

    // Anchored pullbacks agree with forward images of A(ω) at every shift.
    let t = par_tally(config.seeds.min(20), |i, t| {
        let s = scenario(9, i);
        if let Ok(a0) = pullback_attractor(rds, &s, &structure, config.max_back) {
            for k in 1..=config.max_steps {
                if let Ok(ak) = pullback_attractor_at(rds, &s, &structure, k as i64, config.max_back) {
                    let pushed = sorted_distinct(rds.evolve(&s, 0, k, &a0.states));
                    t.assert(pushed == ak.states, || format!("seed {i}, shift {k}"));
                }
            }
        }
    });
    results.push(t.finish("attractor_shift_consistency"));

    Ok(VerifyReport {
        passed: results.iter().all(CheckResult::passed),
        checks: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            seeds: 10,
            scenarios: 200,
            marginal_scenarios: 20_000,
            time_scenarios: 200,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn catalog_representations_pass() {
        for rds in [
            catalog::four_state_diagonal_rds(),
            catalog::four_state_independent_rds(),
            catalog::epsilon_rds(0.3),
            crate::rds::independent_rds(catalog::deterministic_cycle(3)),
        ] {
            let report = verify_all(&rds, &quick()).unwrap();
            for c in &report.checks {
                assert!(c.passed(), "{c:?}");
                assert!(c.checks > 0, "{} made no checks", c.name);
            }
        }
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let k = crate::chain::TransitionKernel::from_rows(
            vec!["a".into(), "b".into()],
            vec![vec![(0, 1.0)], vec![(1, 1.0)]],
        )
        .unwrap();
        let err = verify_all(&crate::rds::independent_rds(k), &quick()).unwrap_err();
        assert!(matches!(err, Error::Chain(_)));
    }
}

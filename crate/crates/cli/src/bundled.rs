//! Bundled example chains with their expected outputs pinned at
//! statistical tolerances.

use rayon::prelude::*;
use rds_sync::attractor::{estimate_kappa, pullback_attractor, AttractorReport, DEFAULT_MAX_BACK};
use rds_sync::catalog;
use rds_sync::chain::{is_ergodic_degree_2, stationary_distribution};
use rds_sync::hitting::{expected_times, TimeMode};
use rds_sync::noise::Scenario;
use rds_sync::rds::{independent_rds, RdsRepresentation};
use rds_sync::two_point::{analyze, default_sync_horizon, synchronizing_classes, InsulationStructure};

use crate::args::ExampleName;
use crate::commands::cftp_summary;
use crate::failure::Failure;
use crate::report::{Bound, ExampleParameters, ExampleResult, Expectation, TruncationLevel};

pub struct Params {
    pub epsilon: f64,
    pub truncation: Option<usize>,
    pub scenarios: Option<u64>,
    pub horizon: Option<u64>,
}

/// Independent master seed for the `tag`-th sub-experiment.
fn stream(master: u128, tag: u64) -> u128 {
    Scenario::derive(master, tag).seed()
}

fn exact(name: impl Into<String>, observed: f64, target: f64) -> Expectation {
    Expectation::new(name, observed, Bound::Exact { target })
}

fn near(name: impl Into<String>, observed: f64, target: f64, tolerance: f64) -> Expectation {
    Expectation::new(name, observed, Bound::Near { target, tolerance })
}

struct Base {
    rds: RdsRepresentation,
    structure: InsulationStructure,
}

impl Base {
    fn new(rds: RdsRepresentation) -> Result<Self, Failure> {
        let (_, structure) = analyze(&rds)?;
        Ok(Base { rds, structure })
    }

    fn labels(&self, set: &[usize]) -> Vec<String> {
        set.iter().map(|&x| self.rds.kernel().label(x).to_string()).collect()
    }

    fn result(&self, name: ExampleName, parameters: ExampleParameters) -> ExampleResult {
        ExampleResult {
            name: name.as_str().to_string(),
            parameters,
            states: self.rds.kernel().states().to_vec(),
            kappa_hat: self.structure.kappa_hat,
            witness: self.labels(&self.structure.witness),
            stationary: None,
            attractor: None,
            cftp: None,
            hit_times: None,
            levels: None,
            expectations: Vec::new(),
            passed: false,
        }
    }

    fn kappa_checks(&self, report: &AttractorReport, kappa: usize, out: &mut Vec<Expectation>) {
        out.push(exact("kappa_hat", self.structure.kappa_hat as f64, kappa as f64));
        out.push(exact("kappa", report.kappa as f64, kappa as f64));
        let at_kappa = report.cardinality_histogram.get(&kappa).copied().unwrap_or(0);
        out.push(exact(
            format!("scenarios_with_cardinality_{kappa}"),
            at_kappa as f64,
            report.n_scenarios as f64,
        ));
    }
}

pub fn run(name: ExampleName, params: &Params, master: u128) -> Result<ExampleResult, Failure> {
    let mut result = match name {
        ExampleName::FourStateIndependent => four_state_independent(params, master)?,
        ExampleName::FourStateF1f2 => four_state_f1f2(params, master)?,
        ExampleName::EpsilonTwoState => epsilon_two_state(params, master)?,
        ExampleName::TruncatedRandomWalk => truncated_random_walk(params, master)?,
        ExampleName::HeavyTail => heavy_tail(params, master)?,
    };
    result.passed = result.expectations.iter().all(|e| e.passed);
    Ok(result)
}

const CFTP_SAMPLES: u64 = 100_000;
const CFTP_MAX_HORIZON: u64 = 1 << 20;
const IDENTIFICATION_SCENARIOS: u64 = 1_000;
const CLASS_SCENARIOS: u64 = 1_000;

fn four_state_independent(params: &Params, master: u128) -> Result<ExampleResult, Failure> {
    let base = Base::new(catalog::four_state_independent_rds())?;
    let scenarios = params.scenarios.unwrap_or(10_000);
    let report = estimate_kappa(&base.rds, &base.structure, master, scenarios, DEFAULT_MAX_BACK)?;
    let mut checks = Vec::new();
    base.kappa_checks(&report, 1, &mut checks);
    for (x, &m) in report.membership.iter().enumerate() {
        checks.push(near(format!("membership[{}]", base.rds.kernel().label(x)), m, 0.25, 0.02));
    }
    let (cftp, _) = cftp_summary(&base.rds, &base.structure, stream(master, 1), CFTP_SAMPLES, CFTP_MAX_HORIZON)?;
    checks.push(Expectation::new(
        "cftp_chi_square_p_value",
        cftp.chi_square.p_value,
        Bound::Above { min: 1e-4 },
    ));
    checks.push(Expectation::new(
        "cftp_total_variation",
        cftp.total_variation,
        Bound::Below { max: 0.01 },
    ));
    let mut result = base.result(
        ExampleName::FourStateIndependent,
        ExampleParameters {
            scenarios,
            horizon: None,
            epsilon: None,
            truncation: None,
        },
    );
    result.stationary = Some(cftp.stationary.clone());
    result.attractor = Some(report);
    result.cftp = Some(cftp);
    result.expectations = checks;
    Ok(result)
}

fn four_state_f1f2(params: &Params, master: u128) -> Result<ExampleResult, Failure> {
    let base = Base::new(catalog::four_state_diagonal_rds())?;
    let rds = &base.rds;
    let scenarios = params.scenarios.unwrap_or(10_000);
    let report = estimate_kappa(rds, &base.structure, master, scenarios, DEFAULT_MAX_BACK)?;
    let mut checks = Vec::new();
    base.kappa_checks(&report, 2, &mut checks);
    for (x, &m) in report.membership.iter().enumerate() {
        checks.push(Expectation::new(
            format!("membership[{}]", rds.kernel().label(x)),
            m,
            Bound::Range { lo: 0.48, hi: 0.52 },
        ));
    }

    // A(ω) is {a, c} when f2 acts at time −1 and {b, d} when f1 does.
    let id_master = stream(master, 1);
    let mismatches = (0..IDENTIFICATION_SCENARIOS)
        .into_par_iter()
        .map(|i| {
            let s = Scenario::derive(id_master, i);
            let a = pullback_attractor(rds, &s, &base.structure, DEFAULT_MAX_BACK)?;
            let expected = match rds.selected_map(&s, -1) {
                Some(1) => vec![0, 2],
                _ => vec![1, 3],
            };
            Ok((a.states != expected) as u64)
        })
        .collect::<Result<Vec<u64>, Failure>>()?
        .into_iter()
        .sum::<u64>();
    checks.push(exact("attractor_identification_mismatches", mismatches as f64, 0.0));

    let pi = stationary_distribution(rds.kernel())?;
    let class_master = stream(master, 2);
    let classes = (0..CLASS_SCENARIOS)
        .into_par_iter()
        .map(|i| {
            synchronizing_classes(
                rds,
                &Scenario::derive(class_master, i),
                &base.structure,
                &pi,
                default_sync_horizon(rds.len()),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::from)?;
    let with_two = classes.iter().filter(|c| c.classes.len() == 2).count();
    let worst_mass = classes
        .iter()
        .flat_map(|c| c.masses.iter())
        .map(|m| (m - 0.5).abs())
        .fold(0.0, f64::max);
    checks.push(exact("scenarios_with_two_classes", with_two as f64, CLASS_SCENARIOS as f64));
    checks.push(near("worst_class_mass_deviation", worst_mass, 0.0, 1e-12));

    let mut result = base.result(
        ExampleName::FourStateF1f2,
        ExampleParameters {
            scenarios,
            horizon: None,
            epsilon: None,
            truncation: None,
        },
    );
    result.stationary = Some(pi.mass);
    result.attractor = Some(report);
    result.expectations = checks;
    Ok(result)
}

fn epsilon_two_state(params: &Params, master: u128) -> Result<ExampleResult, Failure> {
    let eps = params.epsilon;
    let base = Base::new(catalog::epsilon_rds(eps))?;
    let scenarios = params.scenarios.unwrap_or(100_000);
    let horizon = params.horizon.unwrap_or(10_000);
    let estimate = expected_times(
        &base.rds,
        &base.structure,
        TimeMode::Hit { x: 0 },
        master,
        scenarios,
        horizon,
        DEFAULT_MAX_BACK,
    )?;
    let target = 1.0 / (2.0 * eps);
    let checks = vec![
        exact("kappa_hat", base.structure.kappa_hat as f64, 1.0),
        near("mean_attraction_time[a]", estimate.censored_mean, target, 0.05 * target),
        exact("censored_samples", estimate.n_censored as f64, 0.0),
    ];
    let mut result = base.result(
        ExampleName::EpsilonTwoState,
        ExampleParameters {
            scenarios,
            horizon: Some(horizon),
            epsilon: Some(eps),
            truncation: None,
        },
    );
    result.hit_times = Some(estimate);
    result.expectations = checks;
    Ok(result)
}

fn truncated_random_walk(params: &Params, master: u128) -> Result<ExampleResult, Failure> {
    let level = params.truncation.unwrap_or(30);
    let base = Base::new(catalog::truncated_walk_shift_rds(level))?;
    let rds = &base.rds;
    let scenarios = params.scenarios.unwrap_or(1_000);
    let pi = stationary_distribution(rds.kernel())?;
    let mut checks = Vec::new();

    // Detailed balance π(x)/4 = 3π(x+1)/4 gives a truncated geometric law.
    let norm = (2.0 / 3.0) / (1.0 - 3f64.powi(-(level as i32 + 1)));
    let worst = (0..=level)
        .map(|x| (pi.mass[x] - norm * 3f64.powi(-(x as i32))).abs())
        .fold(0.0, f64::max);
    checks.push(near("stationary_geometric_deviation", worst, 0.0, 1e-12));

    let report = estimate_kappa(rds, &base.structure, master, scenarios, DEFAULT_MAX_BACK)?;
    base.kappa_checks(&report, 1, &mut checks);

    // Under either map two points get closer by at most one per step.
    let steps: i64 = 100;
    let walk_master = stream(master, 1);
    let violations: u64 = (0..scenarios)
        .into_par_iter()
        .map(|i| {
            let s = Scenario::derive(walk_master, i);
            let mut points: Vec<usize> = (0..=level).collect();
            let mut bad = 0;
            for t in 0..steps {
                let next = rds.step(&s, t, &points);
                for x in 0..points.len() {
                    for y in x + 1..points.len() {
                        let before = points[x].abs_diff(points[y]);
                        let after = next[x].abs_diff(next[y]);
                        bad += (after + 1 < before) as u64;
                    }
                }
                points = next;
            }
            bad
        })
        .sum();
    checks.push(exact("distance_contraction_violations", violations as f64, 0.0));
    let redirected = rds.kernel().truncation().map_or(0.0, |t| t.redirected_mass);
    checks.push(near("boundary_redirected_mass", redirected, 0.25, 1e-15));

    let mut result = base.result(
        ExampleName::TruncatedRandomWalk,
        ExampleParameters {
            scenarios,
            horizon: None,
            epsilon: None,
            truncation: Some(level as u64),
        },
    );
    result.stationary = Some(pi.mass);
    result.attractor = Some(report);
    result.expectations = checks;
    Ok(result)
}

fn heavy_tail(params: &Params, master: u128) -> Result<ExampleResult, Failure> {
    let top = params.truncation.unwrap_or(40);
    if top < 8 {
        return Err(Failure::spec("UsageError", "heavy-tail needs --truncation of at least 8"));
    }
    let scenarios = params.scenarios.unwrap_or(20_000);
    let horizon = params.horizon.unwrap_or(100_000);
    let mut levels = Vec::new();
    let mut last = None;
    for (tag, level) in [top / 4, top / 2, top].into_iter().enumerate() {
        let kernel = catalog::heavy_tail_kernel(level);
        let degree_two = is_ergodic_degree_2(&kernel)?;
        let redirected_mass = kernel.truncation().map_or(0.0, |t| t.redirected_mass);
        let base = Base::new(independent_rds(kernel))?;
        let estimate = expected_times(
            &base.rds,
            &base.structure,
            TimeMode::PiAveragedHit,
            stream(master, tag as u64),
            scenarios,
            horizon,
            DEFAULT_MAX_BACK,
        )?;
        levels.push(TruncationLevel {
            truncation: level,
            redirected_mass,
            expected_hitting_time: degree_two.targets[0].expected_from_pi,
            attraction_time: estimate,
        });
        last = Some(base);
    }
    let base = last.expect("three levels");

    let mut checks = Vec::new();
    for pair in levels.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let tag = format!("{}->{}", lo.truncation, hi.truncation);
        checks.push(Expectation::new(
            format!("expected_hitting_time_increase[{tag}]"),
            hi.expected_hitting_time - lo.expected_hitting_time,
            Bound::Above { min: 0.0 },
        ));
        let (a, b) = (&lo.attraction_time, &hi.attraction_time);
        let se = (a.standard_error.unwrap_or(f64::INFINITY).powi(2)
            + b.standard_error.unwrap_or(f64::INFINITY).powi(2))
        .sqrt();
        checks.push(Expectation::new(
            format!("attraction_time_increase_z[{tag}]"),
            (b.censored_mean - a.censored_mean) / se,
            Bound::Above { min: 3.0 },
        ));
    }
    for l in &levels {
        checks.push(Expectation::new(
            format!("censored_fraction[{}]", l.truncation),
            l.attraction_time.censored_fraction,
            Bound::Range { lo: 0.0, hi: 0.5 },
        ));
    }

    let mut result = base.result(
        ExampleName::HeavyTail,
        ExampleParameters {
            scenarios,
            horizon: Some(horizon),
            epsilon: None,
            truncation: Some(top as u64),
        },
    );
    result.levels = Some(levels);
    result.expectations = checks;
    Ok(result)
}

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use rds_sync::attractor::{cftp_samples, estimate_kappa};
use rds_sync::chain::{
    hitting_time_moments, is_ergodic_degree_2, period, period_is_consistent,
    stationary_distribution, validate_kernel_with_tolerance, HittingMoments,
};
use rds_sync::hitting::{expected_times, TimeMode};
use rds_sync::noise::{format_seed, Scenario};
use rds_sync::rds::RdsRepresentation;
use rds_sync::spec::ChainSpec;
use rds_sync::stats::{chi_square_test, histogram, total_variation};
use rds_sync::two_point::{analyze, kappa_partition_feasible, InsulationStructure};
use rds_sync::verify::{verify_all, Tolerances, VerifyConfig};
use serde::Serialize;

use crate::args::{Command, ModeArg};
use crate::bundled;
use crate::failure::Failure;
use crate::report::*;

pub struct Context {
    pub master: u128,
    pub tolerances: Tolerances,
    pub with_meta: bool,
    pub started: Instant,
}

/// What a subcommand produced, before it is written anywhere.
pub struct Rendered {
    pub stem: String,
    pub json: String,
    pub csv: String,
    pub failed: Vec<String>,
    pub summary: Vec<String>,
}

impl Context {
    fn envelope<T: Serialize>(&self, command: &str, result: T) -> String {
        let meta = self.with_meta.then(|| Meta {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            threads: rayon::current_num_threads(),
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        });
        let report = Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed: format_seed(self.master),
            meta,
            result,
        };
        let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
        text.push('\n');
        text
    }
}

fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String, Failure> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Failure::internal("CsvError", e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Failure::internal("CsvError", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::internal("CsvError", e.to_string()))
}

pub fn load_spec(path: &Path, tol: &Tolerances) -> Result<RdsRepresentation, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::spec("SpecRead", format!("{}: {e}", path.display())))?;
    let spec = ChainSpec::from_json(&text).map_err(|e| Failure::spec("SpecParse", e.to_string()))?;
    let kernel = validate_kernel_with_tolerance(&spec, tol.row_sum)?;
    Ok(RdsRepresentation::from_spec_with_tolerance(
        spec.rds.as_ref(),
        kernel,
        tol.marginal,
    )?)
}

fn labels(rds: &RdsRepresentation, set: &[usize]) -> Vec<String> {
    set.iter().map(|&x| rds.kernel().label(x).to_string()).collect()
}

fn state_index(rds: &RdsRepresentation, label: Option<&String>, flag: &str) -> Result<usize, Failure> {
    let label = label.ok_or_else(|| Failure::spec("UsageError", format!("--{flag} is required for this mode")))?;
    rds.kernel()
        .index_of(label)
        .ok_or_else(|| Failure::spec("UnknownState", format!("no state named {label:?}")))
}

pub fn run(command: &Command, ctx: &Context) -> Result<Rendered, Failure> {
    match command {
        Command::Analyze(spec) => run_analyze(&load_spec(&spec.spec, &ctx.tolerances)?, ctx),
        Command::Insulation { spec, dot } => run_insulation(&load_spec(&spec.spec, &ctx.tolerances)?, dot.as_deref(), ctx),
        Command::Attractor {
            spec,
            scenarios,
            max_back,
        } => run_attractor(&load_spec(&spec.spec, &ctx.tolerances)?, *scenarios, *max_back, ctx),
        Command::Cftp {
            spec,
            scenarios,
            horizon,
        } => {
            let rds = load_spec(&spec.spec, &ctx.tolerances)?;
            let (_, structure) = analyze(&rds)?;
            let (result, csv) = cftp_summary(&rds, &structure, ctx.master, *scenarios, *horizon)?;
            let summary = vec![format!(
                "chi-square p = {:.4}, total variation = {:.5}",
                result.chi_square.p_value, result.total_variation
            )];
            Ok(Rendered {
                stem: "cftp".into(),
                json: ctx.envelope("cftp", result),
                csv,
                failed: Vec::new(),
                summary,
            })
        }
        Command::HitTimes {
            spec,
            mode,
            from,
            to,
            scenarios,
            horizon,
            max_back,
        } => {
            let rds = load_spec(&spec.spec, &ctx.tolerances)?;
            let mode = match mode {
                ModeArg::Sync => TimeMode::SyncPair {
                    x: state_index(&rds, from.as_ref(), "from")?,
                    y: state_index(&rds, to.as_ref(), "to")?,
                },
                ModeArg::Hit => TimeMode::Hit {
                    x: state_index(&rds, from.as_ref(), "from")?,
                },
                ModeArg::Pi => TimeMode::PiAveragedHit,
            };
            run_hit_times(&rds, mode, *scenarios, *horizon, *max_back, ctx)
        }
        Command::Verify {
            spec,
            scenarios,
            horizon,
        } => {
            let rds = load_spec(&spec.spec, &ctx.tolerances)?;
            let mut config = VerifyConfig {
                master_seed: ctx.master,
                tolerances: ctx.tolerances,
                ..VerifyConfig::default()
            };
            if let Some(s) = scenarios {
                config.scenarios = *s;
            }
            if let Some(h) = horizon {
                config.horizon = *h;
            }
            run_verify(&rds, &config, ctx)
        }
        Command::Example {
            name,
            epsilon,
            truncation,
            scenarios,
            horizon,
        } => {
            let params = bundled::Params {
                epsilon: *epsilon,
                truncation: truncation.map(|t| t as usize),
                scenarios: *scenarios,
                horizon: *horizon,
            };
            let result = bundled::run(*name, &params, ctx.master)?;
            let summary = result
                .expectations
                .iter()
                .map(|e| {
                    let verdict = if e.passed { "ok  " } else { "FAIL" };
                    format!("{verdict} {} = {} ({})", e.name, e.observed, describe(&e.bound))
                })
                .collect();
            let csv = expectation_csv(&result.expectations)?;
            let failed = failed_names(&result.expectations);
            Ok(Rendered {
                stem: format!("example-{}", name.as_str()),
                json: ctx.envelope("example", result),
                csv,
                failed,
                summary,
            })
        }
    }
}

pub fn describe(bound: &Bound) -> String {
    match *bound {
        Bound::Exact { target } => format!("= {target}"),
        Bound::Near { target, tolerance } => format!("{target} ± {tolerance}"),
        Bound::Range { lo, hi } => format!("in [{lo}, {hi}]"),
        Bound::Above { min } => format!("> {min}"),
        Bound::Below { max } => format!("< {max}"),
    }
}

#[derive(Serialize)]
struct ExpectationRow<'a> {
    name: &'a str,
    observed: f64,
    bound: String,
    passed: bool,
}

fn expectation_csv(checks: &[Expectation]) -> Result<String, Failure> {
    to_csv(checks.iter().map(|e| ExpectationRow {
        name: &e.name,
        observed: e.observed,
        bound: describe(&e.bound),
        passed: e.passed,
    }))
}

#[derive(Serialize)]
struct StateRow<'a> {
    state: &'a str,
    stationary: f64,
    cyclic_class: usize,
    return_time: f64,
    return_time_second_moment: f64,
}

fn run_analyze(rds: &RdsRepresentation, ctx: &Context) -> Result<Rendered, Failure> {
    let kernel = rds.kernel();
    let n = kernel.len();
    let pi = stationary_distribution(kernel)?;
    let periodicity = period(kernel)?;
    let moments: Vec<HittingMoments> = (0..n)
        .into_par_iter()
        .map(|y| hitting_time_moments(kernel, y))
        .collect::<Result<_, _>>()?;
    let degree_two = is_ergodic_degree_2(kernel)?;
    let return_times: Vec<f64> = moments.iter().map(|m| m.first_moment[m.target]).collect();
    let second: Vec<f64> = moments.iter().map(|m| m.second_moment[m.target]).collect();

    let mut checks = vec![Expectation::new(
        "stationary_residual",
        pi.residual,
        Bound::Below {
            max: ctx.tolerances.stationary_residual,
        },
    )];
    for y in 0..n {
        checks.push(Expectation::new(
            format!("return_time_times_mass[{}]", kernel.label(y)),
            return_times[y] * pi.mass[y],
            Bound::Near {
                target: 1.0,
                tolerance: ctx.tolerances.return_time,
            },
        ));
    }
    for t in &degree_two.targets {
        checks.push(Expectation::new(
            format!("second_moment_identity_gap[{}]", kernel.label(t.target)),
            t.relative_gap,
            Bound::Range {
                lo: 0.0,
                hi: ctx.tolerances.degree_two,
            },
        ));
    }
    checks.push(Expectation::new(
        "period_consistent",
        period_is_consistent(kernel, &periodicity) as u8 as f64,
        Bound::Exact { target: 1.0 },
    ));

    let mut class_of = vec![0; n];
    for (i, class) in periodicity.classes.iter().enumerate() {
        for &x in class {
            class_of[x] = i;
        }
    }
    let csv = to_csv((0..n).map(|x| StateRow {
        state: kernel.label(x),
        stationary: pi.mass[x],
        cyclic_class: class_of[x],
        return_time: return_times[x],
        return_time_second_moment: second[x],
    }))?;
    let failed = failed_names(&checks);
    let summary = vec![format!(
        "period {}, residual {:.2e}, ergodic of degree 2: {}",
        periodicity.period, pi.residual, degree_two.ergodic_degree_2
    )];
    let result = AnalyzeResult {
        states: kernel.states().to_vec(),
        stationary: pi.mass,
        stationary_residual: pi.residual,
        period: periodicity.period,
        cyclic_classes: periodicity.classes.iter().map(|c| labels(rds, c)).collect(),
        return_times,
        return_time_second_moments: second,
        degree_two,
        truncation: kernel.truncation(),
        checks,
    };
    Ok(Rendered {
        stem: "analyze".into(),
        json: ctx.envelope("analyze", result),
        csv,
        failed,
        summary,
    })
}

#[derive(Serialize)]
struct PairRow<'a> {
    x: &'a str,
    y: &'a str,
}

fn run_insulation(rds: &RdsRepresentation, dot: Option<&Path>, ctx: &Context) -> Result<Rendered, Failure> {
    let kernel = rds.kernel();
    let n = kernel.len();
    let (q, structure) = analyze(rds)?;
    let pi = stationary_distribution(kernel)?;
    if let Some(path) = dot {
        fs::write(path, q.to_dot(kernel.states()))
            .map_err(|e| Failure::internal("IoError", format!("{}: {e}", path.display())))?;
    }
    let pairs = structure.insulated_pairs();
    let two_point_edges = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .map(|(x, y)| q.row(x, y).len())
        .sum();
    let csv = to_csv(pairs.iter().map(|&(x, y)| PairRow {
        x: kernel.label(x),
        y: kernel.label(y),
    }))?;
    let summary = vec![format!(
        "κ̂ = {}, witness {:?}",
        structure.kappa_hat,
        labels(rds, &structure.witness)
    )];
    let result = InsulationResult {
        states: kernel.states().to_vec(),
        kappa_hat: structure.kappa_hat,
        witness: labels(rds, &structure.witness),
        insulated_pairs: pairs
            .iter()
            .map(|&(x, y)| (kernel.label(x).to_string(), kernel.label(y).to_string()))
            .collect(),
        delta_size: structure.delta.len(),
        pair_count: n * n,
        two_point_edges,
        partition: kappa_partition_feasible(&pi, structure.kappa_hat),
    };
    Ok(Rendered {
        stem: "insulation".into(),
        json: ctx.envelope("insulation", result),
        csv,
        failed: Vec::new(),
        summary,
    })
}

#[derive(Serialize)]
struct TraceRow<'a> {
    seed: &'a str,
    steps: u64,
    size: usize,
    states: String,
}

fn run_attractor(rds: &RdsRepresentation, scenarios: u64, max_back: u64, ctx: &Context) -> Result<Rendered, Failure> {
    let (_, structure) = analyze(rds)?;
    let report = estimate_kappa(rds, &structure, ctx.master, scenarios, max_back)?;
    let checks = vec![Expectation::new(
        "kappa_equals_kappa_hat",
        report.kappa as f64,
        Bound::Exact {
            target: structure.kappa_hat as f64,
        },
    )];
    let csv = to_csv(report.traces.iter().map(|t| TraceRow {
        seed: &t.seed,
        steps: t.steps,
        size: t.states.len(),
        states: labels(rds, &t.states).join(" "),
    }))?;
    let failed = failed_names(&checks);
    let summary = vec![format!(
        "κ = {} over {} scenarios (κ̂ = {})",
        report.kappa, report.n_scenarios, structure.kappa_hat
    )];
    let result = AttractorResult {
        states: rds.kernel().states().to_vec(),
        witness: labels(rds, &structure.witness),
        attractor: report,
        checks,
    };
    Ok(Rendered {
        stem: "attractor".into(),
        json: ctx.envelope("attractor", result),
        csv,
        failed,
        summary,
    })
}

#[derive(Serialize)]
struct CftpRow<'a> {
    seed: String,
    state: &'a str,
    horizon: u64,
}

pub fn cftp_summary(
    rds: &RdsRepresentation,
    structure: &InsulationStructure,
    master: u128,
    count: u64,
    max_horizon: u64,
) -> Result<(CftpResult, String), Failure> {
    let kernel = rds.kernel();
    let pi = stationary_distribution(kernel)?;
    let samples = cftp_samples(rds, structure, master, count, max_horizon)?;
    let counts = histogram(samples.iter().map(|s| s.state), kernel.len());
    let csv = to_csv(samples.iter().enumerate().map(|(i, s)| CftpRow {
        seed: format_seed(Scenario::derive(master, i as u64).seed()),
        state: kernel.label(s.state),
        horizon: s.horizon,
    }))?;
    let result = CftpResult {
        states: kernel.states().to_vec(),
        n_samples: count,
        max_horizon,
        chi_square: chi_square_test(&counts, &pi.mass),
        total_variation: total_variation(&counts, &pi.mass),
        counts,
        stationary: pi.mass,
        mean_horizon: samples.iter().map(|s| s.horizon as f64).sum::<f64>() / count as f64,
        largest_horizon: samples.iter().map(|s| s.horizon).max().unwrap_or(0),
    };
    Ok((result, csv))
}

#[derive(Serialize)]
struct TimeRow<'a> {
    seed: &'a str,
    mode: &'a str,
    start: &'a str,
    value: u64,
    censored: bool,
}

fn run_hit_times(
    rds: &RdsRepresentation,
    mode: TimeMode,
    scenarios: u64,
    horizon: u64,
    max_back: u64,
    ctx: &Context,
) -> Result<Rendered, Failure> {
    let (_, structure) = analyze(rds)?;
    let estimate = expected_times(rds, &structure, mode, ctx.master, scenarios, horizon, max_back)?;
    let mode_name = match mode {
        TimeMode::SyncPair { .. } => "sync",
        TimeMode::Hit { .. } => "hit",
        TimeMode::PiAveragedHit => "pi",
    };
    let csv = to_csv(estimate.samples.iter().map(|s| TimeRow {
        seed: &s.seed,
        mode: mode_name,
        start: rds.kernel().label(s.start),
        value: s.value,
        censored: s.censored,
    }))?;
    let summary = vec![match estimate.point_estimate {
        Some(mean) => format!(
            "mean {mean:.4} (censored {} of {})",
            estimate.n_censored, estimate.n_samples
        ),
        None => format!(
            "no point estimate: {} of {} samples censored at {}",
            estimate.n_censored, estimate.n_samples, estimate.horizon
        ),
    }];
    let result = HitTimesResult {
        states: rds.kernel().states().to_vec(),
        kappa_hat: structure.kappa_hat,
        estimate,
    };
    Ok(Rendered {
        stem: "hit-times".into(),
        json: ctx.envelope("hit-times", result),
        csv,
        failed: Vec::new(),
        summary,
    })
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    checks: u64,
    failures: u64,
}

fn run_verify(rds: &RdsRepresentation, config: &VerifyConfig, ctx: &Context) -> Result<Rendered, Failure> {
    let (_, structure) = analyze(rds)?;
    let report = verify_all(rds, config)?;
    let csv = to_csv(report.checks.iter().map(|c| CheckRow {
        name: &c.name,
        checks: c.checks,
        failures: c.failures,
    }))?;
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name.clone())
        .collect();
    let summary = report
        .checks
        .iter()
        .map(|c| format!("{:<34} {:>8} checks {:>4} failures", c.name, c.checks, c.failures))
        .collect();
    let result = VerifyResult {
        states: rds.kernel().states().to_vec(),
        kappa_hat: structure.kappa_hat,
        report,
    };
    Ok(Rendered {
        stem: "verify".into(),
        json: ctx.envelope("verify", result),
        csv,
        failed,
        summary,
    })
}

//! Acceptance criteria, run through the `rds-sync` binary. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rds_sync::attractor::{pullback_attractor, DEFAULT_MAX_BACK};
use rds_sync::catalog;
use rds_sync::noise::Scenario;
use rds_sync::stats::chi_square_test;
use rds_sync::two_point::analyze;
use rds_sync_cli::report::{
    validate, AttractorResult, ExampleResult, Expectation, InsulationResult, Report, VerifyResult,
};
use serde::de::DeserializeOwned;

const SEED: &str = "0d1ce5";

fn spec(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    root.join(name).to_string_lossy().into_owned()
}

/// Runs the binary and parses its JSON report, timing the whole process.
fn run<T: DeserializeOwned>(command: &str, args: &[&str]) -> Result<(Report<T>, Duration), String> {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rds-sync"))
        .args(["--seed", SEED, "--no-meta"])
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    if out.status.code() != Some(0) {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    validate(command, &text)?;
    let report = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok((report, elapsed))
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn expectation<'a>(r: &'a ExampleResult, name: &str) -> Result<&'a Expectation, String> {
    r.expectations
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| format!("no expectation {name}"))
}

fn only_cardinality(histogram: &BTreeMap<usize, u64>, k: usize, n: u64) -> bool {
    histogram.len() == 1 && histogram.get(&k) == Some(&n)
}

struct Runs {
    independent: Option<Report<ExampleResult>>,
    diagonal: Option<Report<ExampleResult>>,
}

fn criterion_1(runs: &mut Runs) -> Result<String, String> {
    let (report, elapsed) = run::<ExampleResult>("example", &["example", "four-state-independent", "--scenarios", "10000"])?;
    let r = &report.result;
    let a = r.attractor.as_ref().ok_or("no attractor report")?;
    ensure(a.n_scenarios == 10_000, || format!("{} scenarios", a.n_scenarios))?;
    ensure(a.kappa == 1 && only_cardinality(&a.cardinality_histogram, 1, 10_000), || {
        format!("κ = {}, histogram {:?}", a.kappa, a.cardinality_histogram)
    })?;
    let pi = r.stationary.as_ref().ok_or("no stationary distribution")?;
    for (x, (&m, &p)) in a.membership.iter().zip(pi).enumerate() {
        ensure((p - 0.25).abs() < 1e-12, || format!("π({x}) = {p}"))?;
        ensure((m - p).abs() <= 0.02, || format!("P({x} ∈ A) = {m}"))?;
    }
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    let detail = format!("κ=1 in 10000/10000, membership {:?}, {:.2?} s", a.membership, elapsed.as_secs_f64());
    runs.independent = Some(report);
    Ok(detail)
}

fn criterion_2(runs: &mut Runs) -> Result<String, String> {
    let (report, _) = run::<ExampleResult>("example", &["example", "four-state-f1f2", "--scenarios", "10000"])?;
    let r = &report.result;
    let a = r.attractor.as_ref().ok_or("no attractor report")?;
    ensure(a.kappa == 2 && only_cardinality(&a.cardinality_histogram, 2, 10_000), || {
        format!("κ = {}, histogram {:?}", a.kappa, a.cardinality_histogram)
    })?;
    let reported = expectation(r, "attractor_identification_mismatches")?.observed;
    ensure(reported == 0.0, || format!("{reported} mismatches reported"))?;

    // Independent recount: the map at time −1 is f1 when its uniform draw is below ½.
    let rds = catalog::four_state_diagonal_rds();
    let (_, structure) = analyze(&rds).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for i in 0..1_000 {
        let s = Scenario::derive(0x0d1ce5, i);
        let a = pullback_attractor(&rds, &s, &structure, DEFAULT_MAX_BACK).map_err(|e| e.to_string())?;
        let f2 = s.uniform(-1, 0) >= 0.5;
        let expected = if f2 { vec![0, 2] } else { vec![1, 3] };
        mismatches += (a.states != expected) as u32;
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches in recount"))?;
    runs.diagonal = Some(report);
    Ok("κ=2 in 10000/10000, 0 mismatches in 1000 + 1000 scenarios".into())
}

/// Size of the largest pairwise-insulated subset, by exhaustive search.
fn brute_force_clique(states: &[String], pairs: &[(String, String)]) -> usize {
    let n = states.len();
    let idx = |s: &String| states.iter().position(|t| t == s).unwrap();
    let mut adj = vec![vec![false; n]; n];
    for (x, y) in pairs {
        adj[idx(x)][idx(y)] = true;
        adj[idx(y)][idx(x)] = true;
    }
    (0u32..1 << n)
        .filter(|mask| {
            (0..n).all(|i| (0..n).all(|j| i == j || mask >> i & 1 == 0 || mask >> j & 1 == 0 || adj[i][j]))
        })
        .map(u32::count_ones)
        .max()
        .unwrap_or(0) as usize
}

fn criterion_3(runs: &Runs) -> Result<String, String> {
    let mut found = Vec::new();
    for (file, kappa, earlier) in [
        ("four_state_independent.json", 1, &runs.independent),
        ("four_state_f1f2.json", 2, &runs.diagonal),
    ] {
        let (ins, _) = run::<InsulationResult>("insulation", &["insulation", "--spec", &spec(file)])?;
        let clique = brute_force_clique(&ins.result.states, &ins.result.insulated_pairs);
        ensure(ins.result.kappa_hat == kappa && clique == kappa, || {
            format!("{file}: κ̂ = {}, brute force {clique}", ins.result.kappa_hat)
        })?;
        let a = earlier
            .as_ref()
            .and_then(|r| r.result.attractor.as_ref())
            .ok_or("criterion 1/2 did not produce an attractor report")?;
        ensure(only_cardinality(&a.cardinality_histogram, kappa, a.n_scenarios), || {
            format!("{file}: pullback histogram {:?}", a.cardinality_histogram)
        })?;
        found.push(format!("{file}: κ̂={kappa}=|A|"));
    }
    Ok(found.join(", "))
}

fn criterion_4(runs: &Runs) -> Result<String, String> {
    let a = runs
        .diagonal
        .as_ref()
        .and_then(|r| r.result.attractor.as_ref())
        .ok_or("criterion 2 did not produce an attractor report")?;
    ensure(a.n_scenarios == 10_000, || format!("{} scenarios", a.n_scenarios))?;
    for (x, &m) in a.membership.iter().enumerate() {
        ensure((0.48..=0.52).contains(&m), || format!("P({x} ∈ A) = {m}"))?;
    }
    Ok(format!("membership {:?}", a.membership))
}

fn criterion_5(runs: &Runs) -> Result<String, String> {
    let r = &runs.diagonal.as_ref().ok_or("criterion 2 did not run")?.result;
    let with_two = expectation(r, "scenarios_with_two_classes")?;
    let deviation = expectation(r, "worst_class_mass_deviation")?;
    ensure(with_two.observed == 1_000.0, || format!("{} of 1000 scenarios have 2 classes", with_two.observed))?;
    ensure(deviation.observed <= 1e-12, || format!("class mass off by {}", deviation.observed))?;
    Ok(format!("2 classes in 1000/1000, worst |mass − ½| = {:e}", deviation.observed))
}

fn criterion_6() -> Result<String, String> {
    let (report, _) = run::<AttractorResult>("attractor", &["attractor", "--spec", &spec("three_cycle.json"), "--scenarios", "1000"])?;
    let a = &report.result.attractor;
    ensure(a.kappa == 3 && a.kappa_hat == 3 && only_cardinality(&a.cardinality_histogram, 3, 1_000), || {
        format!("κ = {}, κ̂ = {}, histogram {:?}", a.kappa, a.kappa_hat, a.cardinality_histogram)
    })?;
    Ok("κ=κ̂=3 in 1000/1000".into())
}

fn criterion_7() -> Result<String, String> {
    let (report, elapsed) = run::<ExampleResult>("example", &["example", "epsilon-two-state", "--epsilon", "0.1", "--scenarios", "100000", "--horizon", "10000"])?;
    let e = report.result.hit_times.as_ref().ok_or("no time estimate")?;
    ensure(e.n_samples == 100_000 && e.horizon == 10_000, || format!("{} samples at {}", e.n_samples, e.horizon))?;
    ensure((e.censored_mean - 5.0).abs() <= 0.05 * 5.0, || format!("mean {}", e.censored_mean))?;
    ensure(e.n_censored == 0, || format!("{} censored", e.n_censored))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("mean T_A(a) = {:.4}, 0 censored, {:.2} s", e.censored_mean, elapsed.as_secs_f64()))
}

fn criterion_8(runs: &Runs) -> Result<String, String> {
    let c = runs
        .independent
        .as_ref()
        .and_then(|r| r.result.cftp.as_ref())
        .ok_or("criterion 1 did not produce CFTP samples")?;
    ensure(c.n_samples == 100_000, || format!("{} samples", c.n_samples))?;
    ensure(c.counts.iter().sum::<u64>() == 100_000, || "counts do not add up".into())?;
    let uniform = [0.25; 4];
    let test = chi_square_test(&c.counts, &uniform);
    let tv = 0.5
        * c.counts
            .iter()
            .map(|&k| (k as f64 / 100_000.0 - 0.25).abs())
            .sum::<f64>();
    ensure(test.p_value > 1e-4, || format!("p = {}", test.p_value))?;
    ensure(tv < 0.01, || format!("TV = {tv}"))?;
    Ok(format!("counts {:?}, p = {:.4}, TV = {:.5}", c.counts, test.p_value, tv))
}

fn criterion_9() -> Result<String, String> {
    let required = [
        ("cocycle_law", 100 * 231 * 4),
        ("row_stochasticity", 4),
        ("stationary_residual", 1),
        ("return_time_identity", 4),
        ("insulation_invariance", 1),
        ("delta_absorbing", 1),
        ("attractor_invariance", 50 * 100),
    ];
    let mut total = 0;
    for file in ["four_state_independent.json", "four_state_f1f2.json"] {
        let (report, _) = run::<VerifyResult>("verify", &["verify", "--spec", &spec(file)])?;
        let v = &report.result.report;
        for (name, min_checks) in required {
            let c = v.check(name).ok_or_else(|| format!("{file}: no check {name}"))?;
            ensure(c.failures == 0 && c.checks >= min_checks, || {
                format!("{file}: {name} {} failures of {} ({:?})", c.failures, c.checks, c.first_failure)
            })?;
        }
        ensure(v.passed, || format!("{file}: other checks failed"))?;
        total += v.checks.iter().map(|c| c.checks).sum::<u64>();
    }
    Ok(format!("{total} checks, 0 failures"))
}

fn criterion_10() -> Result<String, String> {
    let (report, _) = run::<ExampleResult>("example", &["example", "heavy-tail", "--truncation", "40"])?;
    let levels = report.result.levels.as_ref().ok_or("no truncation levels")?;
    let sizes: Vec<usize> = levels.iter().map(|l| l.truncation).collect();
    ensure(sizes == [10, 20, 40], || format!("levels {sizes:?}"))?;
    let mut parts = Vec::new();
    for pair in levels.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        ensure(hi.expected_hitting_time > lo.expected_hitting_time, || {
            format!("E_π[τ_1] {} -> {}", lo.expected_hitting_time, hi.expected_hitting_time)
        })?;
        let (a, b) = (&lo.attraction_time, &hi.attraction_time);
        let se = a.standard_error.unwrap_or(f64::INFINITY).hypot(b.standard_error.unwrap_or(f64::INFINITY));
        ensure(b.censored_mean - a.censored_mean > 3.0 * se, || {
            format!("T_A mean {} -> {} (se {se})", a.censored_mean, b.censored_mean)
        })?;
    }
    for l in levels {
        parts.push(format!(
            "N={}: E_π[τ_1]={:.3}, T_A={:.3}",
            l.truncation, l.expected_hitting_time, l.attraction_time.censored_mean
        ));
    }
    Ok(parts.join("; "))
}

fn main() {
    let mut runs = Runs {
        independent: None,
        diagonal: None,
    };
    let results = vec![
        (1, criterion_1(&mut runs)),
        (2, criterion_2(&mut runs)),
        (3, criterion_3(&runs)),
        (4, criterion_4(&runs)),
        (5, criterion_5(&runs)),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8(&runs)),
        (9, criterion_9()),
        (10, criterion_10()),
    ];
    let mut failed = 0;
    for (n, result) in &results {
        match result {
            Ok(detail) => println!("criterion {n:>2}: PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", results.len());
}

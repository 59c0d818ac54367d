//! Synchronization and attraction times.
//!
//! `T_Δ(ω, x, y)` is the first `n` at which the pair `φ^n_ω(x), φ^n_ω(y)`
//! has coalesced or become insulated; `T_A(ω, x)` is the first `n` with
//! `φ^n_ω(x) ∈ A(θ_n ω)`. Both are almost surely finite but may have
//! infinite mean, so every run is censored at a horizon and the censored
//! fraction is reported next to the estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attractor::{pullback_attractor, AttractorError};
use crate::chain::stationary_distribution;
use crate::noise::{format_seed, Scenario, INITIAL_STATE_SLOT};
use crate::rds::RdsRepresentation;
use crate::two_point::InsulationStructure;

pub const DEFAULT_HORIZON: u64 = 100_000;
/// Above this censored fraction no point estimate is reported.
pub const MAX_CENSORED_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "time", rename_all = "snake_case")]
pub enum TimeOutcome {
    Resolved(u64),
    Censored,
}

impl TimeOutcome {
    pub fn resolved(self) -> Option<u64> {
        match self {
            TimeOutcome::Resolved(n) => Some(n),
            TimeOutcome::Censored => None,
        }
    }
}

/// `T_Δ(ω, x, y)`. Without an insulation structure only coalescence
/// resolves the pair, which is the right test for synchronizing systems
/// and for truncations of countable chains.
pub fn sync_time(
    rds: &RdsRepresentation,
    scenario: &Scenario,
    x: usize,
    y: usize,
    horizon: u64,
    structure: Option<&InsulationStructure>,
) -> TimeOutcome {
    let mut pair = [x, y];
    for n in 0..=horizon {
        let [u, v] = pair;
        if u == v || structure.is_some_and(|s| s.insulated(u, v)) {
            return TimeOutcome::Resolved(n);
        }
        if n < horizon {
            rds.step_in_place(scenario, n as i64, &mut pair);
        }
    }
    TimeOutcome::Censored
}

/// `T_A(ω, x)`. `A(ω)` is pulled back once; afterwards the point and the
/// attractor are pushed forward together, using `φ_ω(A(ω)) = A(θω)`.
pub fn attractor_hit_time(
    rds: &RdsRepresentation,
    scenario: &Scenario,
    x: usize,
    structure: &InsulationStructure,
    horizon: u64,
    max_back: u64,
) -> Result<TimeOutcome, AttractorError> {
    let attractor = pullback_attractor(rds, scenario, structure, max_back)?;
    // points[0] is the tracked state, the rest is the attractor.
    let mut points = Vec::with_capacity(attractor.states.len() + 1);
    points.push(x);
    points.extend(&attractor.states);
    for n in 0..=horizon {
        if points[1..].contains(&points[0]) {
            return Ok(TimeOutcome::Resolved(n));
        }
        if n < horizon {
            rds.step_in_place(scenario, n as i64, &mut points);
        }
    }
    Ok(TimeOutcome::Censored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TimeMode {
    SyncPair { x: usize, y: usize },
    Hit { x: usize },
    PiAveragedHit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSample {
    pub seed: String,
    pub start: usize,
    pub value: u64,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantiles {
    pub q50: u64,
    pub q90: u64,
    pub q99: u64,
}

/// Censored Monte Carlo estimate of a hitting time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeEstimate {
    pub mode: TimeMode,
    pub n_samples: u64,
    pub n_censored: u64,
    pub censored_fraction: f64,
    pub horizon: u64,
    /// Mean with censored samples counted at the horizon.
    pub censored_mean: f64,
    /// Mean of the uncensored samples.
    pub uncensored_mean: Option<f64>,
    /// Sample standard deviation of the uncensored samples over `√count`.
    pub standard_error: Option<f64>,
    /// `censored_mean`, withheld when more than half the samples are censored.
    pub point_estimate: Option<f64>,
    /// Nearest-rank quantiles, censored samples counted at the horizon.
    pub quantiles: Quantiles,
    #[serde(skip)]
    pub samples: Vec<TimeSample>,
}

impl TimeEstimate {
    pub fn from_samples(mode: TimeMode, horizon: u64, samples: Vec<TimeSample>) -> Self {
        let n = samples.len() as u64;
        let n_censored = samples.iter().filter(|s| s.censored).count() as u64;
        let total = n.max(1) as f64;
        let censored_mean = samples.iter().map(|s| s.value as f64).sum::<f64>() / total;
        let uncensored: Vec<f64> = samples
            .iter()
            .filter(|s| !s.censored)
            .map(|s| s.value as f64)
            .collect();
        let m = uncensored.len() as f64;
        let uncensored_mean = (!uncensored.is_empty()).then(|| uncensored.iter().sum::<f64>() / m);
        let standard_error = uncensored_mean.filter(|_| uncensored.len() > 1).map(|mean| {
            let var = uncensored.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        });
        let censored_fraction = n_censored as f64 / total;
        let mut values: Vec<u64> = samples.iter().map(|s| s.value).collect();
        values.sort_unstable();
        let quantile = |q: f64| -> u64 {
            if values.is_empty() {
                return 0;
            }
            let rank = (q * values.len() as f64).ceil() as usize;
            values[rank.clamp(1, values.len()) - 1]
        };
        TimeEstimate {
            mode,
            n_samples: n,
            n_censored,
            censored_fraction,
            horizon,
            censored_mean,
            uncensored_mean,
            standard_error,
            point_estimate: (censored_fraction <= MAX_CENSORED_FRACTION).then_some(censored_mean),
            quantiles: Quantiles {
                q50: quantile(0.5),
                q90: quantile(0.9),
                q99: quantile(0.99),
            },
            samples,
        }
    }
}

/// Monte Carlo over scenarios `derive(master, 0..n_samples)`. In
/// `PiAveragedHit` mode the start state is drawn from `π` using the
/// scenario's [`INITIAL_STATE_SLOT`] at time 0.
pub fn expected_times(
    rds: &RdsRepresentation,
    structure: &InsulationStructure,
    mode: TimeMode,
    master: u128,
    n_samples: u64,
    horizon: u64,
    max_back: u64,
) -> Result<TimeEstimate, AttractorError> {
    let pi = match mode {
        TimeMode::PiAveragedHit => Some(stationary_distribution(rds.kernel())?),
        _ => None,
    };
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let scenario = Scenario::derive(master, i);
            let (start, outcome) = match mode {
                TimeMode::SyncPair { x, y } => {
                    (x, sync_time(rds, &scenario, x, y, horizon, Some(structure)))
                }
                TimeMode::Hit { x } => (
                    x,
                    attractor_hit_time(rds, &scenario, x, structure, horizon, max_back)?,
                ),
                TimeMode::PiAveragedHit => {
                    let pi = pi.as_ref().expect("computed for this mode");
                    let x = pi.sample(scenario.uniform(0, INITIAL_STATE_SLOT));
                    (
                        x,
                        attractor_hit_time(rds, &scenario, x, structure, horizon, max_back)?,
                    )
                }
            };
            Ok(TimeSample {
                seed: format_seed(scenario.seed()),
                start,
                value: outcome.resolved().unwrap_or(horizon),
                censored: outcome == TimeOutcome::Censored,
            })
        })
        .collect::<Result<Vec<_>, AttractorError>>()?;
    Ok(TimeEstimate::from_samples(mode, horizon, samples))
}

//! Report types written by each subcommand. Every report is an envelope
//! `{schema_version, command, seed, meta?, result}`; the types below are the
//! schema, and [`validate`] checks a document against it by strict
//! deserialization.

use rds_sync::attractor::AttractorReport;
use rds_sync::chain::{DegreeTwoReport, Truncation};
use rds_sync::hitting::TimeEstimate;
use rds_sync::stats::ChiSquareTest;
use rds_sync::two_point::PartitionFeasibility;
use rds_sync::verify::VerifyReport;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
    pub threads: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report<T> {
    pub schema_version: u32,
    pub command: String,
    pub seed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeResult {
    pub states: Vec<String>,
    pub stationary: Vec<f64>,
    pub stationary_residual: f64,
    pub period: usize,
    pub cyclic_classes: Vec<Vec<String>>,
    /// `E_y[τ_y]` per state.
    pub return_times: Vec<f64>,
    /// `E_y[τ_y²]` per state.
    pub return_time_second_moments: Vec<f64>,
    pub degree_two: DegreeTwoReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    pub checks: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsulationResult {
    pub states: Vec<String>,
    pub kappa_hat: usize,
    pub witness: Vec<String>,
    pub insulated_pairs: Vec<(String, String)>,
    pub delta_size: usize,
    pub pair_count: usize,
    pub two_point_edges: usize,
    pub partition: PartitionFeasibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorResult {
    pub states: Vec<String>,
    pub witness: Vec<String>,
    pub attractor: AttractorReport,
    pub checks: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CftpResult {
    pub states: Vec<String>,
    pub n_samples: u64,
    pub max_horizon: u64,
    pub counts: Vec<u64>,
    pub stationary: Vec<f64>,
    pub chi_square: ChiSquareTest,
    pub total_variation: f64,
    pub mean_horizon: f64,
    pub largest_horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HitTimesResult {
    pub states: Vec<String>,
    pub kappa_hat: usize,
    pub estimate: TimeEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyResult {
    pub states: Vec<String>,
    pub kappa_hat: usize,
    pub report: VerifyReport,
}

/// One pinned expectation of a bundled example or numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub name: String,
    pub observed: f64,
    pub bound: Bound,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Bound {
    /// `observed == target`.
    Exact { target: f64 },
    /// `|observed − target| ≤ tolerance`.
    Near { target: f64, tolerance: f64 },
    /// `lo ≤ observed ≤ hi`.
    Range { lo: f64, hi: f64 },
    /// `observed > min`.
    Above { min: f64 },
    /// `observed < max`.
    Below { max: f64 },
}

impl Bound {
    pub fn holds(&self, observed: f64) -> bool {
        match *self {
            Bound::Exact { target } => observed == target,
            Bound::Near { target, tolerance } => (observed - target).abs() <= tolerance,
            Bound::Range { lo, hi } => lo <= observed && observed <= hi,
            Bound::Above { min } => observed > min,
            Bound::Below { max } => observed < max,
        }
    }
}

impl Expectation {
    pub fn new(name: impl Into<String>, observed: f64, bound: Bound) -> Self {
        Expectation {
            name: name.into(),
            observed,
            passed: bound.holds(observed),
            bound,
        }
    }
}

pub fn failed_names(checks: &[Expectation]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleParameters {
    pub scenarios: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationLevel {
    pub truncation: usize,
    pub redirected_mass: f64,
    /// Analytic `E_π[τ_1]`.
    pub expected_hitting_time: f64,
    pub attraction_time: TimeEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleResult {
    pub name: String,
    pub parameters: ExampleParameters,
    pub states: Vec<String>,
    pub kappa_hat: usize,
    pub witness: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cftp: Option<CftpResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit_times: Option<TimeEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<TruncationLevel>>,
    pub expectations: Vec<Expectation>,
    pub passed: bool,
}

fn check<T: DeserializeOwned>(text: &str) -> Result<(), String> {
    let report: Report<T> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(format!("unsupported schema_version {}", report.schema_version));
    }
    Ok(())
}

/// Validates a JSON report produced by `command` against its schema.
pub fn validate(command: &str, text: &str) -> Result<(), String> {
    match command {
        "analyze" => check::<AnalyzeResult>(text),
        "insulation" => check::<InsulationResult>(text),
        "attractor" => check::<AttractorResult>(text),
        "cftp" => check::<CftpResult>(text),
        "hit-times" => check::<HitTimesResult>(text),
        "verify" => check::<VerifyResult>(text),
        "example" => check::<ExampleResult>(text),
        other => Err(format!("unknown command {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::Exact { target: 2.0 }.holds(2.0));
        assert!(Bound::Near { target: 5.0, tolerance: 0.25 }.holds(5.25));
        assert!(!Bound::Near { target: 5.0, tolerance: 0.25 }.holds(5.3));
        assert!(Bound::Range { lo: 0.48, hi: 0.52 }.holds(0.48));
        assert!(!Bound::Above { min: 1e-4 }.holds(1e-4));
        assert!(!Bound::Below { max: 0.01 }.holds(0.01));
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let good = r#"{"schema_version":1,"command":"verify","seed":"00","result":
            {"states":[],"kappa_hat":1,"report":{"passed":true,"checks":[]}}}"#;
        assert_eq!(validate("verify", good), Ok(()));
        let extra = good.replace("\"seed\"", "\"colour\":1,\"seed\"");
        assert!(validate("verify", &extra).is_err());
        let future = good.replace("\"schema_version\":1", "\"schema_version\":2");
        assert!(validate("verify", &future).is_err());
    }
}

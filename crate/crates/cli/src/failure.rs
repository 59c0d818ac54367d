use std::fmt;

use rds_sync::attractor::AttractorError;
use rds_sync::chain::ChainError;
use rds_sync::two_point::TwoPointError;
use rds_sync::Error;
use serde::{Deserialize, Serialize};

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

/// A terminating error, written to stderr as `{"error": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Failure {
    pub kind: String,
    pub exit_code: i32,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureEnvelope {
    pub error: Failure,
}

impl Failure {
    pub fn new(exit_code: i32, kind: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            kind: kind.into(),
            exit_code,
            message: message.into(),
        }
    }

    pub fn spec(kind: &str, message: impl Into<String>) -> Self {
        Failure::new(EXIT_SPEC, kind, message)
    }

    pub fn internal(kind: &str, message: impl Into<String>) -> Self {
        Failure::new(EXIT_INTERNAL, kind, message)
    }

    pub fn checks(failed: &[String]) -> Self {
        Failure::new(EXIT_CHECK, "CheckFailed", format!("failed: {}", failed.join(", ")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FailureEnvelope { error: self.clone() }).expect("failures serialize")
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

/// Variant name of an error, from its `Debug` form.
fn variant_name(debug: String) -> String {
    debug
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect()
}

fn chain_code(e: &ChainError) -> i32 {
    match e {
        ChainError::SingularSystem { .. } => EXIT_CHECK,
        _ => EXIT_SPEC,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (code, kind) = match &e {
            Error::Chain(inner) => (chain_code(inner), variant_name(format!("{inner:?}"))),
            Error::Rds(inner) => (EXIT_SPEC, variant_name(format!("{inner:?}"))),
            Error::TwoPoint(inner) => {
                let code = match inner {
                    TwoPointError::HorizonExceeded { .. } => EXIT_CHECK,
                    _ => EXIT_SPEC,
                };
                (code, variant_name(format!("{inner:?}")))
            }
            Error::Attractor(inner) => {
                let code = match inner {
                    AttractorError::NotSynchronizing { .. } => EXIT_SPEC,
                    AttractorError::Chain(c) => chain_code(c),
                    _ => EXIT_CHECK,
                };
                let kind = match inner {
                    AttractorError::Chain(c) => variant_name(format!("{c:?}")),
                    other => variant_name(format!("{other:?}")),
                };
                (code, kind)
            }
        };
        Failure::new(code, kind, message)
    }
}

impl From<ChainError> for Failure {
    fn from(e: ChainError) -> Self {
        Error::from(e).into()
    }
}

impl From<TwoPointError> for Failure {
    fn from(e: TwoPointError) -> Self {
        Error::from(e).into()
    }
}

impl From<AttractorError> for Failure {
    fn from(e: AttractorError) -> Self {
        Error::from(e).into()
    }
}

impl From<rds_sync::rds::RdsError> for Failure {
    fn from(e: rds_sync::rds::RdsError) -> Self {
        Error::from(e).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sum_errors_are_spec_errors() {
        let f = Failure::from(ChainError::RowSumError {
            state: "a".into(),
            sum: 0.9,
        });
        assert_eq!(f.kind, "RowSumError");
        assert_eq!(f.exit_code, EXIT_SPEC);
    }

    #[test]
    fn non_convergence_is_a_check_failure() {
        let f = Failure::from(AttractorError::NoConvergence {
            max_back: 5,
            last_cardinality: 2,
        });
        assert_eq!(f.kind, "NoConvergence");
        assert_eq!(f.exit_code, EXIT_CHECK);
    }
}

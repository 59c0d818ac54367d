//! On-disk chain description.
//!
//! ```json
//! {
//!   "states": ["a", "b"],
//!   "transitions": [{"from": "a", "to": "b", "prob": 1.0}, ...],
//!   "rds": {"kind": "explicit", "maps": [{"prob": 0.5, "map": {"a": "b", "b": "a"}}]}
//! }
//! ```
//!
//! `rds` is optional; `{"kind": "independent"}` selects the independent
//! representation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub states: Vec<String>,
    pub transitions: Vec<TransitionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rds: Option<RdsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: String,
    pub to: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RdsSpec {
    Independent,
    Explicit { maps: Vec<MapSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub prob: f64,
    pub map: BTreeMap<String, String>,
}

impl ChainSpec {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain specs always serialize")
    }
}

//! JSON report shared by every command.

use clmkit::between::PairScore;
use clmkit::Direction;
use serde::Serialize;
use serde_json::{Map, Value};

pub const TOOL: &str = "clmkit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Command line without the program name.
    pub args: Vec<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_trials: Option<usize>,
    pub entries: Vec<Entry>,
    pub warnings: Vec<String>,
    /// Command-specific sections.
    #[serde(flatten)]
    pub sections: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl Report {
    pub fn new(command: &str, args: &[String], seed: u64, mc_trials: Option<usize>) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            args: args.to_vec(),
            seed,
            mc_trials,
            entries: Vec::new(),
            warnings: Vec::new(),
            sections: Map::new(),
            elapsed_ms: None,
        }
    }

    pub fn section(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("report sections serialize");
        self.sections.insert(key.into(), value);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// One scored (or failed) dataset.
#[derive(Debug, Serialize)]
pub struct Entry {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub measure: String,
    /// 1-based position in a ranking.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub value: Option<f64>,
    pub direction: Option<Direction>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairScore>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl Entry {
    pub fn failed(name: String, path: Option<String>, measure: &str, seed: u64, error: String) -> Self {
        Self {
            name,
            path,
            measure: measure.into(),
            rank: None,
            value: None,
            direction: None,
            seed,
            mc_trials: None,
            pairs: None,
            error: Some(error),
            elapsed_ms: None,
        }
    }

    /// Names of non-finite numbers, which JSON cannot carry.
    pub fn non_finite_fields(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.value.is_some_and(|v| !v.is_finite()) {
            bad.push("value".to_string());
        }
        for p in self.pairs.iter().flatten() {
            let fields = [Some(p.base), p.squashed, p.null_mean, Some(p.raw), Some(p.value)];
            if fields.iter().flatten().any(|v| !v.is_finite()) {
                bad.push(format!("pair ({}, {})", p.first, p.second));
            }
        }
        bad
    }
}

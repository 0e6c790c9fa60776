//! The JSON report document.

use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Value,
    pub expected: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, measured: impl Serialize, expected: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: to_value(measured),
            expected: expected.into(),
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = to_value(details);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub command: String,
    #[serde(flatten)]
    pub run: RunConfig,
}

/// Top-level report. Sections a command does not produce are `null`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: EffectiveConfig,
    pub classification_summary: Value,
    pub components: Value,
    pub hyperbolicity: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, run: &RunConfig) -> Self {
        Report {
            config: EffectiveConfig {
                command: command.to_string(),
                run: run.clone(),
            },
            classification_summary: Value::Null,
            components: Value::Null,
            hyperbolicity: Value::Null,
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Serializes anything report-bound; non-finite floats become `null`.
pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

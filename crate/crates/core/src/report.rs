//! Serializable experiment records.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// One named quantitative check: its inputs, what was observed, what it was
/// compared against, and whether it passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: Map<String, Value>,
    pub observed: Value,
    pub reference: Value,
    pub provenance: String,
    pub tolerance: Value,
    pub pass: bool,
    pub seconds: f64,
}

impl ExperimentReport {
    pub fn builder(name: impl Into<String>) -> ReportBuilder {
        ReportBuilder {
            report: ExperimentReport {
                name: name.into(),
                params: Map::new(),
                observed: Value::Null,
                reference: Value::Null,
                provenance: String::new(),
                tolerance: Value::Null,
                pass: false,
                seconds: 0.0,
            },
            started: Instant::now(),
        }
    }

    /// One line: `PASS name (1.23 s)`.
    pub fn summary_line(&self) -> String {
        format!(
            "{} {} ({:.2} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.seconds
        )
    }
}

pub struct ReportBuilder {
    report: ExperimentReport,
    started: Instant,
}

impl ReportBuilder {
    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.report.params.insert(key.to_owned(), to_value(value));
        self
    }

    pub fn observed(mut self, value: impl Serialize) -> Self {
        self.report.observed = to_value(value);
        self
    }

    pub fn reference(mut self, value: impl Serialize, provenance: &str) -> Self {
        self.report.reference = to_value(value);
        self.report.provenance = provenance.to_owned();
        self
    }

    pub fn tolerance(mut self, value: impl Serialize) -> Self {
        self.report.tolerance = to_value(value);
        self
    }

    pub fn finish(mut self, pass: bool) -> ExperimentReport {
        self.report.pass = pass;
        self.report.seconds = self.started.elapsed().as_secs_f64();
        self.report
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

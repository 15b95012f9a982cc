//! The machine-readable run report and its human-readable trace rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::explorer::{Counterexample, ExplorationReport, Verdict, Violation};

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub verdict: Verdict,
    pub states_explored: usize,
    pub transitions: usize,
    pub elapsed_ms: u64,
    pub por: bool,
    pub controller: String,
    pub property: String,
    pub max_depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl RunReport {
    pub fn new(controller: &str, property: &str, r: &ExplorationReport) -> Self {
        RunReport {
            version: REPORT_VERSION,
            verdict: r.verdict,
            states_explored: r.states_explored,
            transitions: r.transitions_fired,
            elapsed_ms: r.elapsed_ms,
            por: r.por,
            controller: controller.to_string(),
            property: property.to_string(),
            max_depth: r.max_depth,
            counterexample: r.counterexample.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

/// Indented listing of a counterexample, one action per line.
pub fn render_counterexample(cx: &Counterexample) -> String {
    let mut out = String::new();
    let what = match cx.violation {
        Violation::Invariant => "invariant violated".to_string(),
        Violation::Obligation { index } => format!("obligation {index} violated"),
    };
    let _ = writeln!(out, "counterexample ({} steps, {what}):", cx.trace.len());
    if let Some(d) = cx.trace.initial {
        let _ = writeln!(out, "  s0 [{d}]");
    }
    for (i, step) in cx.trace.steps.iter().enumerate() {
        let _ = writeln!(out, "  {:>3}. {}", i + 1, step.action);
        let _ = writeln!(out, "       -> [{}]", step.digest);
    }
    out
}

//! CSV and JSON report writers.
//!
//! Numbers are written in Rust's shortest round-trip form, so equal inputs
//! give byte-identical files and every value parses back exactly. Each CSV
//! starts with a `# schema_version=N` comment line; JSON documents carry a
//! `schema_version` field.

use serde::{Deserialize, Serialize};

use crate::assess::{Assessment, GradientValidation};
use crate::gradient::ConvergenceIndices;
use crate::grid::NetworkCase;
use crate::risk::IrmOutcome;
use crate::tree::MarkovTree;

pub const SCHEMA_VERSION: u32 = 1;

fn header(columns: &[&str]) -> String {
    format!("# schema_version={SCHEMA_VERSION}\n{}\n", columns.join(","))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub const TREE_COLUMNS: [&str; 7] = [
    "label",
    "level",
    "probability",
    "cost",
    "equivalent_cost",
    "subsequent_risk",
    "new_on_last_path",
];

/// One row per node in creation order.
pub fn tree_csv(tree: &MarkovTree) -> String {
    let mut out = header(&TREE_COLUMNS);
    for n in tree.nodes() {
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            n.label_string(),
            n.level,
            n.probability,
            n.cost,
            n.equivalent_cost,
            n.subsequent_risk,
            u8::from(n.visited)
        );
    }
    out
}

pub const CONVERGENCE_COLUMNS: [&str; 4] = ["attempt", "subsequent_risk", "delta_magnitude", "delta_direction"];

/// Per-attempt `R'` and gradient convergence indices; undefined indices are empty.
pub fn convergence_csv(assessment: &Assessment) -> String {
    let mut out = header(&CONVERGENCE_COLUMNS);
    let idx = assessment.convergence().unwrap_or(ConvergenceIndices {
        magnitude: Vec::new(),
        direction: Vec::new(),
    });
    for (i, a) in assessment.history.attempts.iter().enumerate() {
        out += &format!(
            "{},{},{},{}\n",
            a.attempt,
            a.subsequent_risk,
            opt(idx.magnitude.get(i).copied().flatten()),
            opt(idx.direction.get(i).copied().flatten())
        );
    }
    out
}

pub const GRADIENT_COLUMNS: [&str; 3] = ["variable", "bus", "gradient"];

pub fn gradient_csv(case: &NetworkCase, gamma: &[f64]) -> String {
    let mut out = header(&GRADIENT_COLUMNS);
    for (i, g) in gamma.iter().enumerate() {
        let (kind, bus) = case.variable_name(i);
        out += &format!("{kind},{bus},{g}\n");
    }
    out
}

pub const VALIDATION_COLUMNS: [&str; 8] = [
    "variable",
    "bus",
    "gradient",
    "finite_difference",
    "relative_error",
    "flagged",
    "checked",
    "pass",
];

pub fn validation_csv(v: &GradientValidation) -> String {
    let mut out = header(&VALIDATION_COLUMNS);
    for c in &v.components {
        out += &format!(
            "{},{},{},{},{},{},{},{}\n",
            c.kind,
            c.bus,
            c.gradient,
            c.finite_difference,
            c.relative_error,
            u8::from(c.flagged),
            u8::from(c.checked),
            u8::from(c.pass)
        );
    }
    out
}

pub const TRAJECTORY_COLUMNS: [&str; 6] = [
    "round",
    "delta_r",
    "control_cost",
    "subsequent_risk",
    "total_risk",
    "accepted",
];

pub fn trajectory_csv(outcome: &IrmOutcome) -> String {
    let mut out = header(&TRAJECTORY_COLUMNS);
    for r in &outcome.rows {
        out += &format!(
            "{},{},{},{},{},{}\n",
            r.round,
            r.reduction,
            r.control_cost,
            r.subsequent_risk,
            r.total(),
            u8::from(r.accepted)
        );
    }
    out
}

/// Assessment summary document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    /// `C_0 + R'` ($).
    #[serde(rename = "R")]
    pub total_risk: f64,
    #[serde(rename = "R_prime")]
    pub subsequent_risk: f64,
    #[serde(rename = "C0")]
    pub control_cost: f64,
    pub attempts: usize,
    pub nodes: usize,
    /// Every path below the root was instantiated.
    pub complete: bool,
}

impl Summary {
    pub fn new(a: &Assessment) -> Self {
        Summary {
            schema_version: SCHEMA_VERSION,
            total_risk: a.total_risk(),
            subsequent_risk: a.subsequent_risk(),
            control_cost: a.control_cost,
            attempts: a.attempts(),
            nodes: a.tree.len(),
            complete: a.tree.is_complete(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub variable: String,
    pub bus: u32,
    /// MW.
    pub value: f64,
}

/// Final IRM target for a strategy database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub schema_version: u32,
    /// Branch ids of the initial outage.
    pub initial_outages: Vec<u32>,
    pub target: Vec<TargetEntry>,
    pub control_cost: f64,
    pub subsequent_risk: f64,
    pub total_risk: f64,
    pub rounds: usize,
    pub stop: String,
}

impl Strategy {
    pub fn new(case: &NetworkCase, outcome: &IrmOutcome, outages: &[usize]) -> Self {
        let a = &outcome.assessment;
        Strategy {
            schema_version: SCHEMA_VERSION,
            initial_outages: outages.iter().map(|&k| case.branches[k].id).collect(),
            target: a
                .target
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &value)| {
                    let (kind, bus) = case.variable_name(i);
                    TargetEntry {
                        variable: kind.to_string(),
                        bus,
                        value,
                    }
                })
                .collect(),
            control_cost: a.control_cost,
            subsequent_risk: a.subsequent_risk(),
            total_risk: a.total_risk(),
            rounds: outcome.rows.len() - 1,
            stop: outcome.stop.to_string(),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Parses a report CSV back into its header and rows, skipping the schema line.
pub fn parse_csv(text: &str) -> Option<(u32, Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let version = lines.next()?.strip_prefix("# schema_version=")?.parse().ok()?;
    let cols = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Some((version, cols, rows))
}

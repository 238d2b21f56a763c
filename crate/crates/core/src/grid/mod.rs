//! Grid data model: case files, topology and islanding, DC power flow and
//! flow sensitivities.

mod case;
mod flow;
mod matpower;
mod state;
mod topology;

pub use case::{Branch, Bus, CostConfig, FailureParams, FailureRateConfig, Generator, Load, NetworkCase};
pub use flow::{dc_power_flow, flow_sensitivity, DcModel, FlowSolution};
pub use matpower::{parse_matpower, MatpowerOptions};
pub use state::SystemState;
pub use topology::{Island, OutageWarnings, Topology};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    NativeJson,
    MatpowerText,
}

impl std::str::FromStr for CaseFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" | "native-json" => Ok(CaseFormat::NativeJson),
            "matpower" | "matpower-text" | "m" => Ok(CaseFormat::MatpowerText),
            other => Err(Error::InvalidArgument(format!("unknown case format {other:?}"))),
        }
    }
}

/// Parses a case file. MATPOWER input uses default failure-rate and cost
/// parameters; use [`parse_matpower`] to supply others.
pub fn parse_case(text: &str, format: CaseFormat) -> Result<NetworkCase> {
    if text.trim().is_empty() {
        return Err(Error::InvalidArgument("empty case text".into()));
    }
    match format {
        CaseFormat::NativeJson => NetworkCase::from_json(text),
        CaseFormat::MatpowerText => parse_matpower(text, &MatpowerOptions::default()),
    }
}

/// Apply an outage set; see [`Topology::apply_outage`].
pub fn apply_outage(case: &NetworkCase, topo: &Topology, branches: &[usize]) -> (Topology, OutageWarnings) {
    topo.apply_outage(case, branches)
}

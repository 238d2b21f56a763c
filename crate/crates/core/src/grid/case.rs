use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-branch failure-rate parameters of the piecewise-linear loading model.
///
/// Rates are in 1/min. The baseline `lambda0` holds up to the loading knee,
/// rises linearly to `lambda1` at 100% loading, then grows with
/// `overload_slope` per unit of loading until capped at `lambda_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FailureParams {
    pub lambda0: f64,
    pub lambda1: f64,
    pub knee: f64,
    pub overload_slope: f64,
    pub lambda_max: f64,
}

impl Default for FailureParams {
    fn default() -> Self {
        FailureParams {
            lambda0: 1e-4,
            lambda1: 1e-2,
            knee: 0.6,
            overload_slope: 0.05,
            lambda_max: 0.1,
        }
    }
}

impl FailureParams {
    pub fn validate(&self, id: impl ToString) -> Result<()> {
        let id = id.to_string();
        let finite = [self.lambda0, self.lambda1, self.knee, self.overload_slope, self.lambda_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::semantic("failure_rate", id, "non-finite parameter"));
        }
        if !(0.0 <= self.lambda0 && self.lambda0 <= self.lambda1 && self.lambda1 <= self.lambda_max) {
            return Err(Error::semantic(
                "failure_rate",
                id,
                "requires 0 <= lambda0 <= lambda1 <= lambda_max",
            ));
        }
        if !(self.knee > 0.0 && self.knee < 1.0) {
            return Err(Error::semantic("failure_rate", id, "knee must lie in (0, 1)"));
        }
        if self.overload_slope < 0.0 {
            return Err(Error::semantic("failure_rate", id, "overload_slope must be >= 0"));
        }
        Ok(())
    }
}

/// The case-wide `failure_rate` block: default branch parameters plus the
/// instantaneous trip threshold of the short-timescale process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureRateConfig {
    #[serde(flatten)]
    pub default: FailureParams,
    #[serde(default = "default_trip_factor")]
    pub trip_factor: f64,
}

fn default_trip_factor() -> f64 {
    1.2
}

impl Default for FailureRateConfig {
    fn default() -> Self {
        FailureRateConfig {
            default: FailureParams::default(),
            trip_factor: default_trip_factor(),
        }
    }
}

/// Default unit prices applied to entities that do not carry their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    /// $ per MW of load lost in one dispatch interval.
    pub shed_per_mw: f64,
    /// $ per MW of generation adjusted in one dispatch interval.
    pub gen_adjust_per_mw: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            shed_per_mw: 10_000.0,
            gen_adjust_per_mw: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    /// Series admittance 1/x in per unit.
    pub admittance: f64,
    /// Flow limit F^max in MW.
    pub rate_mw: f64,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub in_service: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: u32,
    /// Scheduled output in MW.
    pub p_mw: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp_mw_per_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_per_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub bus: u32,
    pub p_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shed_cost_per_mw: Option<f64>,
}

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaseFile {
    #[serde(default = "schema_version")]
    schema_version: u32,
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    loads: Vec<Load>,
    #[serde(default)]
    failure_rate: FailureRateConfig,
    #[serde(default)]
    costs: CostConfig,
}

fn schema_version() -> u32 {
    1
}

/// Static grid description. Immutable once validated.
///
/// Branch positions double as mid-timescale event ids: branch at index `i`
/// is event `i + 1`, event 0 being "no outage".
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    pub failure_rate: FailureRateConfig,
    pub costs: CostConfig,
    bus_index: HashMap<u32, usize>,
    branch_ends: Vec<(usize, usize)>,
    gen_bus: Vec<usize>,
    load_bus: Vec<usize>,
}

impl NetworkCase {
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        loads: Vec<Load>,
        failure_rate: FailureRateConfig,
        costs: CostConfig,
    ) -> Result<Self> {
        if !(base_mva > 0.0 && base_mva.is_finite()) {
            return Err(Error::semantic("case", "base_mva", "must be positive"));
        }
        if buses.is_empty() {
            return Err(Error::semantic("case", "buses", "at least one bus is required"));
        }
        let mut bus_index = HashMap::with_capacity(buses.len());
        for (k, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id, k).is_some() {
                return Err(Error::semantic("bus", bus.id, "duplicate bus id"));
            }
        }
        let lookup = |entity: &'static str, id: u32, bus: u32| -> Result<usize> {
            bus_index
                .get(&bus)
                .copied()
                .ok_or_else(|| Error::semantic(entity, id, format!("references missing bus {bus}")))
        };

        let mut branch_ids = HashMap::new();
        let mut branch_ends = Vec::with_capacity(branches.len());
        for br in &branches {
            if branch_ids.insert(br.id, ()).is_some() {
                return Err(Error::semantic("branch", br.id, "duplicate branch id"));
            }
            let f = lookup("branch", br.id, br.from)?;
            let t = lookup("branch", br.id, br.to)?;
            if f == t {
                return Err(Error::semantic("branch", br.id, "from and to bus coincide"));
            }
            if !(br.admittance > 0.0 && br.admittance.is_finite()) {
                return Err(Error::semantic("branch", br.id, "admittance must be positive"));
            }
            if !(br.rate_mw > 0.0 && br.rate_mw.is_finite()) {
                return Err(Error::semantic("branch", br.id, "rate_mw must be positive"));
            }
            if let Some(p) = &br.failure {
                p.validate(br.id)?;
            }
            branch_ends.push((f, t));
        }

        let mut gen_bus = Vec::with_capacity(generators.len());
        for g in &generators {
            let b = lookup("generator", g.bus, g.bus)?;
            if gen_bus.contains(&b) {
                return Err(Error::semantic("generator", g.bus, "one generator entry per bus"));
            }
            if !(g.p_min <= g.p_max) || !g.p_min.is_finite() || !g.p_max.is_finite() {
                return Err(Error::semantic("generator", g.bus, "requires finite p_min <= p_max"));
            }
            if !(g.ramp_mw_per_min >= 0.0) {
                return Err(Error::semantic("generator", g.bus, "ramp must be >= 0"));
            }
            if g.cost_per_mw.is_some_and(|c| !(c >= 0.0)) {
                return Err(Error::semantic("generator", g.bus, "cost must be >= 0"));
            }
            if !g.p_mw.is_finite() {
                return Err(Error::semantic("generator", g.bus, "non-finite p_mw"));
            }
            gen_bus.push(b);
        }

        let mut load_bus = Vec::with_capacity(loads.len());
        for l in &loads {
            let b = lookup("load", l.bus, l.bus)?;
            if load_bus.contains(&b) {
                return Err(Error::semantic("load", l.bus, "one load entry per bus"));
            }
            if !(l.p_mw >= 0.0 && l.p_mw.is_finite()) {
                return Err(Error::semantic("load", l.bus, "p_mw must be >= 0"));
            }
            if l.shed_cost_per_mw.is_some_and(|c| !(c >= 0.0)) {
                return Err(Error::semantic("load", l.bus, "cost must be >= 0"));
            }
            load_bus.push(b);
        }

        failure_rate.default.validate("default")?;
        if !(failure_rate.trip_factor >= 1.0) {
            return Err(Error::semantic("failure_rate", "trip_factor", "must be >= 1"));
        }
        if !(costs.shed_per_mw >= 0.0 && costs.gen_adjust_per_mw >= 0.0) {
            return Err(Error::semantic("costs", "default", "costs must be >= 0"));
        }

        Ok(NetworkCase {
            base_mva,
            buses,
            branches,
            generators,
            loads,
            failure_rate,
            costs,
            bus_index,
            branch_ends,
            gen_bus,
            load_bus,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CaseFile = serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.schema_version != 1 {
            return Err(Error::semantic(
                "case",
                "schema_version",
                format!("unsupported version {}", file.schema_version),
            ));
        }
        NetworkCase::new(
            file.base_mva,
            file.buses,
            file.branches,
            file.generators,
            file.loads,
            file.failure_rate,
            file.costs,
        )
    }

    pub fn to_json(&self) -> String {
        let file = CaseFile {
            schema_version: 1,
            base_mva: self.base_mva,
            buses: self.buses.clone(),
            branches: self.branches.clone(),
            generators: self.generators.clone(),
            loads: self.loads.clone(),
            failure_rate: self.failure_rate,
            costs: self.costs,
        };
        serde_json::to_string_pretty(&file).expect("case serializes")
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_loads(&self) -> usize {
        self.loads.len()
    }

    pub fn n_gens(&self) -> usize {
        self.generators.len()
    }

    /// Length of the state vector `[P_d; P_g]`.
    pub fn state_dim(&self) -> usize {
        self.loads.len() + self.generators.len()
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn branch_index(&self, id: u32) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    /// Bus indices (not ids) of branch `k`.
    pub fn branch_ends(&self, k: usize) -> (usize, usize) {
        self.branch_ends[k]
    }

    pub fn gen_bus(&self, g: usize) -> usize {
        self.gen_bus[g]
    }

    pub fn load_bus(&self, l: usize) -> usize {
        self.load_bus[l]
    }

    pub fn failure_params(&self, k: usize) -> FailureParams {
        self.branches[k].failure.unwrap_or(self.failure_rate.default)
    }

    pub fn shed_cost(&self, l: usize) -> f64 {
        self.loads[l].shed_cost_per_mw.unwrap_or(self.costs.shed_per_mw)
    }

    pub fn gen_cost(&self, g: usize) -> f64 {
        self.generators[g].cost_per_mw.unwrap_or(self.costs.gen_adjust_per_mw)
    }

    /// Scheduled dispatch carried by the case file.
    pub fn scheduled_state(&self) -> crate::grid::SystemState {
        let mut v: Vec<f64> = self.loads.iter().map(|l| l.p_mw).collect();
        v.extend(self.generators.iter().map(|g| g.p_mw));
        crate::grid::SystemState::from_vec(self.loads.len(), v)
    }

    /// Human-readable name of state variable `j`.
    pub fn variable_name(&self, j: usize) -> (&'static str, u32) {
        if j < self.loads.len() {
            ("P_d", self.loads[j].bus)
        } else {
            ("P_g", self.generators[j - self.loads.len()].bus)
        }
    }

    /// Returns a copy with all branch flow limits replaced by `f(k, old)`.
    pub fn with_rates(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let mut branches = self.branches.clone();
        for (k, b) in branches.iter_mut().enumerate() {
            b.rate_mw = f(k, b.rate_mw);
        }
        NetworkCase::new(
            self.base_mva,
            self.buses.clone(),
            branches,
            self.generators.clone(),
            self.loads.clone(),
            self.failure_rate,
            self.costs,
        )
    }

    /// Returns a copy with every load scaled by `factor` (generation schedule unchanged).
    pub fn with_load_scale(&self, factor: f64) -> Result<Self> {
        let loads = self
            .loads
            .iter()
            .map(|l| Load {
                p_mw: l.p_mw * factor,
                ..l.clone()
            })
            .collect();
        NetworkCase::new(
            self.base_mva,
            self.buses.clone(),
            self.branches.clone(),
            self.generators.clone(),
            loads,
            self.failure_rate,
            self.costs,
        )
    }
}

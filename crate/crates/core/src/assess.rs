//! Scenario preparation and risk assessment of a control target.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::cascade::{dispatch_execute, dispatch_target, short_timescale_process, Execution, LevelOptions, MAX_FAST_EVENTS};
use crate::error::{Error, Result};
use crate::gradient::{control_gradient, convergence_indices, ConvergenceIndices, Storage, DEFAULT_THRESHOLD};
use crate::grid::{NetworkCase, SystemState, Topology};
use crate::tree::{depth_cap, ConvergenceHistory, MarkovTree, Policy, SearchBudget, TreeOptions};

/// Shed above this amount in the intact-network dispatch makes the base case infeasible (MW).
const BASE_SHED_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StorageMode {
    /// Dense below the bus-count cutoff, compressed above.
    Auto { threshold: f64 },
    Dense,
    Compressed { threshold: f64 },
}

impl StorageMode {
    pub fn resolve(&self, case: &NetworkCase) -> Storage {
        match *self {
            StorageMode::Auto { threshold } => Storage::auto(case.n_buses(), threshold),
            StorageMode::Dense => Storage::Dense,
            StorageMode::Compressed { threshold } => Storage::Compressed { threshold },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssessConfig {
    /// Dispatch interval (min).
    pub tau_d: f64,
    /// Horizon (min).
    pub t_max: f64,
    pub budget: SearchBudget,
    pub gradient: bool,
    pub storage: StorageMode,
    pub absorb_on_no_outage: bool,
    pub max_fast_events: usize,
    pub record_signatures: bool,
}

impl Default for AssessConfig {
    fn default() -> Self {
        AssessConfig {
            tau_d: 15.0,
            t_max: 150.0,
            budget: SearchBudget::default(),
            gradient: true,
            storage: StorageMode::Auto {
                threshold: DEFAULT_THRESHOLD,
            },
            absorb_on_no_outage: false,
            max_fast_events: MAX_FAST_EVENTS,
            record_signatures: false,
        }
    }
}

impl AssessConfig {
    pub fn depth(&self) -> Result<usize> {
        depth_cap(self.t_max, self.tau_d)
    }

    /// Same configuration with `levels` tree levels.
    pub fn with_depth(mut self, levels: usize) -> Self {
        self.t_max = self.tau_d * levels as f64;
        self
    }

    pub fn level_options(&self) -> LevelOptions {
        LevelOptions {
            tau_d: self.tau_d,
            max_fast_events: self.max_fast_events,
            record_signature: self.record_signatures,
        }
    }

    pub fn tree_options(&self, case: &NetworkCase) -> Result<TreeOptions> {
        Ok(TreeOptions {
            level: self.level_options(),
            depth: self.depth()?,
            gradient: self.gradient,
            storage: self.storage.resolve(case),
            absorb_on_no_outage: self.absorb_on_no_outage,
        })
    }
}

/// The state the control acts on: base dispatch, initial outages and the
/// fast process they trigger.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Branch indices of the initial outage.
    pub outages: Vec<usize>,
    pub base_state: SystemState,
    pub base_topology: Topology,
    /// `x_pre`: state after the initial outage's fast process.
    pub pre_state: SystemState,
    pub pre_topology: Topology,
    /// Fast-process cost of the initial outage, not part of `R'` ($).
    pub initial_cost: f64,
    /// `x*_0`: DC-OPF target from `x_pre`.
    pub default_target: SystemState,
}

/// Maps case branch ids to indices.
pub fn branch_indices(case: &NetworkCase, ids: &[u32]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|&id| {
            case.branch_index(id)
                .ok_or_else(|| Error::InvalidArgument(format!("no branch with id {id}")))
        })
        .collect()
}

pub fn prepare_scenario(case: &NetworkCase, outages: &[usize], cfg: &AssessConfig) -> Result<Scenario> {
    if let Some(&k) = outages.iter().find(|&&k| k >= case.n_branches()) {
        return Err(Error::InvalidArgument(format!("branch index {k} out of range")));
    }
    let base_topology = Topology::intact(case);
    let schedule = case.scheduled_state();
    let base = dispatch_target(case, &base_topology, &schedule)?;
    let shed: f64 = (0..case.n_loads()).map(|l| schedule.load(l) - base.target.load(l)).sum();
    if base.fallback || shed > BASE_SHED_TOL {
        return Err(Error::InfeasibleBase(format!(
            "intact network cannot serve the scheduled load (shed {shed:.3} MW)"
        )));
    }
    let base_state = base.target;
    let (topo, _) = base_topology.apply_outage(case, outages);
    let fast = short_timescale_process(case, &topo, &base_state, cfg.max_fast_events)?;
    let default_target = dispatch_target(case, &fast.topology, &fast.final_state)?.target;
    Ok(Scenario {
        outages: outages.to_vec(),
        base_state,
        base_topology,
        pre_state: fast.final_state,
        pre_topology: fast.topology,
        initial_cost: fast.cost,
        default_target,
    })
}

/// Risk of one control target.
pub struct Assessment {
    pub target: SystemState,
    /// `C_0` ($).
    pub control_cost: f64,
    pub root_execution: Execution,
    pub tree: MarkovTree,
    pub history: ConvergenceHistory,
}

impl Assessment {
    pub fn subsequent_risk(&self) -> f64 {
        self.tree.subsequent_risk()
    }

    pub fn total_risk(&self) -> f64 {
        self.control_cost + self.subsequent_risk()
    }

    pub fn attempts(&self) -> usize {
        self.history.attempts.len()
    }

    /// `S^(0) = dR'/dx^(0)`, when tracked.
    pub fn state_gradient(&self) -> Option<&DVector<f64>> {
        self.tree.options().gradient.then(|| self.tree.root_gradient())
    }

    /// `Γ = dR'/dx*`.
    pub fn control_gradient(&self) -> Option<DVector<f64>> {
        self.state_gradient()
            .map(|s| control_gradient(s, &self.root_execution.d_target))
    }

    /// `Γ` after every attempt.
    pub fn gradient_history(&self) -> Vec<DVector<f64>> {
        self.history
            .attempts
            .iter()
            .filter_map(|a| a.root_gradient.as_ref())
            .map(|s| control_gradient(s, &self.root_execution.d_target))
            .collect()
    }

    /// Indices against the final-attempt gradient.
    pub fn convergence(&self) -> Option<ConvergenceIndices> {
        let hist = self.gradient_history();
        let last = hist.last()?.clone();
        Some(convergence_indices(&hist, &last))
    }

    /// Discrete outcome of every node keyed by label, for change detection.
    pub fn signatures(&self) -> BTreeMap<Vec<usize>, u64> {
        self.tree.nodes().iter().map(|n| (n.label.clone(), n.signature)).collect()
    }
}

/// `C_0`: shed at `c_D` and generation movement at `c_G` from `x_pre` to `x*`.
pub fn control_cost(case: &NetworkCase, pre: &SystemState, target: &SystemState) -> f64 {
    crate::cascade::adjustment_cost(case, pre, target)
}

/// Executes `target` from the pre-control state and searches the tree below it.
pub fn assess(case: &NetworkCase, scenario: &Scenario, target: &SystemState, cfg: &AssessConfig) -> Result<Assessment> {
    if target.dim() != case.state_dim() {
        return Err(Error::Dimension(format!(
            "target has {} entries, case state has {}",
            target.dim(),
            case.state_dim()
        )));
    }
    let root_execution = dispatch_execute(case, &scenario.pre_topology, &scenario.pre_state, target, cfg.tau_d)?;
    let mut tree = MarkovTree::new(
        case,
        root_execution.state.clone(),
        scenario.pre_topology.clone(),
        cfg.tree_options(case)?,
    )?;
    if cfg.record_signatures {
        tree.node_mut(crate::tree::ROOT).signature ^= crate::cascade::execution_signature(&root_execution);
    }
    let history = tree.search(case, &cfg.budget)?;
    Ok(Assessment {
        target: target.clone(),
        control_cost: control_cost(case, &scenario.pre_state, target),
        root_execution,
        tree,
        history,
    })
}

/// Finite-difference check of one control component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCheck {
    pub index: usize,
    pub kind: &'static str,
    pub bus: u32,
    pub gradient: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
    /// The discrete outcome changed under perturbation.
    pub flagged: bool,
    /// Counted toward pass/fail.
    pub checked: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientValidation {
    pub step: f64,
    pub components: Vec<ComponentCheck>,
    pub unflagged_fraction: f64,
    pub max_relative_error: f64,
    pub pass: bool,
}

/// Components with `|Γ|` or `|FD|` above this are compared ($/MW).
pub const CHECK_FLOOR: f64 = 1e-3;
pub const CHECK_TOLERANCE: f64 = 0.05;
pub const MIN_UNFLAGGED: f64 = 0.8;

/// Compares `Γ` with central differences of exhaustively assessed `R'`.
pub fn validate_gradient(
    case: &NetworkCase,
    scenario: &Scenario,
    target: &SystemState,
    cfg: &AssessConfig,
    step: f64,
) -> Result<GradientValidation> {
    if !matches!(cfg.budget.policy, Policy::Exhaustive { .. }) {
        return Err(Error::InvalidArgument("gradient validation needs exhaustive search".into()));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let mut base_cfg = *cfg;
    base_cfg.gradient = true;
    base_cfg.record_signatures = true;
    base_cfg.budget.attempts = usize::MAX;
    let base = assess(case, scenario, target, &base_cfg)?;
    let gamma = base.control_gradient().expect("gradient enabled");
    let reference = base.signatures();
    let mut fd_cfg = base_cfg;
    fd_cfg.gradient = false;
    let mut components = Vec::new();
    for i in 0..target.dim() {
        let run = |delta: f64| -> Result<(f64, bool)> {
            let a = assess(case, scenario, &target.perturbed(i, delta), &fd_cfg)?;
            Ok((a.subsequent_risk(), a.signatures() != reference))
        };
        let (up, flag_up) = run(step)?;
        let (down, flag_down) = run(-step)?;
        let fd = (up - down) / (2.0 * step);
        let g = gamma[i];
        let flagged = flag_up || flag_down;
        let checked = !flagged && g.abs().max(fd.abs()) > CHECK_FLOOR;
        let relative_error = if fd != 0.0 {
            (g - fd).abs() / fd.abs()
        } else if g == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let (kind, bus) = case.variable_name(i);
        components.push(ComponentCheck {
            index: i,
            kind,
            bus,
            gradient: g,
            finite_difference: fd,
            relative_error,
            flagged,
            checked,
            pass: !checked || relative_error <= CHECK_TOLERANCE,
        });
    }
    let n = components.len().max(1) as f64;
    let unflagged_fraction = components.iter().filter(|c| !c.flagged).count() as f64 / n;
    let max_relative_error = components
        .iter()
        .filter(|c| c.checked)
        .map(|c| c.relative_error)
        .fold(0.0, f64::max);
    let pass = unflagged_fraction >= MIN_UNFLAGGED && components.iter().all(|c| c.pass);
    Ok(GradientValidation {
        step,
        components,
        unflagged_fraction,
        max_relative_error,
        pass,
    })
}

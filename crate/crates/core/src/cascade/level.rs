use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::DVector;

use crate::cascade::dispatch::{dispatch_execute, dispatch_target, Execution, TargetDispatch};
use crate::cascade::failure::{failure_rates, FailureRates};
use crate::cascade::probability::{level_probabilities, probability_sensitivity, LevelProbabilities, ProbabilityGradient};
use crate::cascade::short_term::{short_timescale_process, ShortTimescaleTrace};
use crate::error::Result;
use crate::grid::{DcModel, NetworkCase, SystemState, Topology};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelOptions {
    /// Dispatch interval in minutes.
    pub tau_d: f64,
    pub max_fast_events: usize,
    /// Also hash the discrete outcome (trip sets, LP Jacobians).
    pub record_signature: bool,
}

impl Default for LevelOptions {
    fn default() -> Self {
        LevelOptions {
            tau_d: 15.0,
            max_fast_events: crate::cascade::short_term::MAX_FAST_EVENTS,
            record_signature: false,
        }
    }
}

/// One step down the tree: outage `event` hits state `x^(r)`, the fast process
/// runs, then re-dispatch moves toward the DC-OPF target.
#[derive(Debug, Clone)]
pub struct LevelRecord {
    /// 0 = no outage, `k + 1` = branch `k`.
    pub event: usize,
    pub fast: ShortTimescaleTrace,
    pub target: TargetDispatch,
    pub execution: Execution,
    pub cost_fast: f64,
    pub cost_redispatch: f64,
    pub cost: f64,
    /// Hash of the discrete outcome; 0 unless requested.
    pub signature: u64,
}

impl LevelRecord {
    pub fn post_outage(&self) -> &SystemState {
        &self.fast.final_state
    }

    pub fn state(&self) -> &SystemState {
        &self.execution.state
    }

    pub fn topology(&self) -> &Topology {
        &self.fast.topology
    }

    pub fn flagged(&self) -> bool {
        self.fast.truncated || self.target.fallback || self.execution.emergency
    }
}

/// Hashes entries rounded to `1e-8` of the largest magnitude, so rounding
/// noise in pinned quantities does not register.
pub(crate) fn hash_matrix<'a>(h: &mut DefaultHasher, values: impl IntoIterator<Item = &'a f64> + Clone) {
    let scale = values.clone().into_iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    for v in values {
        ((v / scale * 1e8).round() as i64).hash(h);
    }
}

/// Discrete outcome of an execution dispatch: emergency flag and active set.
pub fn execution_signature(execution: &Execution) -> u64 {
    let mut h = DefaultHasher::new();
    execution.emergency.hash(&mut h);
    hash_matrix(&mut h, execution.d_prime.iter());
    hash_matrix(&mut h, execution.d_target.iter());
    h.finish()
}

/// Which failure-rate segment each branch sits on.
pub fn rate_segment_signature(rates: &FailureRates) -> u64 {
    let mut h = DefaultHasher::new();
    rates.segment.hash(&mut h);
    h.finish()
}

/// Fast process followed by target and execution dispatch.
pub fn simulate_level(
    case: &NetworkCase,
    topo: &Topology,
    x: &SystemState,
    event: usize,
    opts: &LevelOptions,
) -> Result<LevelRecord> {
    let after = if event == 0 {
        topo.clone()
    } else {
        topo.apply_outage(case, &[event - 1]).0
    };
    let fast = short_timescale_process(case, &after, x, opts.max_fast_events)?;
    let target = dispatch_target(case, &fast.topology, &fast.final_state)?;
    let execution = dispatch_execute(case, &fast.topology, &fast.final_state, &target.target, opts.tau_d)?;
    let signature = if opts.record_signature {
        let mut h = DefaultHasher::new();
        for e in &fast.events {
            e.tripped.hash(&mut h);
            e.actions.hash(&mut h);
        }
        fast.truncated.hash(&mut h);
        target.fallback.hash(&mut h);
        hash_matrix(&mut h, target.jacobian.iter());
        execution_signature(&execution).hash(&mut h);
        h.finish()
    } else {
        0
    };
    let cost_fast = fast.cost;
    let cost_redispatch = execution.cost;
    Ok(LevelRecord {
        event,
        cost: cost_fast + cost_redispatch,
        fast,
        target,
        execution,
        cost_fast,
        cost_redispatch,
        signature,
    })
}

/// Outage probabilities of the next level at state `x` on `topo`, with their
/// gradient with respect to `x`.
#[derive(Debug, Clone)]
pub struct NodeOutlook {
    pub rates: FailureRates,
    pub probabilities: LevelProbabilities,
    pub gradient: ProbabilityGradient,
}

pub fn node_outlook(case: &NetworkCase, topo: &Topology, x: &SystemState, tau: f64) -> Result<NodeOutlook> {
    let model = DcModel::new(case, topo)?;
    let flows = model.solve(x).flows;
    let rates = failure_rates(case, topo, &flows);
    let probabilities = level_probabilities(&rates.lambda, tau)?;
    let gradient = if rates.responsive().is_empty() {
        ProbabilityGradient::zero(case.n_branches() + 1, x.dim())
    } else {
        probability_sensitivity(&rates, tau, &model.flow_sensitivity())?
    };
    Ok(NodeOutlook {
        rates,
        probabilities,
        gradient,
    })
}

/// `C = C_F + C_R` as a function of `x^(r)` through the level's frozen maps.
pub fn level_cost_gradient(rec: &LevelRecord) -> DVector<f64> {
    let jf = &rec.fast.jacobian;
    let dprime = (rec.execution.cost_d_prime.transpose() * jf).transpose();
    let jt = &rec.target.jacobian * jf;
    let dtarget = (rec.execution.cost_d_target.transpose() * jt).transpose();
    &rec.fast.cost_gradient + dprime + dtarget
}

/// `dx^(r+1)/dx^(r)` through the level's frozen maps.
pub fn level_state_jacobian(rec: &LevelRecord) -> Matrix {
    let jf = &rec.fast.jacobian;
    let jt = &rec.target.jacobian * jf;
    &rec.execution.d_target * jt + &rec.execution.d_prime * jf
}

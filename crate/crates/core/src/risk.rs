//! Risk-constrained re-dispatch and its iterated form.
//!
//! The single step solves a least-cost DC-OPF from `x_pre` with one extra
//! row: the first-order risk prediction `Γ·(x* - x*_k)` must fall by at least
//! `ΔR`. The iteration re-assesses every step and keeps only steps whose
//! measured `R'` falls.

use nalgebra::DVector;

use crate::assess::{assess, control_cost, AssessConfig, Assessment, Scenario};
use crate::cascade::adjust_lp;
use crate::error::{Error, Result};
use crate::grid::{NetworkCase, SystemState};

/// Times `ΔR` is halved after an infeasible step before giving up.
pub const MAX_HALVINGS: usize = 10;

/// Outcome of one risk-constrained dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct RmStep {
    pub target: SystemState,
    /// `C_0` of the new target from `x_pre` ($).
    pub control_cost: f64,
    /// `C_0` change against the anchor target ($).
    pub incremental_cost: f64,
    pub requested_reduction: f64,
    /// Reduction actually imposed after halvings.
    pub reduction: f64,
    /// `Γ·(x* - x*_k)`.
    pub predicted_change: f64,
    pub halvings: usize,
    /// No reduction was feasible; the anchor was returned.
    pub fallback: bool,
}

/// Optimum of the risk-constrained dispatch LP.
#[derive(Debug, Clone, PartialEq)]
pub struct RmSolution {
    pub target: SystemState,
    /// Marginal control cost of one more $ of required reduction.
    pub risk_price: f64,
}

/// Least-cost target whose predicted risk is at least `reduction` below the
/// anchor's, or `None` when no such target exists.
pub fn solve_risk_constrained(
    case: &NetworkCase,
    scenario: &Scenario,
    anchor: &SystemState,
    gamma: &DVector<f64>,
    reduction: f64,
) -> Result<Option<RmSolution>> {
    let pre = &scenario.pre_state;
    let mut lp = adjust_lp(
        case,
        &scenario.pre_topology,
        pre,
        &|l| case.shed_cost(l),
        &|g| case.gen_cost(g),
    )?;
    // Γ·(x_pre + E z - anchor) <= -ΔR
    let row: Vec<f64> = (gamma.transpose() * &lp.embedding).iter().copied().collect();
    let offset: f64 = (0..pre.dim()).map(|i| gamma[i] * (anchor.as_slice()[i] - pre.as_slice()[i])).sum();
    lp.push_fixed_row(&row, offset - reduction);
    Ok(lp
        .solve_with_limits(case, &scenario.pre_topology)?
        .map(|(sol, _)| RmSolution {
            target: lp.state(pre, &sol.x),
            // the risk row is the first inequality
            risk_price: -sol.duals_in[0],
        }))
}

/// One risk-constrained dispatch around `anchor` with gradient `gamma`.
///
/// `reduction == 0` returns the anchor itself. An infeasible reduction is
/// halved up to [`MAX_HALVINGS`] times.
pub fn rm_step(
    case: &NetworkCase,
    scenario: &Scenario,
    anchor: &SystemState,
    gamma: &DVector<f64>,
    reduction: f64,
) -> Result<RmStep> {
    if !(reduction >= 0.0) || !reduction.is_finite() {
        return Err(Error::InvalidArgument(format!("risk reduction must be finite and >= 0, got {reduction}")));
    }
    if gamma.len() != anchor.dim() {
        return Err(Error::Dimension(format!(
            "gradient has {} entries, target has {}",
            gamma.len(),
            anchor.dim()
        )));
    }
    let anchor_cost = control_cost(case, &scenario.pre_state, anchor);
    let keep = |fallback: bool, halvings: usize| RmStep {
        target: anchor.clone(),
        control_cost: anchor_cost,
        incremental_cost: 0.0,
        requested_reduction: reduction,
        reduction: 0.0,
        predicted_change: 0.0,
        halvings,
        fallback,
    };
    if reduction == 0.0 {
        return Ok(keep(false, 0));
    }
    let mut imposed = reduction;
    for halvings in 0..=MAX_HALVINGS {
        if let Some(RmSolution { target, .. }) = solve_risk_constrained(case, scenario, anchor, gamma, imposed)? {
            let cost = control_cost(case, &scenario.pre_state, &target);
            let predicted_change = (0..target.dim())
                .map(|i| gamma[i] * (target.as_slice()[i] - anchor.as_slice()[i]))
                .sum();
            return Ok(RmStep {
                target,
                control_cost: cost,
                incremental_cost: cost - anchor_cost,
                requested_reduction: reduction,
                reduction: imposed,
                predicted_change,
                halvings,
                fallback: false,
            });
        }
        imposed *= 0.5;
    }
    Ok(keep(true, MAX_HALVINGS))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrmConfig {
    pub assess: AssessConfig,
    /// First `ΔR` as a fraction of the initial `R'`.
    pub initial_fraction: f64,
    /// Later `ΔR` is capped at this fraction of the current `R'`.
    pub step_fraction: f64,
    /// Stop when a step gains less than `max(stop_floor, stop_fraction R'_0)`.
    pub stop_fraction: f64,
    pub stop_floor: f64,
    pub max_rounds: usize,
    /// Consecutive rejected steps (each halving `ΔR`) before stopping.
    pub max_rejections: usize,
    /// Fixed first `ΔR` instead of `initial_fraction R'_0`.
    pub first_reduction: Option<f64>,
}

impl Default for IrmConfig {
    fn default() -> Self {
        IrmConfig {
            assess: AssessConfig::default(),
            initial_fraction: 0.8,
            step_fraction: 0.8,
            stop_fraction: 1e-3,
            stop_floor: 1.0,
            max_rounds: 20,
            max_rejections: 3,
            first_reduction: None,
        }
    }
}

/// One trajectory row. Round 0 is the default target.
#[derive(Debug, Clone, PartialEq)]
pub struct IrmRow {
    pub round: usize,
    /// Reduction imposed on the step LP.
    pub reduction: f64,
    pub control_cost: f64,
    pub subsequent_risk: f64,
    pub accepted: bool,
}

impl IrmRow {
    pub fn total(&self) -> f64 {
        self.control_cost + self.subsequent_risk
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Steps no longer gain more than the stop threshold.
    NoImprovement,
    /// `R'` is already below the stop threshold.
    RiskNegligible,
    /// No reduction is feasible at the current target.
    Infeasible,
    RoundLimit,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::NoImprovement => "no-improvement",
            StopReason::RiskNegligible => "risk-negligible",
            StopReason::Infeasible => "infeasible",
            StopReason::RoundLimit => "round-limit",
        })
    }
}

pub struct IrmOutcome {
    pub rows: Vec<IrmRow>,
    /// Last accepted target and its assessment.
    pub assessment: Assessment,
    pub initial_risk: f64,
    pub stop: StopReason,
    /// Below this gain a step is rejected ($).
    pub stop_threshold: f64,
}

impl IrmOutcome {
    pub fn target(&self) -> &SystemState {
        &self.assessment.target
    }

    pub fn final_risk(&self) -> f64 {
        self.assessment.subsequent_risk()
    }
}

/// Iterated risk-constrained dispatch from the default target.
pub fn irm(case: &NetworkCase, scenario: &Scenario, cfg: &IrmConfig) -> Result<IrmOutcome> {
    let mut acfg = cfg.assess;
    acfg.gradient = true;
    let mut current = assess(case, scenario, &scenario.default_target, &acfg)?;
    let initial_risk = current.subsequent_risk();
    let stop_threshold = cfg.stop_floor.max(cfg.stop_fraction * initial_risk);
    let mut rows = vec![IrmRow {
        round: 0,
        reduction: 0.0,
        control_cost: current.control_cost,
        subsequent_risk: initial_risk,
        accepted: true,
    }];
    let mut reduction = cfg.first_reduction.unwrap_or(cfg.initial_fraction * initial_risk);
    let mut rejections = 0;
    let mut stop = StopReason::RoundLimit;
    for round in 1..=cfg.max_rounds {
        if current.subsequent_risk() <= stop_threshold {
            stop = StopReason::RiskNegligible;
            break;
        }
        let gamma = current.control_gradient().expect("gradient enabled");
        let step = rm_step(case, scenario, &current.target, &gamma, reduction)?;
        if step.fallback {
            stop = StopReason::Infeasible;
            break;
        }
        let trial = assess(case, scenario, &step.target, &acfg)?;
        let gain = current.subsequent_risk() - trial.subsequent_risk();
        let accepted = gain > stop_threshold;
        rows.push(IrmRow {
            round,
            reduction: step.reduction,
            control_cost: trial.control_cost,
            subsequent_risk: trial.subsequent_risk(),
            accepted,
        });
        if accepted {
            rejections = 0;
            reduction = step.reduction.min(cfg.step_fraction * trial.subsequent_risk());
            current = trial;
        } else {
            rejections += 1;
            if rejections > cfg.max_rejections {
                stop = StopReason::NoImprovement;
                break;
            }
            reduction = step.reduction * 0.5;
        }
    }
    Ok(IrmOutcome {
        rows,
        assessment: current,
        initial_risk,
        stop,
        stop_threshold,
    })
}

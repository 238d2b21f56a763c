//! One level of cascade dynamics: flow-dependent failure rates, outage
//! probabilities, the fast overload process and re-dispatch.

mod dispatch;
mod failure;
mod level;
mod probability;
mod short_term;

pub use dispatch::{adjustment_cost, dispatch_execute, dispatch_target, Execution, TargetDispatch, TARGET_GEN_WEIGHT};
pub(crate) use dispatch::adjust_lp;
pub use failure::{failure_rate, failure_rates, rate_segment, FailureRates, RateSegment, BREAKPOINT_TOL};
pub use level::{
    execution_signature, level_cost_gradient, level_state_jacobian, node_outlook, rate_segment_signature, simulate_level,
    LevelOptions, LevelRecord, NodeOutlook,
};
pub use probability::{
    level_probabilities, probability_rate_jacobian, probability_sensitivity, LevelProbabilities, ProbabilityGradient,
};
pub use short_term::{short_timescale_process, BalanceAction, FastEvent, ShortTimescaleTrace, MAX_FAST_EVENTS};

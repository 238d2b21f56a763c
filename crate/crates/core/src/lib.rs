//! Cascading-outage risk assessment on DC grid models.
//!
//! A Markovian tree of mid-timescale branch outages is searched forward,
//! each level simulating the short-timescale overload process and an
//! LP re-dispatch. Costs and probabilities are accumulated backward into the
//! subsequent risk `R'` and, together with chained state sensitivities, into
//! the risk gradient with respect to the re-dispatch target. The gradient
//! drives a risk-constrained re-dispatch LP, optionally iterated.

pub mod assess;
pub mod cascade;
pub mod cases;
mod error;
pub mod gradient;
pub mod grid;
pub mod lp;
pub mod report;
pub mod risk;
pub mod tree;

pub use error::{Error, Result};

/// Dense matrix type used for every sensitivity.
pub type Matrix = nalgebra::DMatrix<f64>;

pub use grid::{CaseFormat, NetworkCase, SystemState, Topology};

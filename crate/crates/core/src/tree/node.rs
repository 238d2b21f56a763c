use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::gradient::ChainMatrix;
use crate::grid::{SystemState, Topology};
use crate::Matrix;

/// Next-level probabilities of a node and, when gradients are tracked, their
/// factored derivative with respect to the root state.
#[derive(Debug, Clone)]
pub(crate) struct Outlook {
    /// By event id.
    pub probabilities: Vec<f64>,
    /// `(m + 1) x a`.
    pub weights: Matrix,
    /// `a x dim`, already chained to the root state.
    pub basis: Option<ChainMatrix>,
    /// Failure-rate segment hash, when signatures are recorded.
    pub segments: u64,
}

impl Outlook {
    pub fn probability_gradient(&self, event: usize, dim: usize) -> DVector<f64> {
        match &self.basis {
            Some(b) if self.weights.ncols() > 0 => (self.weights.row(event) * b.to_dense()).transpose(),
            _ => DVector::zeros(dim),
        }
    }
}

/// One labeled cascade state on the tree.
#[derive(Debug, Clone)]
pub struct TreeNode {
    /// Event ids from the root; empty for the root.
    pub label: Vec<usize>,
    pub level: usize,
    pub parent: Option<usize>,
    pub event: usize,
    /// Conditional probability from the parent.
    pub probability: f64,
    /// Cost incurred on entering this node ($).
    pub cost: f64,
    /// `C + Σ Pr·C'` over instantiated children ($).
    pub equivalent_cost: f64,
    /// `Σ Pr·C'` over instantiated children ($).
    pub subsequent_risk: f64,
    /// Newly instantiated on the latest path through this node.
    pub visited: bool,
    /// Accumulated gradient of the subtree risk with respect to the root state ($/MW).
    pub gradient: DVector<f64>,
    pub delta_cost: f64,
    /// Event id -> node index.
    pub children: BTreeMap<usize, usize>,
    pub terminal: bool,
    pub complete: bool,
    /// Discrete outcome hash of the transition into this node.
    pub signature: u64,
    pub flagged: bool,
    pub(crate) state: SystemState,
    pub(crate) topology: Topology,
    pub(crate) outlook: Option<Outlook>,
    pub(crate) chain: Option<ChainMatrix>,
    pub(crate) d_probability: DVector<f64>,
    pub(crate) d_cost: DVector<f64>,
}

impl TreeNode {
    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Probability of `event` from this node, if the node can branch.
    pub fn child_probability(&self, event: usize) -> f64 {
        self.outlook.as_ref().map_or(0.0, |o| o.probabilities[event])
    }

    pub fn child_probabilities(&self) -> &[f64] {
        self.outlook.as_ref().map_or(&[], |o| &o.probabilities)
    }

    /// `dPr/dx^(0)` of the transition into this node.
    pub fn probability_gradient(&self) -> &DVector<f64> {
        &self.d_probability
    }

    /// `dC/dx^(0)`.
    pub fn cost_gradient(&self) -> &DVector<f64> {
        &self.d_cost
    }

    pub fn label_string(&self) -> String {
        if self.label.is_empty() {
            "root".to_string()
        } else {
            self.label.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("-")
        }
    }
}

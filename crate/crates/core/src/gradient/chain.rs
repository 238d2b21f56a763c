use nalgebra::DVector;

use crate::cascade::LevelRecord;
use crate::Matrix;

/// Sensitivities of one level's quantities with respect to the root state `x^(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    /// `dx'/dx^(0)`.
    pub post_outage: Matrix,
    /// `dx*/dx^(0)`.
    pub target: Matrix,
    /// `dx^(r+1)/dx^(0)`.
    pub state: Matrix,
    /// `dC^(r+1)/dx^(0)`.
    pub cost: DVector<f64>,
}

/// Advances the chain by one level given `dx^(r)/dx^(0)`.
pub fn forward_step(rec: &LevelRecord, parent: &Matrix) -> ChainStep {
    let post_outage = &rec.fast.jacobian * parent;
    let target = &rec.target.jacobian * &post_outage;
    let state = &rec.execution.d_target * &target + &rec.execution.d_prime * &post_outage;
    let cost = (rec.fast.cost_gradient.transpose() * parent
        + rec.execution.cost_d_prime.transpose() * &post_outage
        + rec.execution.cost_d_target.transpose() * &target)
        .transpose();
    ChainStep {
        post_outage,
        target,
        state,
        cost,
    }
}

/// Chains a whole path starting from the identity at level 0.
pub fn forward_derivatives(path: &[LevelRecord], dim: usize) -> Vec<ChainStep> {
    let mut out: Vec<ChainStep> = Vec::with_capacity(path.len());
    let mut current = Matrix::identity(dim, dim);
    for rec in path {
        let step = forward_step(rec, &current);
        current = step.state.clone();
        out.push(step);
    }
    out
}

/// `Γ = S^(0) dx^(0)/dx*`.
pub fn control_gradient(root_gradient: &DVector<f64>, execution_target: &Matrix) -> DVector<f64> {
    (root_gradient.transpose() * execution_target).transpose()
}

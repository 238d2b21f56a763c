use nalgebra::DVector;

use crate::cascade::failure::FailureRates;
use crate::error::{Error, Result};
use crate::Matrix;

/// Conditional event probabilities for one level, indexed by event id:
/// entry 0 is "no outage", entry `k + 1` is the outage of branch `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelProbabilities {
    pub by_event: Vec<f64>,
}

impl LevelProbabilities {
    pub fn no_outage(&self) -> f64 {
        self.by_event[0]
    }

    pub fn outage(&self, branch: usize) -> f64 {
        self.by_event[branch + 1]
    }

    pub fn n_events(&self) -> usize {
        self.by_event.len()
    }
}

/// `(1 - e^{-s t}) / s` and its derivative in `s`, stable near `s = 0`.
fn escape_factor(s: f64, tau: f64) -> (f64, f64) {
    let z = s * tau;
    if z < 1e-3 {
        let g = tau * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0);
        let dg = tau * tau * (-0.5 + z / 3.0 - z * z / 8.0 + z * z * z / 30.0);
        (g, dg)
    } else {
        let one_minus = -(-z).exp_m1();
        let g = one_minus / s;
        let dg = (tau * (-z).exp() - g) / s;
        (g, dg)
    }
}

fn check(lambda: &[f64], tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("dispatch interval must be positive, got {tau}")));
    }
    if let Some(k) = lambda.iter().position(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "failure rate {k} is {}; rates must be finite and nonnegative",
            lambda[k]
        )));
    }
    Ok(())
}

/// Competing exponential outages over one interval `tau` (min).
pub fn level_probabilities(lambda: &[f64], tau: f64) -> Result<LevelProbabilities> {
    check(lambda, tau)?;
    let s: f64 = lambda.iter().sum();
    let mut by_event = Vec::with_capacity(lambda.len() + 1);
    by_event.push((-s * tau).exp());
    let (g, _) = escape_factor(s, tau);
    by_event.extend(lambda.iter().map(|&l| l * g));
    Ok(LevelProbabilities { by_event })
}

/// `d Pr / d lambda`, `(m + 1) x m`, rows by event id.
pub fn probability_rate_jacobian(lambda: &[f64], tau: f64) -> Result<Matrix> {
    check(lambda, tau)?;
    let m = lambda.len();
    let s: f64 = lambda.iter().sum();
    let (g, dg) = escape_factor(s, tau);
    let e = (-s * tau).exp();
    let mut jac = Matrix::zeros(m + 1, m);
    for j in 0..m {
        jac[(0, j)] = -tau * e;
    }
    for i in 0..m {
        for j in 0..m {
            jac[(i + 1, j)] = lambda[i] * dg + if i == j { g } else { 0.0 };
        }
    }
    Ok(jac)
}

/// Low-rank `d Pr / d x`: `weights * basis`, where only branches with a
/// nonzero rate slope contribute a column of `weights` and a row of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityGradient {
    pub branches: Vec<usize>,
    /// `(m + 1) x a`.
    pub weights: Matrix,
    /// `a x dim`.
    pub basis: Matrix,
}

impl ProbabilityGradient {
    pub fn zero(n_events: usize, dim: usize) -> Self {
        ProbabilityGradient {
            branches: Vec::new(),
            weights: Matrix::zeros(n_events, 0),
            basis: Matrix::zeros(0, dim),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Gradient of the probability of `event`.
    pub fn row(&self, event: usize) -> DVector<f64> {
        if self.is_zero() {
            return DVector::zeros(self.dim());
        }
        (self.weights.row(event) * &self.basis).transpose()
    }

    pub fn to_dense(&self) -> Matrix {
        if self.is_zero() {
            return Matrix::zeros(self.weights.nrows(), self.dim());
        }
        &self.weights * &self.basis
    }

    /// Re-expresses the gradient with respect to other variables through `chain = dx/dy`.
    pub fn chained(&self, chain: &Matrix) -> ProbabilityGradient {
        ProbabilityGradient {
            branches: self.branches.clone(),
            weights: self.weights.clone(),
            basis: &self.basis * chain,
        }
    }
}

/// `dPr/dlambda * diag(dlambda/dF) * dF/dx`, kept in factored form.
pub fn probability_sensitivity(
    rates: &FailureRates,
    tau: f64,
    flow_sensitivity: &Matrix,
) -> Result<ProbabilityGradient> {
    let dim = flow_sensitivity.ncols();
    let m = rates.lambda.len();
    let active = rates.responsive();
    if active.is_empty() {
        check(&rates.lambda, tau)?;
        return Ok(ProbabilityGradient::zero(m + 1, dim));
    }
    let jac = probability_rate_jacobian(&rates.lambda, tau)?;
    let mut weights = Matrix::zeros(m + 1, active.len());
    let mut basis = Matrix::zeros(active.len(), dim);
    for (a, &k) in active.iter().enumerate() {
        // the rate slope goes with the weights so the basis stays a unitless
        // flow sensitivity and compresses on the same scale as state chains
        weights.set_column(a, &(jac.column(k) * rates.slope[k]));
        basis.set_row(a, &flow_sensitivity.row(k));
    }
    Ok(ProbabilityGradient {
        branches: active,
        weights,
        basis,
    })
}

use crate::error::{Error, Result};
use crate::Matrix;

/// `min c^T x  s.t.  A_eq x = b_eq,  A_in x <= b_in,  lo <= x <= hi`.
///
/// Bounds may be infinite. Row matrices may have zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    pub a_in: Matrix,
    pub b_in: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl LpProblem {
    /// Problem with `n` variables, no rows, bounds `[0, +inf)`.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        LpProblem {
            c,
            a_eq: Matrix::zeros(0, n),
            b_eq: Vec::new(),
            a_in: Matrix::zeros(0, n),
            b_in: Vec::new(),
            lo: vec![0.0; n],
            hi: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn n_in(&self) -> usize {
        self.b_in.len()
    }

    pub fn push_eq(&mut self, row: &[f64], rhs: f64) {
        self.a_eq = append_row(&self.a_eq, row);
        self.b_eq.push(rhs);
    }

    pub fn push_in(&mut self, row: &[f64], rhs: f64) {
        self.a_in = append_row(&self.a_in, row);
        self.b_in.push(rhs);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let dims_ok = self.a_eq.ncols() == n
            && self.a_in.ncols() == n
            && self.a_eq.nrows() == self.b_eq.len()
            && self.a_in.nrows() == self.b_in.len()
            && self.lo.len() == n
            && self.hi.len() == n;
        if !dims_ok {
            return Err(Error::Dimension("LP problem dimensions are inconsistent".into()));
        }
        if let Some(j) = (0..n).find(|&j| !(self.lo[j] <= self.hi[j])) {
            return Err(Error::InvalidArgument(format!(
                "variable {j} has lo {} > hi {}",
                self.lo[j], self.hi[j]
            )));
        }
        let finite = self.c.iter().chain(&self.b_eq).chain(&self.b_in).all(|v| v.is_finite())
            && self.a_eq.iter().chain(self.a_in.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("LP data must be finite".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

fn append_row(m: &Matrix, row: &[f64]) -> Matrix {
    assert_eq!(m.ncols(), row.len(), "row length must equal variable count");
    let r = m.nrows();
    let mut out = m.clone().insert_row(r, 0.0);
    for (j, &v) in row.iter().enumerate() {
        out[(r, j)] = v;
    }
    out
}

/// Derivatives of the right-hand sides and bounds with respect to `p`
/// external parameters. Entries default to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTags {
    pub d_b_eq: Matrix,
    pub d_b_in: Matrix,
    pub d_lo: Matrix,
    pub d_hi: Matrix,
}

impl ParamTags {
    pub fn zeros(problem: &LpProblem, n_params: usize) -> Self {
        ParamTags {
            d_b_eq: Matrix::zeros(problem.n_eq(), n_params),
            d_b_in: Matrix::zeros(problem.n_in(), n_params),
            d_lo: Matrix::zeros(problem.n_vars(), n_params),
            d_hi: Matrix::zeros(problem.n_vars(), n_params),
        }
    }

    pub fn n_params(&self) -> usize {
        self.d_lo.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Final basis: one basic column per row plus the status of every
/// structural and slack column. Column `n + i` is the slack of inequality
/// row `i`; column `n + m_in + r` is the artificial of row `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers `d(objective)/d(b_eq)`.
    pub duals_eq: Vec<f64>,
    /// Multipliers `d(objective)/d(b_in)`; nonpositive at optimum.
    pub duals_in: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    pub primal_degenerate: bool,
    pub dual_degenerate: bool,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Multiple optimal bases may exist.
    pub fn degenerate(&self) -> bool {
        self.primal_degenerate || self.dual_degenerate
    }

    /// Indices of inequality rows whose slack is (numerically) zero.
    pub fn binding_rows(&self, p: &LpProblem, tol: f64) -> Vec<usize> {
        (0..p.n_in())
            .filter(|&i| {
                let lhs: f64 = (0..p.n_vars()).map(|j| p.a_in[(i, j)] * self.x[j]).sum();
                (p.b_in[i] - lhs).abs() <= tol * (1.0 + p.b_in[i].abs())
            })
            .collect()
    }
}

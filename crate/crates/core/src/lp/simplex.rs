//! Dense bounded-variable primal simplex, two phases.
//!
//! Pricing is Dantzig's rule; after a run of degenerate pivots the solver
//! switches to Bland's rule until progress resumes.

use crate::error::Result;
use crate::lp::problem::{Basis, LpProblem, LpSolution, LpStatus, VarStatus};

pub const FEAS_TOL: f64 = 1e-8;
pub const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 40;

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols`, equal to `B^{-1} A_full`.
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    status: Vec<VarStatus>,
    basic: Vec<usize>,
    xb: Vec<f64>,
    art_sign: Vec<f64>,
    first_art: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.hi[j],
            VarStatus::Free | VarStatus::Basic => 0.0,
        }
    }

    fn value(&self, j: usize) -> f64 {
        if self.status[j] == VarStatus::Basic {
            let r = self.basic.iter().position(|&b| b == j).expect("basic column has a row");
            self.xb[r]
        } else {
            self.nonbasic_value(j)
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let piv = self.t[r * n + j];
        for k in 0..n {
            self.t[r * n + k] /= piv;
        }
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        let apply = |row: &mut [f64]| {
            let f = row[j];
            if f != 0.0 {
                for k in 0..n {
                    row[k] -= f * prow[k];
                }
            }
        };
        before.chunks_mut(n).for_each(apply);
        after.chunks_mut(n).for_each(apply);
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basic[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Runs simplex iterations on `cost`. Returns `false` when unbounded.
    fn optimize(&mut self, cost: &[f64], iterations: &mut usize, limit: usize) -> bool {
        let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
        let tol = OPT_TOL * scale;
        let mut degenerate_run = 0usize;
        while *iterations < limit {
            *iterations += 1;
            let d = self.reduced_costs(cost);
            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if self.lo[j] == self.hi[j] {
                    continue;
                }
                let dir = match self.status[j] {
                    VarStatus::Basic => continue,
                    VarStatus::AtLower if d[j] < -tol => 1.0,
                    VarStatus::AtUpper if d[j] > tol => -1.0,
                    VarStatus::Free if d[j].abs() > tol => -d[j].signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if d[j].abs() > best {
                    best = d[j].abs();
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else { return true };

            // ratio test
            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, VarStatus)> = None;
            let mut leave_piv = 0.0f64;
            if self.lo[j].is_finite() && self.hi[j].is_finite() {
                step = self.hi[j] - self.lo[j];
            }
            for i in 0..self.m {
                let alpha = self.at(i, j);
                let delta = -alpha * dir;
                let b = self.basic[i];
                let (limit_i, hits) = if delta < -PIVOT_TOL && self.lo[b].is_finite() {
                    (((self.xb[i] - self.lo[b]) / -delta).max(0.0), VarStatus::AtLower)
                } else if delta > PIVOT_TOL && self.hi[b].is_finite() {
                    (((self.hi[b] - self.xb[i]) / delta).max(0.0), VarStatus::AtUpper)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit_i < step,
                    Some((r, _)) => {
                        if limit_i < step - 1e-12 {
                            true
                        } else if limit_i <= step + 1e-12 {
                            if bland {
                                b < self.basic[r]
                            } else {
                                alpha.abs() > leave_piv
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = limit_i;
                    leave = Some((i, hits));
                    leave_piv = alpha.abs();
                }
            }
            if step.is_infinite() {
                return false;
            }
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for i in 0..self.m {
                self.xb[i] -= self.at(i, j) * dir * step;
            }
            let entering_value = self.nonbasic_value(j) + dir * step;
            match leave {
                None => {
                    self.status[j] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                }
                Some((r, hits)) => {
                    let out = self.basic[r];
                    self.status[out] = hits;
                    self.pivot(r, j);
                    self.basic[r] = j;
                    self.status[j] = VarStatus::Basic;
                    self.xb[r] = entering_value;
                }
            }
        }
        true
    }

    /// Recomputes basic values from `B^{-1}` (artificial columns) for accuracy.
    fn refresh(&mut self, a_full: &[Vec<f64>], b: &[f64]) {
        let mut resid = b.to_vec();
        for j in 0..self.ncols {
            if self.status[j] != VarStatus::Basic {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    for (i, r) in resid.iter_mut().enumerate() {
                        *r -= a_full[i][j] * v;
                    }
                }
            }
        }
        for i in 0..self.m {
            let mut v = 0.0;
            for (k, r) in resid.iter().enumerate() {
                v += self.at(i, self.first_art + k) / self.art_sign[k] * r;
            }
            self.xb[i] = v;
        }
    }
}

/// Solves `p`. Infeasible and unbounded problems are reported through
/// [`LpSolution::status`].
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.n_vars();
    let m_eq = p.n_eq();
    let m_in = p.n_in();
    let m = m_eq + m_in;
    let first_art = n + m_in;
    let ncols = first_art + m;

    // full constraint rows over structural + slack columns
    let mut a_full: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for i in 0..m_eq {
        let mut row = vec![0.0; ncols];
        for j in 0..n {
            row[j] = p.a_eq[(i, j)];
        }
        a_full.push(row);
        b.push(p.b_eq[i]);
    }
    for i in 0..m_in {
        let mut row = vec![0.0; ncols];
        for j in 0..n {
            row[j] = p.a_in[(i, j)];
        }
        row[n + i] = 1.0;
        a_full.push(row);
        b.push(p.b_in[i]);
    }

    let mut lo = p.lo.clone();
    let mut hi = p.hi.clone();
    lo.extend(std::iter::repeat_n(0.0, m_in + m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, m_in + m));
    let mut status = vec![VarStatus::AtLower; ncols];
    for j in 0..n {
        status[j] = if lo[j].is_finite() {
            VarStatus::AtLower
        } else if hi[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        };
    }

    let mut tab = Tableau {
        m,
        ncols,
        t: vec![0.0; m * ncols],
        lo,
        hi,
        status,
        basic: vec![0; m],
        xb: vec![0.0; m],
        art_sign: vec![1.0; m],
        first_art,
    };
    let mut phase1_cost = vec![0.0; ncols];
    for i in 0..m {
        let mut r = b[i];
        for j in 0..n {
            let v = tab.nonbasic_value(j);
            if v != 0.0 {
                r -= a_full[i][j] * v;
            }
        }
        let (col, sign) = if i >= m_eq && r >= 0.0 {
            (n + (i - m_eq), 1.0)
        } else {
            let s = if r >= 0.0 { 1.0 } else { -1.0 };
            phase1_cost[first_art + i] = 1.0;
            (first_art + i, s)
        };
        tab.art_sign[i] = sign;
        a_full[i][first_art + i] = sign;
        for k in 0..ncols {
            tab.t[i * ncols + k] = a_full[i][k] * sign;
        }
        tab.basic[i] = col;
        tab.status[col] = VarStatus::Basic;
        tab.xb[i] = r * sign;
    }
    // artificials not used as the starting basis are fixed at zero
    for i in 0..m {
        if tab.basic[i] != first_art + i {
            tab.hi[first_art + i] = 0.0;
        }
    }

    let limit = 50 * (m + ncols) + 1000;
    let mut iterations = 0;
    let failed = |status: LpStatus, iterations: usize| LpSolution {
        status,
        x: vec![f64::NAN; n],
        objective: f64::NAN,
        duals_eq: vec![],
        duals_in: vec![],
        reduced_costs: vec![],
        basis: Basis {
            basic: vec![],
            status: vec![],
        },
        primal_degenerate: false,
        dual_degenerate: false,
        iterations,
    };

    if phase1_cost.iter().any(|&c| c != 0.0) {
        tab.optimize(&phase1_cost, &mut iterations, limit);
        tab.refresh(&a_full, &b);
        let infeas: f64 = (0..m).map(|i| tab.value(first_art + i).max(0.0)).sum();
        let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > FEAS_TOL * scale {
            return Ok(failed(LpStatus::Infeasible, iterations));
        }
    }
    for i in 0..m {
        let j = first_art + i;
        tab.hi[j] = 0.0;
        if tab.status[j] != VarStatus::Basic {
            tab.status[j] = VarStatus::AtLower;
        }
    }

    let mut cost = p.c.clone();
    cost.extend(std::iter::repeat_n(0.0, m_in + m));
    if !tab.optimize(&cost, &mut iterations, limit) {
        return Ok(failed(LpStatus::Unbounded, iterations));
    }
    tab.refresh(&a_full, &b);

    // snap basic values onto bounds they sit on within tolerance
    for i in 0..m {
        let j = tab.basic[i];
        let v = tab.xb[i];
        let tol = FEAS_TOL * (1.0 + v.abs());
        if (v - tab.lo[j]).abs() <= tol {
            tab.xb[i] = tab.lo[j];
        } else if (v - tab.hi[j]).abs() <= tol {
            tab.xb[i] = tab.hi[j];
        }
    }

    let mut xfull = vec![0.0; ncols];
    for j in 0..ncols {
        if tab.status[j] != VarStatus::Basic {
            xfull[j] = tab.nonbasic_value(j);
        }
    }
    for i in 0..m {
        xfull[tab.basic[i]] = tab.xb[i];
    }
    let x = xfull[..n].to_vec();

    let d = tab.reduced_costs(&cost);
    // y_i = c_B^T B^{-1} e_i, read from the artificial columns
    let mut y = vec![0.0; m];
    for (k, yk) in y.iter_mut().enumerate() {
        let mut v = 0.0;
        for i in 0..m {
            v += cost[tab.basic[i]] * tab.at(i, first_art + k);
        }
        *yk = v / tab.art_sign[k];
    }

    let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let primal_degenerate = (0..m).any(|i| {
        let j = tab.basic[i];
        let v = tab.xb[i];
        (tab.lo[j].is_finite() && (v - tab.lo[j]).abs() <= 1e-9 * (1.0 + v.abs()))
            || (tab.hi[j].is_finite() && (v - tab.hi[j]).abs() <= 1e-9 * (1.0 + v.abs()))
    });
    let dual_degenerate = (0..first_art).any(|j| {
        tab.status[j] != VarStatus::Basic && tab.lo[j] != tab.hi[j] && d[j].abs() <= OPT_TOL * scale
    });

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: p.objective(&x),
        x,
        duals_eq: y[..m_eq].to_vec(),
        duals_in: y[m_eq..].to_vec(),
        reduced_costs: d[..n].to_vec(),
        basis: Basis {
            basic: tab.basic.clone(),
            status: tab.status[..first_art].to_vec(),
        },
        primal_degenerate,
        dual_degenerate,
        iterations,
    })
}

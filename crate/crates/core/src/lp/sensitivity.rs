use crate::error::{Error, Result};
use crate::lp::problem::{LpProblem, LpSolution, ParamTags, VarStatus};
use crate::Matrix;

/// `dx/dθ` of an optimal solution with the final basis held fixed.
///
/// Nonbasic variables follow the bound they sit on; basic variables follow
/// from `B x_B = b - N x_N`.
pub fn solution_sensitivity(p: &LpProblem, sol: &LpSolution, tags: &ParamTags) -> Result<Matrix> {
    if !sol.is_optimal() {
        return Err(Error::InvalidArgument("sensitivity requires an optimal solution".into()));
    }
    let n = p.n_vars();
    let m_eq = p.n_eq();
    let m_in = p.n_in();
    let m = m_eq + m_in;
    let np = tags.n_params();
    let dims_ok = tags.d_b_eq.shape() == (m_eq, np)
        && tags.d_b_in.shape() == (m_in, np)
        && tags.d_lo.shape() == (n, np)
        && tags.d_hi.shape() == (n, np);
    if !dims_ok {
        return Err(Error::Dimension("parameter tags do not match the problem".into()));
    }

    let mut dx = Matrix::zeros(n, np);
    for j in 0..n {
        match sol.basis.status[j] {
            VarStatus::AtLower => dx.set_row(j, &tags.d_lo.row(j)),
            VarStatus::AtUpper => dx.set_row(j, &tags.d_hi.row(j)),
            VarStatus::Basic | VarStatus::Free => {}
        }
    }
    if m == 0 {
        return Ok(dx);
    }

    // rhs = db - A_N dx_N (slack and artificial columns never move)
    let mut rhs = Matrix::zeros(m, np);
    rhs.rows_mut(0, m_eq).copy_from(&tags.d_b_eq);
    rhs.rows_mut(m_eq, m_in).copy_from(&tags.d_b_in);
    for j in 0..n {
        if sol.basis.status[j] == VarStatus::Basic {
            continue;
        }
        let row = dx.row(j).clone_owned();
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        for i in 0..m_eq {
            let a = p.a_eq[(i, j)];
            if a != 0.0 {
                let mut r = rhs.row_mut(i);
                r -= &row * a;
            }
        }
        for i in 0..m_in {
            let a = p.a_in[(i, j)];
            if a != 0.0 {
                let mut r = rhs.row_mut(m_eq + i);
                r -= &row * a;
            }
        }
    }

    let mut bmat = Matrix::zeros(m, m);
    for (col, &c) in sol.basis.basic.iter().enumerate() {
        if c < n {
            for i in 0..m_eq {
                bmat[(i, col)] = p.a_eq[(i, c)];
            }
            for i in 0..m_in {
                bmat[(m_eq + i, col)] = p.a_in[(i, c)];
            }
        } else if c < n + m_in {
            bmat[(m_eq + c - n, col)] = 1.0;
        } else {
            bmat[(c - n - m_in, col)] = 1.0;
        }
    }
    let dxb = bmat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Dimension("optimal basis is singular".into()))?;
    for (row, &c) in sol.basis.basic.iter().enumerate() {
        if c < n {
            dx.set_row(c, &dxb.row(row));
        }
    }
    Ok(dx)
}

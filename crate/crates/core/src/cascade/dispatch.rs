use nalgebra::DVector;

use crate::error::Result;
use crate::grid::{DcModel, NetworkCase, SystemState, Topology};
use crate::lp::{solution_sensitivity, solve_lp, LpProblem, LpSolution, ParamTags};
use crate::Matrix;

/// Weight of generation adjustment relative to its price in the target LP.
pub const TARGET_GEN_WEIGHT: f64 = 1e-3;
const NEAR_LIMIT: f64 = 0.9;
const LIMIT_TOL: f64 = 1e-7;
const MAX_ROUNDS: usize = 40;

/// Re-dispatch target and its sensitivity to the post-outage state.
#[derive(Debug, Clone)]
pub struct TargetDispatch {
    pub target: SystemState,
    /// `dx*/dx'`.
    pub jacobian: Matrix,
    /// Shed-all fallback used because the LP was infeasible.
    pub fallback: bool,
    pub degenerate: bool,
    /// Branch limits present in the final LP.
    pub limit_rows: Vec<usize>,
}

/// Outcome of the ramp-limited move toward the target.
#[derive(Debug, Clone)]
pub struct Execution {
    pub state: SystemState,
    pub cost: f64,
    /// `dx/dx'` and `dx/dx*`.
    pub d_prime: Matrix,
    pub d_target: Matrix,
    /// `dC_R/dx'` and `dC_R/dx*` including the response of `x`.
    pub cost_d_prime: DVector<f64>,
    pub cost_d_target: DVector<f64>,
    /// The LP was infeasible and the state was left unchanged.
    pub emergency: bool,
    pub degenerate: bool,
}

/// Shed and adjustment split of a state change: `from -> to`.
///
/// Load reduction is priced at `c_D` and generation movement at `c_G` per MW.
pub fn adjustment_cost(case: &NetworkCase, from: &SystemState, to: &SystemState) -> f64 {
    let mut cost = 0.0;
    for l in 0..case.n_loads() {
        cost += case.shed_cost(l) * (from.load(l) - to.load(l));
    }
    for g in 0..case.n_gens() {
        cost += case.gen_cost(g) * (to.gen(g) - from.gen(g)).abs();
    }
    cost
}

/// Balance rows per island with any load or generation: `sum(u - v) + sum(s) = rhs`.
struct Layout {
    nl: usize,
    ng: usize,
}

impl Layout {
    fn s(&self, l: usize) -> usize {
        l
    }
    fn u(&self, g: usize) -> usize {
        self.nl + g
    }
    fn v(&self, g: usize) -> usize {
        self.nl + self.ng + g
    }
    fn n(&self) -> usize {
        self.nl + 2 * self.ng
    }
    /// `E`: `x* = x' + E z`.
    fn embedding(&self) -> Matrix {
        let mut e = Matrix::zeros(self.nl + self.ng, self.n());
        for l in 0..self.nl {
            e[(l, self.s(l))] = -1.0;
        }
        for g in 0..self.ng {
            e[(self.nl + g, self.u(g))] = 1.0;
            e[(self.nl + g, self.v(g))] = -1.0;
        }
        e
    }
}

/// Builds the shed/adjust LP around `base` on `topo` without branch rows.
/// `prices` are `(c_s, c_u, c_v)` per variable block.
pub(crate) struct AdjustLp {
    pub problem: LpProblem,
    pub tags: ParamTags,
    pub embedding: Matrix,
    pub flow_sens: Matrix,
    pub base_flows: Vec<f64>,
}

pub(crate) fn adjust_lp(
    case: &NetworkCase,
    topo: &Topology,
    base: &SystemState,
    shed_price: &dyn Fn(usize) -> f64,
    gen_price: &dyn Fn(usize) -> f64,
) -> Result<AdjustLp> {
    let nl = case.n_loads();
    let ng = case.n_gens();
    let dim = nl + ng;
    let lay = Layout { nl, ng };
    let mut c = vec![0.0; lay.n()];
    for l in 0..nl {
        c[lay.s(l)] = shed_price(l);
    }
    for g in 0..ng {
        c[lay.u(g)] = gen_price(g);
        c[lay.v(g)] = gen_price(g);
    }
    let mut p = LpProblem::new(c);
    let mut d_hi = Matrix::zeros(lay.n(), dim);
    for l in 0..nl {
        p.hi[lay.s(l)] = base.load(l).max(0.0);
        if base.load(l) > 0.0 {
            d_hi[(lay.s(l), l)] = 1.0;
        }
    }
    for g in 0..ng {
        let gen = &case.generators[g];
        let isl = &topo.islands()[topo.island_of_bus(case.gen_bus(g))];
        if !isl.is_energized() {
            p.hi[lay.u(g)] = 0.0;
            p.hi[lay.v(g)] = 0.0;
            continue;
        }
        let up = gen.p_max - base.gen(g);
        let down = base.gen(g) - gen.p_min;
        p.hi[lay.u(g)] = up.max(0.0);
        p.hi[lay.v(g)] = down.max(0.0);
        if up > 0.0 {
            d_hi[(lay.u(g), nl + g)] = -1.0;
        }
        if down > 0.0 {
            d_hi[(lay.v(g), nl + g)] = 1.0;
        }
    }
    let mut d_b_eq_rows = Vec::new();
    for isl in topo.islands() {
        if isl.loads.is_empty() && isl.gens.is_empty() {
            continue;
        }
        let mut row = vec![0.0; lay.n()];
        let mut rhs = 0.0;
        let mut drow = vec![0.0; dim];
        for &l in &isl.loads {
            row[lay.s(l)] = 1.0;
            rhs += base.load(l);
            drow[l] = 1.0;
        }
        for &g in &isl.gens {
            row[lay.u(g)] = 1.0;
            row[lay.v(g)] = -1.0;
            rhs -= base.gen(g);
            drow[nl + g] = -1.0;
        }
        p.push_eq(&row, rhs);
        d_b_eq_rows.push(drow);
    }
    let model = DcModel::new(case, topo)?;
    let flow_sens = model.flow_sensitivity();
    let base_flows = model.solve(base).flows;
    let mut tags = ParamTags::zeros(&p, dim);
    tags.d_hi = d_hi;
    for (i, r) in d_b_eq_rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            tags.d_b_eq[(i, j)] = v;
        }
    }
    Ok(AdjustLp {
        problem: p,
        tags,
        embedding: lay.embedding(),
        flow_sens,
        base_flows,
    })
}

/// Relative headroom below which a branch counts as exactly on its limit.
const SNAP_TOL: f64 = 1e-9;

impl AdjustLp {
    /// Adds `row . z <= rhs` with no parameter dependence.
    pub fn push_fixed_row(&mut self, row: &[f64], rhs: f64) {
        self.problem.push_in(row, rhs);
        let n = self.tags.d_b_in.nrows();
        self.tags.d_b_in = self.tags.d_b_in.clone().insert_rows(n, 1, 0.0);
    }

    /// `x = base + E z`.
    pub fn state(&self, base: &SystemState, z: &[f64]) -> SystemState {
        let shift = &self.embedding * DVector::from_column_slice(z);
        SystemState::from_vec(
            base.n_loads(),
            base.as_slice().iter().zip(shift.iter()).map(|(a, b)| a + b).collect(),
        )
    }

    fn push_limit(&mut self, case: &NetworkCase, k: usize) {
        let fmax = case.branches[k].rate_mw;
        let coef = self.flow_sens.row(k) * &self.embedding;
        let row: Vec<f64> = coef.iter().copied().collect();
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        let f0 = self.base_flows[k];
        let dim = self.flow_sens.ncols();
        // a flow left on its limit by an earlier dispatch keeps an exact zero
        // slack, so rounding noise cannot pick the degenerate basis
        let snap = |r: f64| if r.abs() <= SNAP_TOL * fmax { 0.0 } else { r };
        self.problem.push_in(&row, snap(fmax - f0));
        self.problem.push_in(&neg, snap(fmax + f0));
        let mut d = self.tags.d_b_in.clone().insert_rows(self.tags.d_b_in.nrows(), 2, 0.0);
        let r = d.nrows() - 2;
        for j in 0..dim {
            d[(r, j)] = -self.flow_sens[(k, j)];
            d[(r + 1, j)] = self.flow_sens[(k, j)];
        }
        self.tags.d_b_in = d;
    }

    /// Solves with branch limits added lazily. Returns the solution and the
    /// branch rows used, or `None` when infeasible.
    pub fn solve_with_limits(
        &mut self,
        case: &NetworkCase,
        topo: &Topology,
    ) -> Result<Option<(LpSolution, Vec<usize>)>> {
        let mut rows: Vec<usize> = (0..case.n_branches())
            .filter(|&k| {
                topo.in_service(k) && self.base_flows[k].abs() >= NEAR_LIMIT * case.branches[k].rate_mw
            })
            .collect();
        for &k in &rows {
            self.push_limit(case, k);
        }
        for _ in 0..MAX_ROUNDS {
            let sol = solve_lp(&self.problem)?;
            if !sol.is_optimal() {
                return Ok(None);
            }
            let z = DVector::from_column_slice(&sol.x);
            let flows = DVector::from_column_slice(&self.base_flows) + &self.flow_sens * (&self.embedding * z);
            let violated: Vec<usize> = (0..case.n_branches())
                .filter(|&k| {
                    topo.in_service(k)
                        && !rows.contains(&k)
                        && flows[k].abs() > case.branches[k].rate_mw * (1.0 + 1e-9) + LIMIT_TOL
                })
                .collect();
            if violated.is_empty() {
                return Ok(Some((sol, rows)));
            }
            for &k in &violated {
                self.push_limit(case, k);
                rows.push(k);
            }
        }
        Ok(None)
    }
}

/// Least-shedding DC-OPF target from the post-outage state `x'`.
pub fn dispatch_target(case: &NetworkCase, topo: &Topology, x_prime: &SystemState) -> Result<TargetDispatch> {
    let dim = x_prime.dim();
    let mut lp = adjust_lp(
        case,
        topo,
        x_prime,
        &|l| case.shed_cost(l),
        &|g| TARGET_GEN_WEIGHT * case.gen_cost(g),
    )?;
    match lp.solve_with_limits(case, topo)? {
        Some((sol, rows)) => {
            let z = DVector::from_column_slice(&sol.x);
            let shift = &lp.embedding * z;
            let target = SystemState::from_vec(
                x_prime.n_loads(),
                x_prime.as_slice().iter().zip(shift.iter()).map(|(a, b)| a + b).collect(),
            );
            let dz = solution_sensitivity(&lp.problem, &sol, &lp.tags)?;
            let jacobian = Matrix::identity(dim, dim) + &lp.embedding * dz;
            Ok(TargetDispatch {
                target,
                jacobian,
                fallback: false,
                degenerate: sol.degenerate(),
                limit_rows: rows,
            })
        }
        None => Ok(TargetDispatch {
            target: SystemState::from_vec(x_prime.n_loads(), vec![0.0; dim]),
            jacobian: Matrix::zeros(dim, dim),
            fallback: true,
            degenerate: false,
            limit_rows: Vec::new(),
        }),
    }
}

/// Value and `d/dx'_g` of the ramp window ends of generator `g`.
fn ramp_window(case: &NetworkCase, g: usize, p_prime: f64, tau: f64) -> ((f64, f64), (f64, f64)) {
    let gen = &case.generators[g];
    let reach = tau * gen.ramp_mw_per_min;
    let (mut lo, mut dlo) = if p_prime - reach > gen.p_min {
        (p_prime - reach, 1.0)
    } else {
        (gen.p_min, 0.0)
    };
    if lo > p_prime {
        lo = p_prime;
        dlo = 1.0;
    }
    let (mut hi, mut dhi) = if p_prime + reach < gen.p_max {
        (p_prime + reach, 1.0)
    } else {
        (gen.p_max, 0.0)
    };
    if hi < p_prime {
        hi = p_prime;
        dhi = 1.0;
    }
    ((lo, dlo), (hi, dhi))
}

/// Ramp-limited re-dispatch over one interval `tau` (min) from `x'` toward `x*`.
pub fn dispatch_execute(
    case: &NetworkCase,
    topo: &Topology,
    x_prime: &SystemState,
    x_target: &SystemState,
    tau: f64,
) -> Result<Execution> {
    let nl = case.n_loads();
    let ng = case.n_gens();
    let dim = nl + ng;
    // variables: [P_d (nl); u (ng); v (ng)], P_g = P*_g + u - v
    let (iu, iv) = (|g: usize| nl + g, |g: usize| nl + ng + g);
    let nv = nl + 2 * ng;
    let mut c = vec![0.0; nv];
    for l in 0..nl {
        c[l] = case.shed_cost(l);
    }
    for g in 0..ng {
        c[iu(g)] = case.gen_cost(g);
        c[iv(g)] = case.gen_cost(g);
    }
    let mut p = LpProblem::new(c);
    // parameters: [x' (dim); x* (dim)]
    let np = 2 * dim;
    let mut d_lo = Matrix::zeros(nv, np);
    let mut d_hi = Matrix::zeros(nv, np);
    for l in 0..nl {
        let (a, t) = (x_prime.load(l), x_target.load(l));
        p.lo[l] = t;
        d_lo[(l, dim + l)] = 1.0;
        if a > t {
            p.hi[l] = a;
            d_hi[(l, l)] = 1.0;
        } else {
            p.hi[l] = t;
            d_hi[(l, dim + l)] = 1.0;
        }
    }
    for g in 0..ng {
        let ((lo, dlo), (hi, dhi)) = ramp_window(case, g, x_prime.gen(g), tau);
        let t = x_target.gen(g);
        let (xg, tg) = (nl + g, dim + nl + g);
        let set = |m: &mut Matrix, var: usize, dprime: f64, dtarget: f64| {
            m[(var, xg)] = dprime;
            m[(var, tg)] = dtarget;
        };
        if lo - t > 0.0 {
            p.lo[iu(g)] = lo - t;
            set(&mut d_lo, iu(g), dlo, -1.0);
        }
        if hi - t > 0.0 {
            p.hi[iu(g)] = hi - t;
            set(&mut d_hi, iu(g), dhi, -1.0);
        } else {
            p.hi[iu(g)] = 0.0;
        }
        if t - hi > 0.0 {
            p.lo[iv(g)] = t - hi;
            set(&mut d_lo, iv(g), -dhi, 1.0);
        }
        if t - lo > 0.0 {
            p.hi[iv(g)] = t - lo;
            set(&mut d_hi, iv(g), -dlo, 1.0);
        } else {
            p.hi[iv(g)] = 0.0;
        }
    }
    let mut beq_rows = Vec::new();
    for isl in topo.islands() {
        if isl.loads.is_empty() && isl.gens.is_empty() {
            continue;
        }
        let mut row = vec![0.0; nv];
        let mut rhs = 0.0;
        let mut drow = vec![0.0; np];
        for &l in &isl.loads {
            row[l] = -1.0;
        }
        for &g in &isl.gens {
            row[iu(g)] = 1.0;
            row[iv(g)] = -1.0;
            rhs -= x_target.gen(g);
            drow[dim + nl + g] = -1.0;
        }
        p.push_eq(&row, rhs);
        beq_rows.push(drow);
    }
    let mut tags = ParamTags::zeros(&p, np);
    tags.d_lo = d_lo;
    tags.d_hi = d_hi;
    for (i, r) in beq_rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            tags.d_b_eq[(i, j)] = v;
        }
    }

    let sol = solve_lp(&p)?;
    if !sol.is_optimal() {
        return Ok(Execution {
            state: x_prime.clone(),
            cost: 0.0,
            d_prime: Matrix::identity(dim, dim),
            d_target: Matrix::zeros(dim, dim),
            cost_d_prime: DVector::zeros(dim),
            cost_d_target: DVector::zeros(dim),
            emergency: true,
            degenerate: false,
        });
    }
    let dz = solution_sensitivity(&p, &sol, &tags)?;
    let mut values = Vec::with_capacity(dim);
    values.extend_from_slice(&sol.x[..nl]);
    for g in 0..ng {
        values.push(x_target.gen(g) + sol.x[iu(g)] - sol.x[iv(g)]);
    }
    let state = SystemState::from_vec(nl, values);
    // dx/dθ
    let mut dx = Matrix::zeros(dim, np);
    for l in 0..nl {
        dx.set_row(l, &dz.row(l));
    }
    for g in 0..ng {
        let mut r = dz.row(iu(g)) - dz.row(iv(g));
        r[dim + nl + g] += 1.0;
        dx.set_row(nl + g, &r);
    }
    let cost = adjustment_cost(case, x_prime, &state);
    // dC_R/dθ = direct x' terms + price-weighted dx
    let mut weight = DVector::zeros(dim);
    let mut direct = DVector::zeros(np);
    for l in 0..nl {
        weight[l] = -case.shed_cost(l);
        direct[l] = case.shed_cost(l);
    }
    for g in 0..ng {
        let diff = state.gen(g) - x_prime.gen(g);
        let sign = if diff.abs() <= 1e-9 { 0.0 } else { diff.signum() };
        weight[nl + g] = sign * case.gen_cost(g);
        direct[nl + g] = -sign * case.gen_cost(g);
    }
    let dcost = (weight.transpose() * &dx).transpose() + direct;
    Ok(Execution {
        state,
        cost,
        d_prime: dx.columns(0, dim).clone_owned(),
        d_target: dx.columns(dim, dim).clone_owned(),
        cost_d_prime: dcost.rows(0, dim).clone_owned(),
        cost_d_target: dcost.rows(dim, dim).clone_owned(),
        emergency: false,
        degenerate: sol.degenerate(),
    })
}

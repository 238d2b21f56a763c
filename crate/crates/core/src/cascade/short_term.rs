use nalgebra::DVector;

use crate::error::Result;
use crate::grid::{DcModel, NetworkCase, SystemState, Topology};
use crate::Matrix;

/// Default cap on fast-process iterations.
pub const MAX_FAST_EVENTS: usize = 50;
const BALANCE_TOL: f64 = 1e-9;

/// How an island was brought back into balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BalanceAction {
    Shed,
    Curtail,
    /// No online generation: all load in the island is lost.
    Blackout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastEvent {
    /// Branches tripped at the end of this event.
    pub tripped: Vec<usize>,
    /// `(island lowest bus index, action)` for every island rebalanced.
    pub actions: Vec<(usize, BalanceAction)>,
    pub shed_mw: f64,
    pub cost: f64,
    /// State after rebalancing, before the trips take effect.
    pub state: SystemState,
}

/// Result of the deterministic overload-trip and load-shedding process.
#[derive(Debug, Clone)]
pub struct ShortTimescaleTrace {
    pub initial: SystemState,
    pub events: Vec<FastEvent>,
    pub final_state: SystemState,
    pub topology: Topology,
    pub cost: f64,
    /// `dx'/dx` with every event's trip set and balancing mode frozen.
    pub jacobian: Matrix,
    /// `dC_F/dx`.
    pub cost_gradient: DVector<f64>,
    pub truncated: bool,
}

impl ShortTimescaleTrace {
    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn tripped(&self) -> Vec<usize> {
        self.events.iter().flat_map(|e| e.tripped.iter().copied()).collect()
    }
}

struct Balance {
    state: SystemState,
    jacobian: Matrix,
    cost: f64,
    cost_gradient: DVector<f64>,
    shed: f64,
    actions: Vec<(usize, BalanceAction)>,
}

/// Proportional per-island balancing. Load is scaled by `G/D` when short of
/// generation, generation by `D/G` when in surplus.
fn balance(case: &NetworkCase, topo: &Topology, x: &SystemState) -> Balance {
    let dim = x.dim();
    let nl = x.n_loads();
    let mut out = x.clone();
    let mut jac = Matrix::identity(dim, dim);
    let mut cost = 0.0;
    let mut grad = DVector::zeros(dim);
    let mut shed = 0.0;
    let mut actions = Vec::new();
    for isl in topo.islands() {
        let d: f64 = isl.loads.iter().map(|&l| x.load(l)).sum();
        let g: f64 = isl.gens.iter().map(|&k| x.gen(k)).sum();
        if !isl.is_energized() {
            if d == 0.0 && g == 0.0 {
                continue;
            }
            for &l in &isl.loads {
                let c = case.shed_cost(l);
                cost += c * x.load(l);
                grad[l] += c;
                shed += x.load(l);
                out.set_load(l, 0.0);
                jac[(l, l)] = 0.0;
            }
            for &k in &isl.gens {
                out.set_gen(k, 0.0);
                jac[(nl + k, nl + k)] = 0.0;
            }
            actions.push((isl.buses[0], BalanceAction::Blackout));
            continue;
        }
        if (g - d).abs() <= BALANCE_TOL * d.max(1.0) {
            continue;
        }
        if d > g {
            let ratio = g / d;
            // weighted load sum drives the cost gradient
            let wsum: f64 = isl.loads.iter().map(|&l| case.shed_cost(l) * x.load(l)).sum();
            for &l in &isl.loads {
                let c = case.shed_cost(l);
                cost += c * x.load(l) * (1.0 - ratio);
                out.set_load(l, x.load(l) * ratio);
                grad[l] += c * (1.0 - ratio) + wsum * g / (d * d);
                for &j in &isl.loads {
                    jac[(l, j)] = if l == j { ratio } else { 0.0 } - x.load(l) * g / (d * d);
                }
                for &k in &isl.gens {
                    jac[(l, nl + k)] = x.load(l) / d;
                }
            }
            for &k in &isl.gens {
                grad[nl + k] -= wsum / d;
            }
            shed += d - g;
            actions.push((isl.buses[0], BalanceAction::Shed));
        } else {
            let ratio = d / g;
            for &k in &isl.gens {
                out.set_gen(k, x.gen(k) * ratio);
                for &j in &isl.gens {
                    jac[(nl + k, nl + j)] = if k == j { ratio } else { 0.0 } - x.gen(k) * d / (g * g);
                }
                for &l in &isl.loads {
                    jac[(nl + k, l)] = x.gen(k) / g;
                }
            }
            actions.push((isl.buses[0], BalanceAction::Curtail));
        }
    }
    Balance {
        state: out,
        jacobian: jac,
        cost,
        cost_gradient: grad,
        shed,
        actions,
    }
}

/// Branches above `trip_factor * F^max`.
fn overloaded(case: &NetworkCase, topo: &Topology, flows: &[f64]) -> Vec<usize> {
    let trip = case.failure_rate.trip_factor;
    (0..case.n_branches())
        .filter(|&k| topo.in_service(k) && flows[k].abs() > trip * case.branches[k].rate_mw)
        .collect()
}

/// Runs rebalance / solve / trip rounds on `topo` until no branch exceeds
/// its trip threshold.
pub fn short_timescale_process(
    case: &NetworkCase,
    topo: &Topology,
    x: &SystemState,
    max_events: usize,
) -> Result<ShortTimescaleTrace> {
    let dim = x.dim();
    let nl = x.n_loads();
    let mut state = x.clone();
    let mut topo = topo.clone();
    let mut jac = Matrix::identity(dim, dim);
    let mut grad = DVector::zeros(dim);
    let mut cost = 0.0;
    let mut events = Vec::new();
    let mut truncated = false;
    loop {
        let bal = balance(case, &topo, &state);
        // chain: dC += dc_k * J_{<k}, J = J_k * J_{<k}
        grad += (bal.cost_gradient.transpose() * &jac).transpose();
        jac = &bal.jacobian * &jac;
        cost += bal.cost;
        state = bal.state;
        let flows = DcModel::new(case, &topo)?.solve(&state).flows;
        let trips = overloaded(case, &topo, &flows);
        let acted = !bal.actions.is_empty();
        if trips.is_empty() {
            if acted {
                events.push(FastEvent {
                    tripped: Vec::new(),
                    actions: bal.actions,
                    shed_mw: bal.shed,
                    cost: bal.cost,
                    state: state.clone(),
                });
            }
            break;
        }
        if events.len() + 1 >= max_events {
            // give up on the islands still overloaded: all their load is lost
            truncated = true;
            let mut hit = vec![false; topo.islands().len()];
            for &k in &trips {
                hit[topo.island_of_bus(case.branch_ends(k).0)] = true;
            }
            let mut shed = bal.shed;
            let mut extra = 0.0;
            let mut dc = DVector::zeros(dim);
            let mut kill = Matrix::identity(dim, dim);
            for (i, isl) in topo.islands().iter().enumerate() {
                if !hit[i] {
                    continue;
                }
                for &l in &isl.loads {
                    let c = case.shed_cost(l);
                    extra += c * state.load(l);
                    dc[l] = c;
                    shed += state.load(l);
                    state.set_load(l, 0.0);
                    kill[(l, l)] = 0.0;
                }
                for &g in &isl.gens {
                    state.set_gen(g, 0.0);
                    kill[(nl + g, nl + g)] = 0.0;
                }
            }
            grad += (dc.transpose() * &jac).transpose();
            jac = &kill * &jac;
            cost += extra;
            events.push(FastEvent {
                tripped: Vec::new(),
                actions: bal.actions,
                shed_mw: shed,
                cost: bal.cost + extra,
                state: state.clone(),
            });
            break;
        }
        events.push(FastEvent {
            tripped: trips.clone(),
            actions: bal.actions,
            shed_mw: bal.shed,
            cost: bal.cost,
            state: state.clone(),
        });
        topo = topo.apply_outage(case, &trips).0;
    }
    Ok(ShortTimescaleTrace {
        initial: x.clone(),
        events,
        final_state: state,
        topology: topo,
        cost,
        jacobian: jac,
        cost_gradient: grad,
        truncated,
    })
}

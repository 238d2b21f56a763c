use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::case::NetworkCase;
use crate::grid::state::SystemState;
use crate::grid::topology::Topology;
use crate::Matrix;

/// Bus angles (rad) and branch flows (MW), oriented from -> to.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub angles: Vec<f64>,
    pub flows: Vec<f64>,
}

struct IslandFactor {
    /// Inverse of the reduced susceptance matrix over the non-reference buses.
    inverse: DMatrix<f64>,
}

/// Factorized DC network for one topology: one reduced susceptance system
/// per energized island, reference bus eliminated.
pub struct DcModel {
    base_mva: f64,
    /// bus -> (island factor index, row in the reduced system); `None` for
    /// reference buses and buses of de-energized islands.
    slot: Vec<Option<(usize, usize)>>,
    factors: Vec<IslandFactor>,
    active: Vec<bool>,
    ends: Vec<(usize, usize)>,
    admittance: Vec<f64>,
    gen_bus: Vec<usize>,
    load_bus: Vec<usize>,
}

impl DcModel {
    pub fn new(case: &NetworkCase, topo: &Topology) -> Result<Self> {
        let nb = case.n_buses();
        let mut slot = vec![None; nb];
        let mut factors = Vec::new();
        let mut energized_bus = vec![false; nb];
        for isl in topo.islands() {
            let Some(reference) = isl.reference else { continue };
            for &b in &isl.buses {
                energized_bus[b] = true;
            }
            let nonref: Vec<usize> = isl.buses.iter().copied().filter(|&b| b != reference).collect();
            let fi = factors.len();
            for (row, &b) in nonref.iter().enumerate() {
                slot[b] = Some((fi, row));
            }
            let m = nonref.len();
            let mut bmat = DMatrix::<f64>::zeros(m, m);
            for k in 0..case.n_branches() {
                if !topo.in_service(k) {
                    continue;
                }
                let (u, v) = case.branch_ends(k);
                if topo.island_of_bus(u) != topo.island_of_bus(reference) {
                    continue;
                }
                let y = case.branches[k].admittance;
                let su = slot[u].filter(|s| s.0 == fi).map(|s| s.1);
                let sv = slot[v].filter(|s| s.0 == fi).map(|s| s.1);
                if let Some(i) = su {
                    bmat[(i, i)] += y;
                }
                if let Some(j) = sv {
                    bmat[(j, j)] += y;
                }
                if let (Some(i), Some(j)) = (su, sv) {
                    bmat[(i, j)] -= y;
                    bmat[(j, i)] -= y;
                }
            }
            let inverse = if m == 0 {
                DMatrix::zeros(0, 0)
            } else {
                bmat.lu().try_inverse().ok_or(Error::SingularNetwork {
                    reference_bus: case.buses[reference].id,
                })?
            };
            factors.push(IslandFactor { inverse });
        }
        let active = (0..case.n_branches())
            .map(|k| topo.in_service(k) && energized_bus[case.branch_ends(k).0])
            .collect();
        Ok(DcModel {
            base_mva: case.base_mva,
            slot,
            factors,
            active,
            ends: (0..case.n_branches()).map(|k| case.branch_ends(k)).collect(),
            admittance: case.branches.iter().map(|b| b.admittance).collect(),
            gen_bus: (0..case.n_gens()).map(|g| case.gen_bus(g)).collect(),
            load_bus: (0..case.n_loads()).map(|l| case.load_bus(l)).collect(),
        })
    }

    fn injections(&self, state: &SystemState) -> Vec<f64> {
        let mut p = vec![0.0; self.slot.len()];
        for (g, &b) in self.gen_bus.iter().enumerate() {
            p[b] += state.gen(g);
        }
        for (l, &b) in self.load_bus.iter().enumerate() {
            p[b] -= state.load(l);
        }
        p
    }

    pub fn solve(&self, state: &SystemState) -> FlowSolution {
        let p = self.injections(state);
        let nb = self.slot.len();
        let mut angles = vec![0.0; nb];
        for (fi, f) in self.factors.iter().enumerate() {
            let m = f.inverse.nrows();
            if m == 0 {
                continue;
            }
            let mut rhs = DVector::<f64>::zeros(m);
            for (b, s) in self.slot.iter().enumerate() {
                if let Some((i, row)) = *s {
                    if i == fi {
                        rhs[row] = p[b] / self.base_mva;
                    }
                }
            }
            let theta = &f.inverse * rhs;
            for (b, s) in self.slot.iter().enumerate() {
                if let Some((i, row)) = *s {
                    if i == fi {
                        angles[b] = theta[row];
                    }
                }
            }
        }
        let flows = (0..self.ends.len())
            .map(|k| {
                if !self.active[k] {
                    return 0.0;
                }
                let (u, v) = self.ends[k];
                self.base_mva * self.admittance[k] * (angles[u] - angles[v])
            })
            .collect();
        FlowSolution { angles, flows }
    }

    /// Flow of branch `k` per MW injected at `bus` (withdrawn at the island reference).
    pub fn shift_factor(&self, k: usize, bus: usize) -> f64 {
        if !self.active[k] {
            return 0.0;
        }
        let (u, v) = self.ends[k];
        let Some((fi, col)) = self.slot[bus] else { return 0.0 };
        let inv = &self.factors[fi].inverse;
        let x = |b: usize| match self.slot[b] {
            Some((i, row)) if i == fi => inv[(row, col)],
            _ => 0.0,
        };
        self.admittance[k] * (x(u) - x(v))
    }

    /// Injection shift factors, `n_branches x n_buses`.
    pub fn ptdf(&self) -> Matrix {
        let nbr = self.ends.len();
        let nb = self.slot.len();
        let mut m = Matrix::zeros(nbr, nb);
        for k in 0..nbr {
            if !self.active[k] {
                continue;
            }
            for b in 0..nb {
                m[(k, b)] = self.shift_factor(k, b);
            }
        }
        m
    }

    /// `dF/d[P_d; P_g]`: load columns carry `-PTDF`, generator columns `+PTDF`.
    pub fn flow_sensitivity(&self) -> Matrix {
        let ptdf = self.ptdf();
        let nl = self.load_bus.len();
        let mut s = Matrix::zeros(self.ends.len(), nl + self.gen_bus.len());
        for (l, &b) in self.load_bus.iter().enumerate() {
            s.set_column(l, &(-ptdf.column(b)));
        }
        for (g, &b) in self.gen_bus.iter().enumerate() {
            s.set_column(nl + g, &ptdf.column(b));
        }
        s
    }
}

/// Solves the DC power flow of `state` on `topo`. De-energized islands carry no flow.
pub fn dc_power_flow(case: &NetworkCase, topo: &Topology, state: &SystemState) -> Result<FlowSolution> {
    Ok(DcModel::new(case, topo)?.solve(state))
}

/// Branch flow sensitivity to the state vector on `topo`.
pub fn flow_sensitivity(case: &NetworkCase, topo: &Topology) -> Result<Matrix> {
    Ok(DcModel::new(case, topo)?.flow_sensitivity())
}

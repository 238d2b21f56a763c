use serde::{Deserialize, Serialize};

use crate::grid::topology::Topology;

/// Dispatch state `x = [P_d; P_g]` in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    n_loads: usize,
    values: Vec<f64>,
}

impl SystemState {
    pub fn from_vec(n_loads: usize, values: Vec<f64>) -> Self {
        assert!(n_loads <= values.len());
        SystemState { n_loads, values }
    }

    pub fn from_parts(loads: &[f64], gens: &[f64]) -> Self {
        let mut values = loads.to_vec();
        values.extend_from_slice(gens);
        SystemState {
            n_loads: loads.len(),
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn n_loads(&self) -> usize {
        self.n_loads
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn loads(&self) -> &[f64] {
        &self.values[..self.n_loads]
    }

    pub fn gens(&self) -> &[f64] {
        &self.values[self.n_loads..]
    }

    pub fn load(&self, l: usize) -> f64 {
        self.values[l]
    }

    pub fn gen(&self, g: usize) -> f64 {
        self.values[self.n_loads + g]
    }

    pub fn set_load(&mut self, l: usize, v: f64) {
        self.values[l] = v;
    }

    pub fn set_gen(&mut self, g: usize, v: f64) {
        self.values[self.n_loads + g] = v;
    }

    pub fn total_load(&self) -> f64 {
        self.loads().iter().sum()
    }

    pub fn total_gen(&self) -> f64 {
        self.gens().iter().sum()
    }

    /// Generation minus load per island of `topo`.
    pub fn island_imbalance(&self, topo: &Topology) -> Vec<f64> {
        topo.islands()
            .iter()
            .map(|isl| {
                isl.gens.iter().map(|&g| self.gen(g)).sum::<f64>()
                    - isl.loads.iter().map(|&l| self.load(l)).sum::<f64>()
            })
            .collect()
    }

    pub fn perturbed(&self, j: usize, delta: f64) -> Self {
        let mut s = self.clone();
        s.values[j] += delta;
        s
    }
}

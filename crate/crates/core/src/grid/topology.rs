use crate::grid::case::NetworkCase;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Island {
    /// Bus indices, ascending.
    pub buses: Vec<usize>,
    /// Reference bus index; `None` for de-energized islands.
    pub reference: Option<usize>,
    pub loads: Vec<usize>,
    pub gens: Vec<usize>,
}

impl Island {
    pub fn is_energized(&self) -> bool {
        self.reference.is_some()
    }
}

/// In-service branch set with its island partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    in_service: Vec<bool>,
    island_of_bus: Vec<usize>,
    islands: Vec<Island>,
}

/// Returned by [`Topology::apply_outage`] when a requested branch was already out.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutageWarnings {
    pub already_out: Vec<usize>,
}

impl Topology {
    pub fn intact(case: &NetworkCase) -> Self {
        let mask = case.branches.iter().map(|b| b.in_service).collect();
        Self::from_mask(case, mask)
    }

    pub fn from_mask(case: &NetworkCase, in_service: Vec<bool>) -> Self {
        assert_eq!(in_service.len(), case.n_branches());
        let n = case.n_buses();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (k, &on) in in_service.iter().enumerate() {
            if on {
                let (a, b) = case.branch_ends(k);
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        // islands are numbered by their lowest bus index
        let mut island_of_bus = vec![usize::MAX; n];
        let mut islands: Vec<Island> = Vec::new();
        let mut root_to_island = vec![usize::MAX; n];
        for bus in 0..n {
            let r = find(&mut parent, bus);
            if root_to_island[r] == usize::MAX {
                root_to_island[r] = islands.len();
                islands.push(Island {
                    buses: Vec::new(),
                    reference: None,
                    loads: Vec::new(),
                    gens: Vec::new(),
                });
            }
            let isl = root_to_island[r];
            island_of_bus[bus] = isl;
            islands[isl].buses.push(bus);
        }
        for l in 0..case.n_loads() {
            islands[island_of_bus[case.load_bus(l)]].loads.push(l);
        }
        for g in 0..case.n_gens() {
            let bus = case.gen_bus(g);
            let isl = &mut islands[island_of_bus[bus]];
            isl.gens.push(g);
            if case.generators[g].p_max > 0.0 {
                let better = match isl.reference {
                    None => true,
                    Some(cur) => case.buses[bus].id < case.buses[cur].id,
                };
                if better {
                    isl.reference = Some(bus);
                }
            }
        }
        Topology {
            in_service,
            island_of_bus,
            islands,
        }
    }

    pub fn in_service(&self, k: usize) -> bool {
        self.in_service[k]
    }

    pub fn in_service_mask(&self) -> &[bool] {
        &self.in_service
    }

    pub fn out_of_service(&self) -> Vec<usize> {
        (0..self.in_service.len()).filter(|&k| !self.in_service[k]).collect()
    }

    pub fn islands(&self) -> &[Island] {
        &self.islands
    }

    pub fn island_of_bus(&self, bus: usize) -> usize {
        self.island_of_bus[bus]
    }

    /// Removes `branches` (indices), recomputing islands and references.
    pub fn apply_outage(&self, case: &NetworkCase, branches: &[usize]) -> (Topology, OutageWarnings) {
        let mut mask = self.in_service.clone();
        let mut warnings = OutageWarnings::default();
        for &k in branches {
            if mask[k] {
                mask[k] = false;
            } else {
                warnings.already_out.push(k);
            }
        }
        if warnings.already_out.len() == branches.len() {
            return (self.clone(), warnings);
        }
        (Topology::from_mask(case, mask), warnings)
    }
}

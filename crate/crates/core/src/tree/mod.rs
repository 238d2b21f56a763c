//! Markovian tree of mid-timescale outage sequences: forward search attempts
//! and backward risk updates.

mod node;

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use node::TreeNode;
pub(crate) use node::Outlook;

use crate::cascade::{node_outlook, rate_segment_signature, simulate_level, LevelOptions};
use crate::error::{Error, Result};
use crate::gradient::{backward_gradient_update, forward_step, ChainMatrix, Storage};
use crate::grid::{NetworkCase, SystemState, Topology};
use crate::Matrix;

pub const ROOT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Deterministic: unexplored child with the largest `Pr x` cost estimate.
    BestFirst,
    /// Children drawn with probability `Pr` from a seeded generator.
    Sampled,
    /// Depth-first over every child with nonzero probability.
    Exhaustive { reverse: bool },
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best-first" => Ok(Policy::BestFirst),
            "sampled" | "probability-sampled" => Ok(Policy::Sampled),
            "exhaustive" => Ok(Policy::Exhaustive { reverse: false }),
            "exhaustive-reverse" => Ok(Policy::Exhaustive { reverse: true }),
            other => Err(Error::InvalidArgument(format!("unknown search policy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::BestFirst => "best-first",
            Policy::Sampled => "sampled",
            Policy::Exhaustive { reverse: false } => "exhaustive",
            Policy::Exhaustive { reverse: true } => "exhaustive-reverse",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub attempts: usize,
    pub policy: Policy,
    pub seed: u64,
    /// Largest `(events)^depth` accepted for exhaustive search.
    pub exhaustive_limit: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            attempts: 1000,
            policy: Policy::BestFirst,
            seed: 0,
            exhaustive_limit: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    pub level: LevelOptions,
    /// Depth cap `n`.
    pub depth: usize,
    pub gradient: bool,
    pub storage: Storage,
    /// Treat the no-outage child as a path end.
    pub absorb_on_no_outage: bool,
}

/// Depth cap from the horizon and interval, rounded down.
pub fn depth_cap(t_max: f64, tau_d: f64) -> Result<usize> {
    if !(tau_d > 0.0) || !(t_max >= tau_d) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < tau_d <= t_max, got tau_d {tau_d}, t_max {t_max}"
        )));
    }
    Ok((t_max / tau_d + 1e-9).floor() as usize)
}

/// One finished attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    pub attempt: usize,
    pub subsequent_risk: f64,
    pub new_nodes: usize,
    pub path: Vec<usize>,
    /// `S^(0)` after the attempt, when tracked.
    pub root_gradient: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceHistory {
    pub attempts: Vec<AttemptRecord>,
}

/// Chain storage counters: entries actually stored and their dense equivalent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StorageStats {
    pub stored: usize,
    pub dense: usize,
}

pub struct MarkovTree {
    nodes: Vec<TreeNode>,
    opts: TreeOptions,
    dim: usize,
    leaf_cost_sum: f64,
    leaf_count: usize,
}

impl MarkovTree {
    /// Tree rooted at state `x^(0)` on `topo`.
    pub fn new(case: &NetworkCase, root_state: SystemState, topo: Topology, opts: TreeOptions) -> Result<Self> {
        if opts.depth == 0 {
            return Err(Error::InvalidArgument("tree depth must be at least 1".into()));
        }
        let dim = root_state.dim();
        let mut tree = MarkovTree {
            nodes: Vec::new(),
            opts,
            dim,
            leaf_cost_sum: 0.0,
            leaf_count: 0,
        };
        let chain = Matrix::identity(dim, dim);
        let terminal = root_state.total_load() <= 0.0;
        let outlook = if terminal {
            None
        } else {
            Some(tree.outlook(case, &root_state, &topo, Some(&chain))?)
        };
        tree.nodes.push(TreeNode {
            label: Vec::new(),
            level: 0,
            parent: None,
            event: 0,
            probability: 1.0,
            cost: 0.0,
            equivalent_cost: 0.0,
            subsequent_risk: 0.0,
            visited: false,
            gradient: DVector::zeros(dim),
            delta_cost: 0.0,
            children: BTreeMap::new(),
            terminal,
            complete: terminal,
            signature: outlook.as_ref().map_or(0, |o| o.segments),
            flagged: false,
            state: root_state,
            topology: topo,
            outlook,
            chain: if opts.gradient { Some(ChainMatrix::store(chain, opts.storage)) } else { None },
            d_probability: DVector::zeros(dim),
            d_cost: DVector::zeros(dim),
        });
        Ok(tree)
    }

    fn outlook(&self, case: &NetworkCase, x: &SystemState, topo: &Topology, chain: Option<&Matrix>) -> Result<Outlook> {
        let o = node_outlook(case, topo, x, self.opts.level.tau_d)?;
        let basis = match chain {
            Some(c) if self.opts.gradient && !o.gradient.is_zero() => {
                Some(ChainMatrix::store(&o.gradient.basis * c, self.opts.storage))
            }
            _ => None,
        };
        Ok(Outlook {
            probabilities: o.probabilities.by_event,
            weights: o.gradient.weights,
            basis,
            segments: if self.opts.level.record_signature { rate_segment_signature(&o.rates) } else { 0 },
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub(crate) fn node_mut(&mut self, id: usize) -> &mut TreeNode {
        &mut self.nodes[id]
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[ROOT]
    }

    pub fn options(&self) -> &TreeOptions {
        &self.opts
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    /// `R'` at the root.
    pub fn subsequent_risk(&self) -> f64 {
        self.nodes[ROOT].subsequent_risk
    }

    /// `S^(0)`.
    pub fn root_gradient(&self) -> &DVector<f64> {
        &self.nodes[ROOT].gradient
    }

    pub fn is_complete(&self) -> bool {
        self.nodes[ROOT].complete
    }

    pub fn any_flagged(&self) -> bool {
        self.nodes.iter().any(|n| n.flagged)
    }

    pub fn storage_stats(&self) -> StorageStats {
        let mut s = StorageStats::default();
        for n in &self.nodes {
            if let Some(c) = &n.chain {
                s.stored += c.stored_entries();
                s.dense += c.dense_entries();
            }
            if let Some(b) = n.outlook.as_ref().and_then(|o| o.basis.as_ref()) {
                s.stored += b.stored_entries();
                s.dense += b.dense_entries();
            }
        }
        s
    }

    /// Child of `parent` for `event`, simulating it if new. Returns `(id, created)`.
    pub fn child(&mut self, case: &NetworkCase, parent: usize, event: usize) -> Result<(usize, bool)> {
        if let Some(&id) = self.nodes[parent].children.get(&event) {
            return Ok((id, false));
        }
        let p = &self.nodes[parent];
        if p.terminal {
            return Err(Error::InvalidArgument(format!("node {} is terminal", p.label_string())));
        }
        let probability = p.child_probability(event);
        let level = p.level + 1;
        let rec = simulate_level(case, &p.topology, &p.state, event, &self.opts.level)?;
        let mut label = p.label.clone();
        label.push(event);
        let state = rec.state().clone();
        let topology = rec.topology().clone();
        let terminal = level >= self.opts.depth
            || state.total_load() <= 0.0
            || (self.opts.absorb_on_no_outage && event == 0);
        let (chain, d_probability, d_cost) = if self.opts.gradient {
            let parent_chain = p.chain.as_ref().expect("gradient nodes keep chains").to_dense();
            let d_probability = p
                .outlook
                .as_ref()
                .map_or_else(|| DVector::zeros(self.dim), |o| o.probability_gradient(event, self.dim));
            let step = forward_step(&rec, &parent_chain);
            (Some(step.state), d_probability, step.cost)
        } else {
            (None, DVector::zeros(self.dim), DVector::zeros(self.dim))
        };
        let outlook = if terminal {
            None
        } else {
            Some(self.outlook(case, &state, &topology, chain.as_ref())?)
        };
        let mut signature = rec.signature;
        if self.opts.level.record_signature {
            signature ^= outlook.as_ref().map_or(0, |o| o.segments);
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            label,
            level,
            parent: Some(parent),
            event,
            probability,
            cost: rec.cost,
            equivalent_cost: rec.cost,
            subsequent_risk: 0.0,
            visited: true,
            gradient: DVector::zeros(self.dim),
            delta_cost: 0.0,
            children: BTreeMap::new(),
            terminal,
            complete: terminal,
            signature,
            flagged: rec.flagged(),
            state,
            topology,
            outlook,
            chain: if terminal { None } else { chain.map(|c| ChainMatrix::store(c, self.opts.storage)) },
            d_probability,
            d_cost,
        });
        self.nodes[parent].children.insert(event, id);
        if terminal {
            self.leaf_cost_sum += rec.cost;
            self.leaf_count += 1;
        }
        Ok((id, true))
    }

    /// Events with nonzero probability from `id`, ascending.
    fn live_events(&self, id: usize) -> Vec<usize> {
        let probs = self.nodes[id].child_probabilities();
        (0..probs.len()).filter(|&e| probs[e] > 0.0).collect()
    }

    fn child_complete(&self, id: usize, event: usize) -> bool {
        self.nodes[id].children.get(&event).is_some_and(|&c| self.nodes[c].complete)
    }

    fn choose(&self, id: usize, policy: Policy, rng: &mut ChaCha8Rng) -> Option<usize> {
        let events = self.live_events(id);
        match policy {
            Policy::Exhaustive { reverse } => {
                let mut it: Box<dyn Iterator<Item = &usize>> =
                    if reverse { Box::new(events.iter().rev()) } else { Box::new(events.iter()) };
                it.find(|&&e| !self.child_complete(id, e)).copied()
            }
            Policy::BestFirst => {
                let estimate = if self.leaf_count > 0 {
                    self.leaf_cost_sum / self.leaf_count as f64
                } else {
                    1.0
                };
                let node = &self.nodes[id];
                let mut best: Option<(usize, f64)> = None;
                for &e in &events {
                    if self.child_complete(id, e) {
                        continue;
                    }
                    let value = match node.children.get(&e) {
                        Some(&c) => self.nodes[c].equivalent_cost.max(estimate),
                        None => estimate,
                    };
                    let score = node.child_probability(e) * value;
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((e, score));
                    }
                }
                best.map(|(e, _)| e)
            }
            Policy::Sampled => {
                let probs = self.nodes[id].child_probabilities();
                let total: f64 = events.iter().map(|&e| probs[e]).sum();
                if total <= 0.0 {
                    return None;
                }
                let mut target = rng.random::<f64>() * total;
                for &e in &events {
                    target -= probs[e];
                    if target < 0.0 {
                        return Some(e);
                    }
                }
                events.last().copied()
            }
        }
    }

    /// One root-to-end descent. Returns node ids along the path and how many were new.
    pub fn expand_path(&mut self, case: &NetworkCase, policy: Policy, rng: &mut ChaCha8Rng) -> Result<(Vec<usize>, usize)> {
        let mut path = vec![ROOT];
        let mut created = 0;
        self.nodes[ROOT].visited = false;
        let mut cur = ROOT;
        while !self.nodes[cur].terminal {
            let Some(event) = self.choose(cur, policy, rng) else { break };
            let (next, new) = self.child(case, cur, event)?;
            self.nodes[next].visited = new;
            created += usize::from(new);
            path.push(next);
            cur = next;
        }
        self.finish_path(&path);
        Ok((path, created))
    }

    /// Walks an explicit event sequence, creating missing nodes.
    pub fn replay_path(&mut self, case: &NetworkCase, events: &[usize]) -> Result<(Vec<usize>, usize)> {
        let mut path = vec![ROOT];
        let mut created = 0;
        self.nodes[ROOT].visited = false;
        let mut cur = ROOT;
        for &event in events {
            if self.nodes[cur].terminal {
                return Err(Error::InvalidArgument("path continues past a terminal node".into()));
            }
            if event >= self.nodes[cur].child_probabilities().len() {
                return Err(Error::InvalidArgument(format!("unknown event id {event}")));
            }
            let (next, new) = self.child(case, cur, event)?;
            self.nodes[next].visited = new;
            created += usize::from(new);
            path.push(next);
            cur = next;
        }
        self.finish_path(&path);
        Ok((path, created))
    }

    fn finish_path(&mut self, path: &[usize]) {
        self.backward_risk_update(path);
        if self.opts.gradient && path.iter().any(|&id| self.nodes[id].visited) {
            backward_gradient_update(self, path);
        }
        self.update_completeness(path);
    }

    /// Recomputes `C'` and `R'` from the children, leaf to root.
    pub fn backward_risk_update(&mut self, path: &[usize]) {
        for &id in path.iter().rev() {
            let mut risk = 0.0;
            for &c in self.nodes[id].children.values() {
                risk += self.nodes[c].probability * self.nodes[c].equivalent_cost;
            }
            let n = &mut self.nodes[id];
            n.subsequent_risk = risk;
            n.equivalent_cost = n.cost + risk;
        }
    }

    fn update_completeness(&mut self, path: &[usize]) {
        for &id in path.iter().rev() {
            if self.nodes[id].terminal {
                self.nodes[id].complete = true;
                continue;
            }
            let events = self.live_events(id);
            let done = events.iter().all(|&e| self.child_complete(id, e));
            self.nodes[id].complete = done;
        }
    }

    /// Runs up to `budget.attempts` descents, stopping early once every path is known.
    pub fn search(&mut self, case: &NetworkCase, budget: &SearchBudget) -> Result<ConvergenceHistory> {
        if let Policy::Exhaustive { .. } = budget.policy {
            let events = (case.n_branches() + 1) as f64;
            let size = events.powi(self.opts.depth as i32);
            if size > budget.exhaustive_limit {
                return Err(Error::InvalidArgument(format!(
                    "exhaustive search over {size:e} paths exceeds the limit {:e}",
                    budget.exhaustive_limit
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mut history = ConvergenceHistory::default();
        for attempt in 1..=budget.attempts {
            if self.is_complete() {
                break;
            }
            let (path, new_nodes) = self.expand_path(case, budget.policy, &mut rng)?;
            history.attempts.push(AttemptRecord {
                attempt,
                subsequent_risk: self.subsequent_risk(),
                new_nodes,
                path,
                root_gradient: self.opts.gradient.then(|| self.root_gradient().clone()),
            });
        }
        Ok(history)
    }

    /// `(C_0 + R', R')`.
    pub fn risk_estimate(&self, control_cost: f64) -> (f64, f64) {
        let r = self.subsequent_risk();
        (control_cost + r, r)
    }
}
